//! Thick-restarted Arnoldi for the largest-magnitude eigenvalues of a real operator.
//!
//! After each cycle the wanted Ritz vectors (real and imaginary parts of
//! complex pairs, so a conjugate pair is never split) are orthonormalized and
//! the Krylov relation is compressed onto them, Krylov-Schur style.

use faer::{c64, Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::pencil::LinearOperator;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArnoldiOptions {
    /// Defaults to `max(3k + 2, 20)`, capped at the operator dimension.
    pub krylov_dim: Option<usize>,
    /// Ritz pair accepted when its residual estimate is below `tol * |theta|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions { krylov_dim: None, tol: 1e-12, max_restarts: 200, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPairs {
    /// Ordered by decreasing magnitude.
    pub values: Vec<c64>,
    pub vectors: Vec<Col<c64>>,
    pub estimates: Vec<f64>,
    pub n_converged: usize,
    pub restarts: usize,
    /// Largest `||Q^T Q - I||_F` seen at the end of any cycle.
    pub orthogonality: f64,
    pub breakdown: bool,
}

pub fn default_krylov_dim(k: usize, n: usize) -> usize {
    (3 * k + 2).max(20).min(n)
}

fn two_pass_mgs(q: &Mat<f64>, ncols: usize, w: &mut Col<f64>, h: &mut [f64]) {
    for _ in 0..2 {
        for (i, hi) in h.iter_mut().enumerate().take(ncols) {
            let c = q.col(i).transpose() * w.as_ref();
            *hi += c;
            *w -= faer::Scale(c) * q.col(i);
        }
    }
}

fn orthogonality_error(q: &Mat<f64>, ncols: usize) -> f64 {
    let qs = q.subcols(0, ncols);
    let g = qs.transpose() * qs;
    (&g - Mat::<f64>::identity(ncols, ncols)).norm_l2()
}

fn is_real(z: c64, scale: f64) -> bool {
    z.im.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

pub fn restarted_arnoldi<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &ArnoldiOptions) -> Result<RitzPairs> {
    let n = op.dim();
    let m = opts.krylov_dim.unwrap_or_else(|| default_krylov_dim(k, n));
    if k == 0 || k >= m || m > n {
        return Err(Error::arg(format!("need 0 < k < krylov_dim <= n, got k={k}, krylov_dim={m}, n={n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("arnoldi tolerance must be positive"));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    rng.set_stream(0);
    let r = Col::from_fn(n, |_| rng.random::<f64>() - 0.5);
    // Starting from T r keeps the start vector inside the operator's range.
    let mut q0 = op.apply_to(&r);
    let nrm = q0.norm_l2();
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::numeric("operator annihilates the start vector"));
    }
    q0 /= nrm;

    let mut q = Mat::<f64>::zeros(n, m + 1);
    let mut h = Mat::<f64>::zeros(m + 1, m);
    q.col_mut(0).copy_from(&q0);
    let mut p = 0;
    let mut orthogonality: f64 = 0.0;

    for restart in 0..=opts.max_restarts {
        let mut m_eff = m;
        let mut breakdown = false;
        for j in p..m {
            let mut w = op.apply_to(&q.col(j).to_owned());
            let scale = w.norm_l2();
            let mut hj = vec![0.0; j + 1];
            two_pass_mgs(&q, j + 1, &mut w, &mut hj);
            for (i, v) in hj.into_iter().enumerate() {
                h[(i, j)] += v;
            }
            let beta = w.norm_l2();
            h[(j + 1, j)] = beta;
            if beta <= 1e-13 * scale.max(h.norm_max()) {
                m_eff = j + 1;
                breakdown = true;
                h[(j + 1, j)] = 0.0;
                break;
            }
            q.col_mut(j + 1).copy_from(&(w / beta));
        }
        orthogonality = orthogonality.max(orthogonality_error(&q, if breakdown { m_eff } else { m_eff + 1 }));

        let hm = h.submatrix(0, 0, m_eff, m_eff).to_owned();
        let beta = h[(m_eff, m_eff - 1)];
        let evd = hm.eigen().map_err(|e| Error::numeric(format!("projected eigenproblem failed: {e:?}")))?;
        let theta: Vec<c64> = evd.S().column_vector().iter().copied().collect();
        let y = evd.U();
        let mut order: Vec<usize> = (0..m_eff).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(theta[b].im.total_cmp(&theta[a].im)));

        let estimate = |i: usize| {
            let col = y.col(i);
            let nrm = col.norm_l2();
            beta.abs() * col[m_eff - 1].norm() / nrm
        };
        let want = k.min(m_eff);
        let n_converged = order[..want]
            .iter()
            .take_while(|&&i| theta[i].norm() > 0.0 && estimate(i) <= opts.tol * theta[i].norm())
            .count();

        if n_converged == want || breakdown || restart == opts.max_restarts {
            if n_converged < want && !breakdown {
                log::warn!("arnoldi: {n_converged} of {want} Ritz pairs converged after {restart} restarts");
            }
            let basis = q.subcols(0, m_eff);
            let mut values = Vec::with_capacity(want);
            let mut vectors = Vec::with_capacity(want);
            let mut estimates = Vec::with_capacity(want);
            for &i in &order[..want] {
                let yi = y.col(i);
                let re = basis * Col::from_fn(m_eff, |r| yi[r].re);
                let im = basis * Col::from_fn(m_eff, |r| yi[r].im);
                values.push(theta[i]);
                vectors.push(Col::from_fn(n, |r| c64::new(re[r], im[r])));
                estimates.push(estimate(i));
            }
            return Ok(RitzPairs {
                values,
                vectors,
                estimates,
                n_converged: if breakdown { want } else { n_converged },
                restarts: restart,
                orthogonality,
                breakdown,
            });
        }

        // Thick restart on the leading Ritz vectors.
        let scale = theta[order[0]].norm();
        let mut keep = (2 * k).min(m_eff - 1).max(k);
        if keep < m_eff && !is_real(theta[order[keep - 1]], scale) && (theta[order[keep - 1]] - theta[order[keep]].conj()).norm() <= 1e-10 * scale {
            keep = if keep + 1 < m_eff { keep + 1 } else { keep - 1 };
        }
        let mut cols: Vec<Col<f64>> = Vec::with_capacity(keep + 1);
        let mut used = vec![false; m_eff];
        for &i in &order[..keep] {
            if used[i] {
                continue;
            }
            used[i] = true;
            let yi = y.col(i);
            cols.push(Col::from_fn(m_eff, |r| yi[r].re));
            if !is_real(theta[i], scale) {
                if let Some(&pj) = order.iter().find(|&&j| !used[j] && (theta[j] - theta[i].conj()).norm() <= 1e-10 * scale) {
                    used[pj] = true;
                }
                cols.push(Col::from_fn(m_eff, |r| yi[r].im));
            }
        }
        let ymat = Mat::from_fn(m_eff, cols.len(), |r, c| cols[c][r]);
        let z = ymat.qr().compute_thin_Q();
        let p_new = z.ncols();

        let q_next = q.col(m_eff).to_owned();
        let q_new = q.subcols(0, m_eff) * &z;
        let h_new = z.transpose() * &hm * &z;
        q.fill(0.0);
        h.fill(0.0);
        q.subcols_mut(0, p_new).copy_from(&q_new);
        q.col_mut(p_new).copy_from(&q_next);
        h.submatrix_mut(0, 0, p_new, p_new).copy_from(&h_new);
        for c in 0..p_new {
            h[(p_new, c)] = beta * z[(m_eff - 1, c)];
        }
        p = p_new;
    }
    unreachable!("loop returns on the final restart")
}
