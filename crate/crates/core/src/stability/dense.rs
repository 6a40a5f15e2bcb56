//! Dense comparator path: reconstruct `J_u` from the weight Jacobian and solve
//! the generalized problem `J_u phi = lambda B phi` in full.

use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat};
use serde::{Deserialize, Serialize};

use super::spectrum::{normalized, real_mul, EigGroup, SpectrumResult};
use crate::error::{Error, Result};
use crate::problems::ConstraintMask;
use crate::solver::{singular_values, truncated_svd, TruncationMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseBackend {
    /// Eliminate boundary unknowns and solve the interior standard problem.
    #[default]
    Condensation,
    /// Generalized Schur (QZ) decomposition of the full pencil.
    Qz,
}

/// `J_u = J_w pinv(Psi)` with the pseudo-inverse truncated at `pinv_tol` (relative).
pub fn naive_physical_jacobian(j_w: &Mat<f64>, psi: &Mat<f64>, pinv_tol: f64) -> Result<Mat<f64>> {
    if j_w.ncols() != psi.ncols() || j_w.nrows() != psi.nrows() {
        return Err(Error::arg("J_w and Psi must have the same shape"));
    }
    let f = truncated_svd(psi.as_ref(), pinv_tol, TruncationMode::Relative)?;
    Ok(j_w * f.pinv_matrix())
}

pub fn dense_generalized_eigs(j_u: &Mat<f64>, mask: &ConstraintMask, backend: DenseBackend) -> Result<SpectrumResult> {
    let m = j_u.nrows();
    if j_u.ncols() != m {
        return Err(Error::arg("dense generalized solve needs a square matrix"));
    }
    if mask.len() != m {
        return Err(Error::arg(format!("mask length {} != {m}", mask.len())));
    }
    let mut out = match backend {
        DenseBackend::Condensation => match condensation(j_u, mask)? {
            Some(s) => s,
            None => {
                log::warn!("boundary block is singular; falling back to QZ");
                let mut s = qz(j_u, mask)?;
                s.warnings.push("pencil_degenerate: boundary block singular, used QZ".into());
                s
            }
        },
        DenseBackend::Qz => qz(j_u, mask)?,
    };
    finish(j_u, mask, &mut out);
    Ok(out)
}

fn condensation(j_u: &Mat<f64>, mask: &ConstraintMask) -> Result<Option<SpectrumResult>> {
    let m = j_u.nrows();
    let inner: Vec<usize> = (0..m).filter(|&i| !mask.is_constraint(i)).collect();
    let bnd: Vec<usize> = (0..m).filter(|&i| mask.is_constraint(i)).collect();
    let sub = |r: &[usize], c: &[usize]| Mat::from_fn(r.len(), c.len(), |i, j| j_u[(r[i], c[j])]);
    let j_ii = sub(&inner, &inner);

    let (schur, lift) = if bnd.is_empty() {
        (j_ii, None)
    } else {
        let j_gg = sub(&bnd, &bnd);
        let sv = singular_values(j_gg.as_ref())?;
        if sv.last().copied().unwrap_or(0.0) <= 1e-13 * sv[0] {
            return Ok(None);
        }
        let lu = j_gg.partial_piv_lu();
        // X = J_GG^-1 J_GI, so phi_G = -X phi_I.
        let x = lu.solve(sub(&bnd, &inner));
        let schur = &j_ii - sub(&inner, &bnd) * &x;
        (schur, Some(x))
    };

    let mut res = SpectrumResult::default();
    if !inner.is_empty() {
        let evd = schur.eigen().map_err(|e| Error::numeric(format!("dense eigensolve failed: {e:?}")))?;
        let u = evd.U();
        for (c, lam) in evd.S().column_vector().iter().enumerate() {
            let phi_i = u.col(c).to_owned();
            let mut phi = Col::<c64>::zeros(m);
            for (k, &i) in inner.iter().enumerate() {
                phi[i] = phi_i[k];
            }
            if let Some(x) = &lift {
                let phi_g = real_mul(x, &phi_i);
                for (k, &i) in bnd.iter().enumerate() {
                    phi[i] = -phi_g[k];
                }
            }
            res.eigenvalues.push(*lam);
            res.physical_vectors.push(phi);
            res.groups.push(EigGroup::Physical);
        }
    }
    for &i in &bnd {
        let mut phi = Col::<c64>::zeros(m);
        phi[i] = c64::new(1.0, 0.0);
        res.eigenvalues.push(c64::new(f64::INFINITY, 0.0));
        res.physical_vectors.push(phi);
        res.groups.push(EigGroup::BoundaryInfinite);
    }
    Ok(Some(res))
}

fn qz(j_u: &Mat<f64>, mask: &ConstraintMask) -> Result<SpectrumResult> {
    let m = j_u.nrows();
    let b = Mat::from_fn(m, m, |i, j| if i == j { mask.b_diag[i] } else { 0.0 });
    let gevd = j_u.generalized_eigen(&b).map_err(|e| Error::numeric(format!("QZ failed: {e:?}")))?;
    let (sa, sb, u) = (gevd.S_a(), gevd.S_b(), gevd.U());
    let scale_a = sa.column_vector().iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut res = SpectrumResult::default();
    for c in 0..m {
        let (alpha, beta) = (sa.column_vector()[c], sb.column_vector()[c]);
        let infinite = beta.norm() <= 1e-13 * scale_a.max(alpha.norm());
        res.eigenvalues.push(if infinite { c64::new(f64::INFINITY, 0.0) } else { alpha / beta });
        res.physical_vectors.push(u.col(c).to_owned());
        res.groups.push(if infinite { EigGroup::BoundaryInfinite } else { EigGroup::Physical });
    }
    Ok(res)
}

fn finish(j_u: &Mat<f64>, mask: &ConstraintMask, s: &mut SpectrumResult) {
    let m = j_u.nrows();
    s.residuals = (0..s.len())
        .map(|k| {
            let phi = &s.physical_vectors[k];
            let jp = real_mul(j_u, phi);
            let bphi = Col::from_fn(m, |i| phi[i] * mask.b_diag[i]);
            let lam = s.eigenvalues[k];
            if lam.re.is_finite() {
                let r = Col::from_fn(m, |i| jp[i] - lam * bphi[i]);
                r.norm_l2() / jp.norm_l2().max(f64::MIN_POSITIVE)
            } else {
                bphi.norm_l2() / phi.norm_l2().max(f64::MIN_POSITIVE)
            }
        })
        .collect();
    for phi in &mut s.physical_vectors {
        *phi = normalized(phi).0;
    }
    s.sort_by_real_part();
}
