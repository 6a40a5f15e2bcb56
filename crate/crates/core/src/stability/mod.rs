//! Linear stability through the weight-space pencil `J_w v = lambda (B Psi) v`.

mod arnoldi;
mod dense;
mod pencil;
mod spectrum;

use faer::{c64, Col, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemDef;
use crate::solver::{truncated_svd, TruncationMode};

pub use arnoldi::{default_krylov_dim, restarted_arnoldi, ArnoldiOptions, RitzPairs};
pub use dense::{dense_generalized_eigs, naive_physical_jacobian, DenseBackend};
pub use pencil::{build_pencil, masked_psi, LinearOperator, PencilOperator};
pub use spectrum::{classify_spectrum, normalization, normalized, real_mul, EigGroup, SpectrumResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigMethod {
    #[default]
    ShiftInvert,
    Naive,
    Fd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigOptions {
    pub k: usize,
    pub sigma: f64,
    pub krylov_dim: Option<usize>,
    /// Ritz convergence tolerance, relative to `|theta|`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Relative truncation for the SVD of `A_sigma`.
    pub svd_tol: f64,
    /// Relative truncation of `pinv(Psi)` on the naive path.
    pub pinv_tol: f64,
    /// Spurious threshold relative to `max|lambda|` on the naive path.
    pub zero_tol: f64,
    /// Pencil residual above which a physical pair is reported in the warnings.
    pub residual_tol: f64,
    pub seed: u64,
    pub method: EigMethod,
    pub dense_backend: DenseBackend,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            k: 7,
            sigma: 1.0,
            krylov_dim: None,
            tol: 1e-12,
            max_restarts: 200,
            svd_tol: 1e-14,
            pinv_tol: 1e-8,
            zero_tol: 1e-6,
            residual_tol: 1e-8,
            seed: 0,
            method: EigMethod::ShiftInvert,
            dense_backend: DenseBackend::Condensation,
        }
    }
}

impl EigOptions {
    pub fn arnoldi(&self) -> ArnoldiOptions {
        ArnoldiOptions { krylov_dim: self.krylov_dim, tol: self.tol, max_restarts: self.max_restarts, seed: self.seed }
    }
}

/// Shift-invert Arnoldi on a pencil, mapped back to `lambda = sigma + 1/theta`.
/// `psi` is the (block) collocation matrix used to lift `v` to `phi = Psi v`.
pub fn arnoldi_eigs(op: &PencilOperator, psi: &Mat<f64>, k: usize, opts: &ArnoldiOptions, residual_tol: f64) -> Result<SpectrumResult> {
    let (rows, cols) = op.dims();
    if psi.nrows() != rows || psi.ncols() != cols {
        return Err(Error::arg("Psi does not match the pencil"));
    }
    let ritz = restarted_arnoldi(op, k, opts)?;
    let sigma = op.sigma;
    let mut out = SpectrumResult { shift: sigma, ..Default::default() };
    for (theta, v) in ritz.values.iter().zip(&ritz.vectors).take(ritz.n_converged) {
        let lam = c64::new(sigma, 0.0) + c64::new(1.0, 0.0) / theta;
        let (phi, s) = normalized(&real_mul(psi, v));
        let v = spectrum::scale(v, s);
        let jv = real_mul(&op.j_w, &v);
        let bv = real_mul(&op.b_psi, &v);
        let r = Col::from_fn(rows, |i| jv[i] - lam * bv[i]);
        let res = r.norm_l2() / jv.norm_l2().max(f64::MIN_POSITIVE);
        if (lam.re - sigma).hypot(lam.im) <= 1e-8 * (1.0 + sigma.abs()) {
            out.shift_degenerate = true;
        }
        if res > residual_tol {
            out.warnings.push(format!("pencil residual {res:.2e} at lambda = {:.6}{:+.6}i", lam.re, lam.im));
        }
        out.eigenvalues.push(lam);
        out.physical_vectors.push(phi);
        out.weight_vectors.push(v);
        out.residuals.push(res);
        out.groups.push(EigGroup::Physical);
    }
    if ritz.n_converged < k {
        out.warnings.push(format!("only {} of {k} Ritz pairs converged", ritz.n_converged));
    }
    if out.shift_degenerate {
        log::warn!("shift {sigma} coincides with a generalized eigenvalue");
        out.warnings.push("shift_degenerate".into());
    }
    out.sort_by_real_part();
    Ok(out)
}

/// Leading eigenpairs of a steady state via the configured method (`fd` excluded).
pub fn leading_eigs(problem: &ProblemDef, w: &Col<f64>, mu: f64, opts: &EigOptions) -> Result<SpectrumResult> {
    let j_w = problem.jacobian_w(w, mu)?;
    let psi = problem.psi_blocks();
    let mask = problem.constraint_mask();
    match opts.method {
        EigMethod::ShiftInvert => {
            if opts.k >= problem.n_weights() {
                return Err(Error::arg(format!("k = {} must be below the weight count {}", opts.k, problem.n_weights())));
            }
            let op = build_pencil(&j_w, &psi, &mask, opts.sigma, opts.svd_tol)?;
            arnoldi_eigs(&op, &psi, opts.k, &opts.arnoldi(), opts.residual_tol)
        }
        EigMethod::Naive => {
            let j_u = naive_physical_jacobian(&j_w, &psi, opts.pinv_tol)?;
            let raw = dense_generalized_eigs(&j_u, &mask, opts.dense_backend)?;
            let fac = truncated_svd(psi.as_ref(), opts.pinv_tol, TruncationMode::Relative)?;
            let mut s = classify_spectrum(&raw, &fac, opts.zero_tol);
            s.shift = opts.sigma;
            Ok(s)
        }
        EigMethod::Fd => Err(Error::arg("the fd method runs on the finite-difference reference, not a collocation problem")),
    }
}
