use faer::{Col, Mat};

use crate::error::{Error, Result};
use crate::problems::ConstraintMask;
use crate::solver::{truncated_svd, SvdFactors, TruncationMode};

/// Real linear map used by the Krylov solver.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_to(&self, x: &Col<f64>) -> Col<f64>;
}

impl LinearOperator for Mat<f64> {
    fn dim(&self) -> usize {
        self.ncols()
    }

    fn apply_to(&self, x: &Col<f64>) -> Col<f64> {
        self * x
    }
}

/// Shift-inverted weight-space pencil `T = (J_w - sigma B Psi)^+ (B Psi)`, kept factored.
#[derive(Clone, Debug)]
pub struct PencilOperator {
    pub svd_a_sigma: SvdFactors,
    pub b_psi: Mat<f64>,
    pub j_w: Mat<f64>,
    pub sigma: f64,
}

/// Masked collocation matrix: rows flagged as constraints are zeroed.
pub fn masked_psi(psi: &Mat<f64>, mask: &ConstraintMask) -> Result<Mat<f64>> {
    if mask.len() != psi.nrows() {
        return Err(Error::arg(format!("mask length {} != {} rows", mask.len(), psi.nrows())));
    }
    Ok(Mat::from_fn(psi.nrows(), psi.ncols(), |i, j| if mask.is_constraint(i) { 0.0 } else { psi[(i, j)] }))
}

pub fn build_pencil(
    j_w: &Mat<f64>,
    psi: &Mat<f64>,
    mask: &ConstraintMask,
    sigma: f64,
    svd_tol: f64,
) -> Result<PencilOperator> {
    if j_w.nrows() != psi.nrows() || j_w.ncols() != psi.ncols() {
        return Err(Error::arg(format!(
            "J_w is {}x{} but Psi is {}x{}",
            j_w.nrows(),
            j_w.ncols(),
            psi.nrows(),
            psi.ncols()
        )));
    }
    if !sigma.is_finite() {
        return Err(Error::arg("shift must be finite"));
    }
    let b_psi = masked_psi(psi, mask)?;
    let a_sigma = j_w - faer::Scale(sigma) * &b_psi;
    let svd_a_sigma = truncated_svd(a_sigma.as_ref(), svd_tol, TruncationMode::Relative)?;
    Ok(PencilOperator { svd_a_sigma, b_psi, j_w: j_w.clone(), sigma })
}

impl PencilOperator {
    /// `(rows, cols)` of the pencil matrices.
    pub fn dims(&self) -> (usize, usize) {
        (self.b_psi.nrows(), self.b_psi.ncols())
    }

    /// `V (S^-1 (U^T (B Psi y)))`.
    pub fn apply(&self, y: &Col<f64>) -> Result<Col<f64>> {
        if y.nrows() != self.b_psi.ncols() {
            return Err(Error::arg(format!("vector length {} != {}", y.nrows(), self.b_psi.ncols())));
        }
        self.svd_a_sigma.pinv_apply(&(&self.b_psi * y))
    }

    /// Smallest retained singular value of `A_sigma` relative to the largest.
    pub fn conditioning(&self) -> f64 {
        self.svd_a_sigma.s.last().map_or(0.0, |s| s / self.svd_a_sigma.s_max)
    }
}

impl LinearOperator for PencilOperator {
    fn dim(&self) -> usize {
        self.b_psi.ncols()
    }

    fn apply_to(&self, x: &Col<f64>) -> Col<f64> {
        self.apply(x).expect("length checked by the Krylov solver")
    }
}
