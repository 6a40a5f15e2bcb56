use faer::{Col, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// Keep singular values `s >= tol * s_max`.
    #[default]
    Relative,
    /// Keep singular values `s >= tol`.
    Absolute,
}

/// Thin SVD with the small singular values dropped.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
    pub tol: f64,
    pub mode: TruncationMode,
    /// `min(M, N)` of the factored matrix.
    pub rank_full: usize,
    /// Largest singular value, retained or not.
    pub s_max: f64,
    /// Largest dropped singular value (0 when nothing was dropped).
    pub s_dropped: f64,
}

pub fn truncated_svd(a: MatRef<'_, f64>, tol: f64, mode: TruncationMode) -> Result<SvdFactors> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::arg(format!("svd tolerance {tol} must be finite and non-negative")));
    }
    let (m, n) = (a.nrows(), a.ncols());
    let rank_full = m.min(n);
    if !a.col_iter().all(|c| c.iter().all(|x| x.is_finite())) {
        return Err(Error::numeric("matrix passed to SVD has non-finite entries"));
    }
    if rank_full == 0 {
        return Ok(SvdFactors {
            u: Mat::zeros(m, 0),
            s: vec![],
            v: Mat::zeros(n, 0),
            tol,
            mode,
            rank_full,
            s_max: 0.0,
            s_dropped: 0.0,
        });
    }
    let svd = a.thin_svd().map_err(|e| Error::numeric(format!("SVD did not converge: {e:?}")))?;
    let sv: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let s_max = sv[0];
    let cutoff = match mode {
        TruncationMode::Relative => tol * s_max,
        TruncationMode::Absolute => tol,
    };
    let r = sv.iter().take_while(|&&s| s > 0.0 && s >= cutoff).count();
    Ok(SvdFactors {
        u: svd.U().subcols(0, r).to_owned(),
        s: sv[..r].to_vec(),
        v: svd.V().subcols(0, r).to_owned(),
        tol,
        mode,
        rank_full,
        s_max,
        s_dropped: sv.get(r).copied().unwrap_or(0.0),
    })
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// `V S^-1 U^T rhs`.
    pub fn pinv_apply(&self, rhs: &Col<f64>) -> Result<Col<f64>> {
        if rhs.nrows() != self.nrows() {
            return Err(Error::arg(format!("rhs has length {}, expected {}", rhs.nrows(), self.nrows())));
        }
        let mut t = self.u.transpose() * rhs;
        for (k, s) in self.s.iter().enumerate() {
            t[k] /= s;
        }
        Ok(&self.v * &t)
    }

    /// `U S V^T x`, the truncated reconstruction applied to `x`.
    pub fn apply(&self, x: &Col<f64>) -> Col<f64> {
        let mut t = self.v.transpose() * x;
        for (k, s) in self.s.iter().enumerate() {
            t[k] *= s;
        }
        &self.u * &t
    }

    /// Norm of the component of `y` outside the retained column space.
    pub fn range_residual(&self, y: &Col<f64>) -> f64 {
        let proj = &self.u * (self.u.transpose() * y);
        (y - &proj).norm_l2()
    }

    /// Dense truncated pseudo-inverse `V S^-1 U^T` (N x M).
    pub fn pinv_matrix(&self) -> Mat<f64> {
        let vs = Mat::from_fn(self.v.nrows(), self.rank(), |i, k| self.v[(i, k)] / self.s[k]);
        &vs * self.u.transpose()
    }
}

/// Least-squares solve via a truncated SVD.
pub fn pinv_apply(f: &SvdFactors, rhs: &Col<f64>) -> Result<Col<f64>> {
    f.pinv_apply(rhs)
}

/// Number of singular values above `tol * s_max`.
pub fn numerical_rank(a: MatRef<'_, f64>, tol: f64) -> Result<usize> {
    Ok(truncated_svd(a, tol, TruncationMode::Relative)?.rank())
}

/// All singular values in descending order.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if !a.col_iter().all(|c| c.iter().all(|x| x.is_finite())) {
        return Err(Error::numeric("matrix passed to SVD has non-finite entries"));
    }
    a.singular_values().map_err(|e| Error::numeric(format!("SVD did not converge: {e:?}")))
}
