//! Newton corrector for `F(w, mu) = 0` subject to one linear condition on the
//! solution values and the parameter.
//!
//! The condition is imposed exactly: the step is split into a particular part
//! satisfying it and a least-squares part in its orthogonal complement, so the
//! truncated SVD never has to balance it against the collocation rows.

use faer::{Col, Mat};

use crate::error::{Error, Result};
use crate::problems::ProblemDef;
use crate::solver::{truncated_svd, TruncationMode};

/// `normal_u . (u - anchor_u) + normal_mu (mu - anchor_mu) = offset`.
#[derive(Clone, Debug)]
pub struct Hyperplane {
    pub anchor_u: Col<f64>,
    pub anchor_mu: f64,
    pub normal_u: Col<f64>,
    pub normal_mu: f64,
    pub offset: f64,
}

impl Hyperplane {
    pub fn eval(&self, u: &Col<f64>, mu: f64) -> f64 {
        self.normal_u.transpose() * (u - &self.anchor_u) + self.normal_mu * (mu - self.anchor_mu) - self.offset
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CorrectorOptions {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
    pub svd_tol: f64,
}

#[derive(Clone, Debug)]
pub struct Corrected {
    pub weights: Col<f64>,
    pub mu: f64,
    pub residual_norm: f64,
    pub constraint: f64,
    pub iterations: usize,
}

/// Returns `Ok(None)` when the iteration fails to converge.
pub fn correct(problem: &ProblemDef, w0: &Col<f64>, mu0: f64, plane: &Hyperplane, opts: &CorrectorOptions) -> Result<Option<Corrected>> {
    let n = problem.n_weights();
    let psi_t = problem.psi_blocks().transpose().to_owned();
    let mut c = Col::zeros(n + 1);
    c.as_mut().subrows_mut(0, n).copy_from(&(&psi_t * &plane.normal_u));
    c[n] = plane.normal_mu;
    let c_norm = c.norm_l2();
    if !(c_norm > 0.0) {
        return Err(Error::arg("corrector hyperplane has a zero normal"));
    }
    let c_hat = &c / c_norm;
    // Householder reflector H with H c_hat = -s e_n; its first n columns span c_hat's complement.
    let s = if c_hat[n] >= 0.0 { 1.0 } else { -1.0 };
    let mut h = c_hat.clone();
    h[n] += s;
    let h = &h / h.norm_l2();

    let (mut w, mut mu) = (w0.clone(), mu0);
    for it in 1..=opts.max_iter {
        let f = match problem.residual(&w, mu) {
            Ok(f) => f,
            Err(Error::Argument(_) | Error::Numeric(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let u = problem.values(&w);
        let cval = plane.eval(&u, mu);

        let mut jac = Mat::zeros(problem.n_rows(), n + 1);
        jac.as_mut().subcols_mut(0, n).copy_from(&problem.jacobian_w(&w, mu)?);
        jac.col_mut(n).copy_from(&problem.jacobian_mu(&w, mu)?);

        let dz_p = faer::Scale(-cval / c_norm) * &c_hat;
        let jh = &jac * &h;
        let jz = (&jac - faer::Scale(2.0) * &jh * h.transpose()).subcols(0, n).to_owned();
        let rhs = -(&f + &jac * &dz_p);
        let fac = truncated_svd(jz.as_ref(), opts.svd_tol, TruncationMode::Relative)?;
        let y = fac.pinv_apply(&rhs)?;
        let mut zy = Col::zeros(n + 1);
        zy.as_mut().subrows_mut(0, n).copy_from(&y);
        let hy = h.as_ref().subrows(0, n).transpose() * &y;
        let dz = &dz_p + &zy - faer::Scale(2.0 * hy) * &h;

        let dw = dz.as_ref().subrows(0, n).to_owned();
        w += &dw;
        mu += dz[n];
        let step = (problem.values(&w) - &u).norm_l2() + dz[n].abs();
        if !step.is_finite() || !mu.is_finite() {
            return Ok(None);
        }
        if step <= opts.tol {
            let f = match problem.residual(&w, mu) {
                Ok(f) => f,
                Err(_) => return Ok(None),
            };
            let res = f.norm_max();
            if res > opts.residual_tol {
                return Ok(None);
            }
            let constraint = plane.eval(&problem.values(&w), mu);
            return Ok(Some(Corrected { weights: w, mu, residual_norm: res, constraint, iterations: it }));
        }
    }
    Ok(None)
}
