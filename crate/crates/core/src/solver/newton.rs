use faer::Col;
use serde::{Deserialize, Serialize};

use super::svd::{truncated_svd, TruncationMode};
use crate::error::{Error, Result};
use crate::problems::ProblemDef;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Successive-solution L2 threshold (and residual max-norm threshold).
    pub tol: f64,
    /// A step-converged iterate is accepted only if its residual max-norm is below this.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub svd_tol: f64,
    pub svd_mode: TruncationMode,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            residual_tol: 1e-3,
            max_iter: 50,
            svd_tol: 1e-8,
            svd_mode: TruncationMode::Relative,
            max_halvings: 10,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0 && self.residual_tol > 0.0 && self.svd_tol >= 0.0 && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::arg("newton options need positive tolerances and max_iter"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonRecord {
    pub iter: usize,
    pub res_norm: f64,
    pub step_norm: f64,
    pub rank: usize,
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub weights: Col<f64>,
    pub mu: f64,
    /// Max-norm of the residual at `weights`.
    pub residual_norm: f64,
    /// L2 norm of the last change in solution values.
    pub step_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<NewtonRecord>,
}

/// Gauss-Newton iteration with truncated-SVD least-squares steps.
pub fn newton_solve(problem: &ProblemDef, w0: &Col<f64>, mu: f64, opts: &NewtonOptions) -> Result<SteadyState> {
    opts.validate()?;
    let mut w = w0.clone();
    let mut f = problem.residual(&w, mu)?;
    let mut res = f.norm_max();
    let initial = (w.clone(), res);
    let mut trace = vec![NewtonRecord { iter: 0, res_norm: res, step_norm: f64::NAN, rank: 0 }];
    let mut vals = problem.values(&w);
    let mut increases = 0;
    let mut step_norm = f64::INFINITY;
    let mut converged = res <= opts.tol;
    let mut iter = 0;

    while !converged && iter < opts.max_iter {
        iter += 1;
        let jac = problem.jacobian_w(&w, mu)?;
        let fac = truncated_svd(jac.as_ref(), opts.svd_tol, opts.svd_mode)?;
        let dw = -fac.pinv_apply(&f)?;

        let norm2 = f.norm_l2();
        let mut t = 1.0;
        let mut trial = &w + &dw;
        let mut f_trial = problem.residual(&trial, mu);
        let grew = |r: &Result<Col<f64>>| r.as_ref().map_or(true, |x| x.norm_l2() > norm2);
        if grew(&f_trial) {
            increases += 1;
        } else {
            increases = 0;
        }
        let blew_up = matches!(f_trial, Err(Error::Numeric(_)));
        if increases >= 3 || blew_up {
            let mut h = 0;
            while grew(&f_trial) && h < opts.max_halvings {
                t *= 0.5;
                trial = &w + faer::Scale(t) * &dw;
                f_trial = problem.residual(&trial, mu);
                h += 1;
            }
            increases = 0;
        }
        let f_new = f_trial?;
        let vals_new = problem.values(&trial);
        step_norm = (&vals_new - &vals).norm_l2();
        w = trial;
        f = f_new;
        vals = vals_new;
        res = f.norm_max();
        trace.push(NewtonRecord { iter, res_norm: res, step_norm, rank: fac.rank() });
        log::trace!("newton {iter}: |F|inf={res:.3e} |du|={step_norm:.3e} rank={}", fac.rank());

        if res <= opts.tol {
            converged = true;
        } else if step_norm <= opts.tol {
            // Stagnated: a solution only if the least-squares residual is small.
            converged = res <= opts.residual_tol;
            break;
        }
    }

    if converged && res > initial.1 {
        w = initial.0;
        res = initial.1;
    }
    Ok(SteadyState { weights: w, mu, residual_norm: res, step_norm, iterations: iter, converged, trace })
}
