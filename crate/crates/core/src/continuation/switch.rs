use faer::Col;

use super::BranchPoint;
use crate::error::{Error, Result};
use crate::problems::ProblemDef;
use crate::solver::{newton_solve, NewtonOptions, SteadyState};

/// Distance in max-norm below which a switched state counts as the original one.
const NOISE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SwitchOutcome {
    pub state: SteadyState,
    /// Newton failed or returned to the starting branch.
    pub switch_failed: bool,
}

/// Newton from `at.weights + amplitude * v` at `at.mu`, where `v` is a real
/// critical weight-space eigenvector.
pub fn switch_branch(problem: &ProblemDef, at: &BranchPoint, v: &Col<f64>, amplitude: f64, opts: &NewtonOptions) -> Result<SwitchOutcome> {
    if v.nrows() != problem.n_weights() {
        return Err(Error::arg("eigenvector length does not match the weights"));
    }
    let w0 = &at.weights + faer::Scale(amplitude) * v;
    let state = newton_solve(problem, &w0, at.mu, opts)?;
    let moved = (problem.values(&state.weights) - problem.values(&at.weights)).norm_max();
    let switch_failed = !state.converged || moved <= NOISE_FLOOR;
    if switch_failed {
        log::warn!("branch switch at mu = {} failed (converged = {}, distance = {moved:.2e})", at.mu, state.converged);
    }
    Ok(SwitchOutcome { state, switch_failed })
}
