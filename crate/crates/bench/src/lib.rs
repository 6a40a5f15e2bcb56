//! Fixtures shared by the benchmarks.

use meshlessbif::solver::{newton_solve, SteadyState};
use meshlessbif::{Preset, ProblemDef, ProblemKind, Result};

/// Lower-branch Bratu 1D steady state at `p` on the reference configuration.
pub fn bratu_state(p: f64) -> Result<(Preset, ProblemDef, SteadyState)> {
    let preset = Preset::for_kind(ProblemKind::Bratu1d);
    let problem = preset.problem_def()?;
    let w0 = preset.initial_guess(&problem)?;
    let st = newton_solve(&problem, &w0, p, &preset.solver)?;
    Ok((preset, problem, st))
}
