//! Pseudo-arclength continuation in `(w, mu)` with stability tracking.

mod corrector;
mod events;
mod switch;

use faer::{c64, Col};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{ProblemDef, SolutionSummary};
use crate::solver::SteadyState;
use crate::stability::{leading_eigs, EigOptions, SpectrumResult};

pub use corrector::{correct, Corrected, CorrectorOptions, Hyperplane};
pub use events::{detect_events, refine_events, Event, EventKind};
pub use switch::{switch_branch, SwitchOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub n_steps: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Corrector step threshold; also the bound on the arclength condition.
    pub tol: f64,
    /// Residual max-norm accepted at a corrected point.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub svd_tol: f64,
    pub max_halvings: usize,
    pub grow_after: usize,
    pub grow_factor: f64,
    pub stability_zero_tol: f64,
    pub imag_tol: f64,
    pub refine_events: bool,
    pub event_mu_tol: f64,
    pub max_bisections: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds: 0.1,
            ds_min: 1e-6,
            ds_max: 1.0,
            n_steps: 200,
            mu_min: f64::NEG_INFINITY,
            mu_max: f64::INFINITY,
            tol: 1e-10,
            residual_tol: 1e-3,
            max_iter: 25,
            svd_tol: 1e-8,
            max_halvings: 5,
            grow_after: 4,
            grow_factor: 1.3,
            stability_zero_tol: 1e-6,
            imag_tol: 1e-6,
            refine_events: true,
            event_mu_tol: 1e-4,
            max_bisections: 20,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.ds == 0.0 || !self.ds.is_finite() {
            return Err(Error::arg("ds must be finite and non-zero"));
        }
        if !(0.0 < self.ds_min && self.ds_min <= self.ds_max) {
            return Err(Error::arg("need 0 < ds_min <= ds_max"));
        }
        if !(self.mu_min < self.mu_max) {
            return Err(Error::arg("need mu_min < mu_max"));
        }
        if !(self.tol > 0.0 && self.residual_tol > 0.0 && self.max_iter > 0) {
            return Err(Error::arg("corrector tolerances and max_iter must be positive"));
        }
        Ok(())
    }

    pub fn corrector(&self) -> CorrectorOptions {
        CorrectorOptions { tol: self.tol, residual_tol: self.residual_tol, max_iter: self.max_iter, svd_tol: self.svd_tol }
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    /// Accumulated pseudo-arclength.
    pub s: f64,
    pub mu: f64,
    pub weights: Col<f64>,
    pub summary: SolutionSummary,
    pub leading_eigs: Vec<c64>,
    pub n_unstable: usize,
    pub tags: Vec<EventKind>,
    pub residual_norm: f64,
    /// Value of the arclength condition at acceptance.
    pub constraint: f64,
}

impl BranchPoint {
    pub fn new(problem: &ProblemDef, weights: Col<f64>, mu: f64, s: f64) -> Self {
        BranchPoint {
            s,
            mu,
            summary: problem.summary(&weights),
            weights,
            leading_eigs: vec![],
            n_unstable: 0,
            tags: vec![],
            residual_norm: f64::NAN,
            constraint: 0.0,
        }
    }

    pub fn from_state(problem: &ProblemDef, st: &SteadyState, s: f64) -> Self {
        let mut p = BranchPoint::new(problem, st.weights.clone(), st.mu, s);
        p.residual_norm = st.residual_norm;
        p
    }

    pub fn set_eigs(&mut self, eigs: Vec<c64>, zero_tol: f64) {
        self.n_unstable = count_unstable(&eigs, zero_tol);
        self.leading_eigs = eigs;
    }

    pub fn is_stable(&self) -> bool {
        self.n_unstable == 0
    }
}

/// Physical eigenvalues ordered by decreasing real part.
pub fn physical_eigs(s: &SpectrumResult) -> Vec<c64> {
    s.physical().into_iter().map(|i| s.eigenvalues[i]).collect()
}

pub fn count_unstable(eigs: &[c64], zero_tol: f64) -> usize {
    eigs.iter().filter(|z| z.re > zero_tol).count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Termination {
    Completed,
    LeftRange,
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Branch {
    pub fn max_mu(&self) -> f64 {
        self.points.iter().map(|p| p.mu).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub point: BranchPoint,
    pub ds_used: f64,
    pub iterations: usize,
}

/// One predictor-corrector step along the secant through `prev2 -> prev1`.
pub fn arclength_step(problem: &ProblemDef, prev2: &BranchPoint, prev1: &BranchPoint, ds: f64, opts: &ContinuationOptions) -> Result<StepOutcome> {
    if ds == 0.0 || !ds.is_finite() {
        return Err(Error::arg("ds must be finite and non-zero"));
    }
    let u1 = problem.values(&prev1.weights);
    let du = &u1 - problem.values(&prev2.weights);
    let dmu = prev1.mu - prev2.mu;
    let len = (du.squared_norm_l2() + dmu * dmu).sqrt();
    if !(len > 0.0) {
        return Err(Error::arg("secant predictor needs two distinct points"));
    }
    let dw = &prev1.weights - &prev2.weights;
    let mut plane = Hyperplane { anchor_u: u1, anchor_mu: prev1.mu, normal_u: du / len, normal_mu: dmu / len, offset: ds };

    let mut h = ds;
    for _ in 0..=opts.max_halvings {
        plane.offset = h;
        let w_pred = &prev1.weights + faer::Scale(h / len) * &dw;
        let mu_pred = prev1.mu + h * dmu / len;
        if let Some(c) = correct(problem, &w_pred, mu_pred, &plane, &opts.corrector())? {
            let mut point = BranchPoint::new(problem, c.weights, c.mu, prev1.s + h.abs());
            point.residual_norm = c.residual_norm;
            point.constraint = c.constraint;
            return Ok(StepOutcome { point, ds_used: h, iterations: c.iterations });
        }
        h *= 0.5;
        if h.abs() < opts.ds_min {
            break;
        }
    }
    Err(Error::Continuation(format!("corrector failed near mu = {} after halving ds to {h:e}", prev1.mu)))
}

/// Eigenvalues of a branch point; failures are logged and leave the list empty.
pub fn annotate(problem: &ProblemDef, p: &mut BranchPoint, eig: &EigOptions, zero_tol: f64) {
    match leading_eigs(problem, &p.weights, p.mu, eig) {
        Ok(s) => p.set_eigs(physical_eigs(&s), zero_tol),
        Err(e) => log::warn!("eigensolve failed at mu = {}: {e}", p.mu),
    }
}

/// Traces a branch from two converged states, computing spectra at every point
/// and locating events. Failures end the trace; the partial branch is returned
/// with `Termination::Failed`.
pub fn trace_branch(
    problem: &ProblemDef,
    start: &SteadyState,
    second: &SteadyState,
    opts: &ContinuationOptions,
    eig: &EigOptions,
) -> Result<Branch> {
    let (points, termination) = trace_points(problem, start, second, opts, eig)?;
    Ok(finish_branch(problem, points, termination, opts, eig))
}

/// Like [`trace_branch`], but also continues backwards from `start`. The
/// backward stretch comes first, so `mu` runs through `start` and `second` in order.
pub fn trace_branch_both(
    problem: &ProblemDef,
    start: &SteadyState,
    second: &SteadyState,
    opts: &ContinuationOptions,
    eig: &EigOptions,
) -> Result<Branch> {
    let (fwd, t_fwd) = trace_points(problem, start, second, opts, eig)?;
    let (bwd, t_bwd) = trace_points(problem, second, start, opts, eig)?;
    // bwd = [second, start, ...]; drop its first two points, which fwd already holds.
    let mut points: Vec<BranchPoint> = bwd.into_iter().skip(2).rev().collect();
    points.extend(fwd);
    let mut s = 0.0;
    for i in 0..points.len() {
        if i > 0 {
            let du = problem.values(&points[i].weights) - problem.values(&points[i - 1].weights);
            s += (du.squared_norm_l2() + (points[i].mu - points[i - 1].mu).powi(2)).sqrt();
        }
        points[i].s = s;
    }
    let termination = match (t_bwd, t_fwd) {
        (Termination::Failed(e), _) | (_, Termination::Failed(e)) => Termination::Failed(e),
        (_, t) => t,
    };
    Ok(finish_branch(problem, points, termination, opts, eig))
}

fn finish_branch(problem: &ProblemDef, points: Vec<BranchPoint>, termination: Termination, opts: &ContinuationOptions, eig: &EigOptions) -> Branch {
    let mut branch = Branch { points, events: vec![], termination };
    let mut events = detect_events(&mut branch, opts);
    if opts.refine_events {
        refine_events(problem, &branch, &mut events, opts, eig);
    }
    branch.events = events;
    branch
}

fn trace_points(
    problem: &ProblemDef,
    start: &SteadyState,
    second: &SteadyState,
    opts: &ContinuationOptions,
    eig: &EigOptions,
) -> Result<(Vec<BranchPoint>, Termination)> {
    opts.validate()?;
    if !(start.converged && second.converged) {
        return Err(Error::arg("trace_branch needs two converged states"));
    }
    let zt = opts.stability_zero_tol;
    let mut p0 = BranchPoint::from_state(problem, start, 0.0);
    let du = problem.values(&second.weights) - problem.values(&start.weights);
    let s1 = (du.squared_norm_l2() + (second.mu - start.mu).powi(2)).sqrt();
    let mut p1 = BranchPoint::from_state(problem, second, s1);
    annotate(problem, &mut p0, eig, zt);
    annotate(problem, &mut p1, eig, zt);
    let mut points = vec![p0, p1];

    let mut ds = opts.ds;
    let mut streak = 0;
    let mut termination = Termination::Completed;
    for step in 0..opts.n_steps {
        let n = points.len();
        let out = match arclength_step(problem, &points[n - 2], &points[n - 1], ds, opts) {
            Ok(o) => o,
            Err(e @ Error::Continuation(_)) => {
                log::warn!("trace stopped after {step} steps: {e}");
                termination = Termination::Failed(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        if out.ds_used != ds {
            streak = 0;
            ds = out.ds_used.signum() * out.ds_used.abs().max(opts.ds_min);
        } else {
            streak += 1;
            if streak >= opts.grow_after {
                ds = ds.signum() * (ds.abs() * opts.grow_factor).min(opts.ds_max);
                streak = 0;
            }
        }
        let mut p = out.point;
        annotate(problem, &mut p, eig, zt);
        log::debug!("step {step}: mu = {:.6} ds = {:.3e} unstable = {}", p.mu, out.ds_used, p.n_unstable);
        let left = p.mu < opts.mu_min || p.mu > opts.mu_max;
        points.push(p);
        if left {
            termination = Termination::LeftRange;
            break;
        }
    }
    Ok((points, termination))
}

/// Solves at `mu` near the stretch of `branch` between `after` and the next
/// sign change of `dmu`, interpolating the starting weights.
pub fn solve_on_branch(
    problem: &ProblemDef,
    branch: &Branch,
    mu: f64,
    after: usize,
    newton: &crate::solver::NewtonOptions,
) -> Result<Option<SteadyState>> {
    let pts = &branch.points;
    for i in after..pts.len().saturating_sub(1) {
        let (a, b) = (&pts[i], &pts[i + 1]);
        if (a.mu - mu) * (b.mu - mu) <= 0.0 && a.mu != b.mu {
            let t = (mu - a.mu) / (b.mu - a.mu);
            let w0 = &a.weights + faer::Scale(t) * (&b.weights - &a.weights);
            let st = crate::solver::newton_solve(problem, &w0, mu, newton)?;
            return Ok(st.converged.then_some(st));
        }
    }
    Ok(None)
}

/// Index of the first fold-tagged point, if any.
pub fn first_fold(branch: &Branch) -> Option<usize> {
    branch.points.iter().position(|p| p.tags.contains(&EventKind::Fold))
}

#[cfg(test)]
mod tests;
