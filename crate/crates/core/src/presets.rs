//! Reference configurations for the four benchmarks and their starting states.

use faer::Col;
use serde::{Deserialize, Serialize};

use crate::basis::SamplingOptions;
use crate::continuation::{trace_branch, trace_branch_both, Branch, ContinuationOptions};
use crate::error::{Error, Result};
use crate::problems::{FixedParams, ProblemDef, ProblemKind};
use crate::solver::{newton_solve, NewtonOptions, SteadyState};
use crate::stability::EigOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub problem: ProblemKind,
    pub fixed_params: FixedParams,
    /// Collocation points per axis.
    pub grid: Vec<usize>,
    pub n_neurons: usize,
    pub seed: u64,
    pub sampling: SamplingOptions,
    pub solver: NewtonOptions,
    /// First two parameter values of a continuation run.
    pub mu_start: f64,
    pub mu_second: f64,
    pub continuation: ContinuationOptions,
    /// Also continue backwards from `mu_start`.
    pub both_directions: bool,
    pub eigs: EigOptions,
}

impl Preset {
    pub fn for_kind(kind: ProblemKind) -> Self {
        let base = Preset {
            problem: kind,
            fixed_params: FixedParams::new(),
            grid: vec![101],
            n_neurons: 50,
            seed: 0,
            sampling: SamplingOptions::default(),
            solver: NewtonOptions::default(),
            mu_start: 0.1,
            mu_second: 0.2,
            continuation: ContinuationOptions::default(),
            both_directions: false,
            eigs: EigOptions::default(),
        };
        match kind {
            ProblemKind::Bratu1d => Preset {
                continuation: ContinuationOptions { ds: 0.2, ds_max: 0.5, n_steps: 80, mu_min: 0.05, mu_max: 4.0, ..Default::default() },
                ..base
            },
            ProblemKind::Bratu2d => Preset {
                grid: vec![21, 21],
                n_neurons: 800,
                // The default slope bound leaves the 80 boundary rows numerically rank deficient.
                sampling: SamplingOptions { alpha_scale: 1.5, ..Default::default() },
                continuation: ContinuationOptions { ds: 0.3, ds_max: 1.0, n_steps: 40, mu_min: 0.05, mu_max: 7.5, ..Default::default() },
                ..base
            },
            ProblemKind::Fhn => Preset {
                grid: vec![201],
                n_neurons: 200,
                mu_start: 0.5,
                mu_second: 0.52,
                continuation: ContinuationOptions { ds: 0.05, ds_max: 0.5, n_steps: 200, mu_min: 0.01, mu_max: 1.2, ..Default::default() },
                both_directions: true,
                eigs: EigOptions { sigma: 0.05, ..Default::default() },
                ..base
            },
            ProblemKind::AllenCahn => Preset {
                grid: vec![201],
                n_neurons: 200,
                mu_start: 0.8,
                mu_second: 0.79,
                continuation: ContinuationOptions { ds: 0.01, ds_max: 0.01, n_steps: 200, mu_min: 0.11, mu_max: 1.0, ..Default::default() },
                eigs: EigOptions { k: 12, sigma: 0.1, ..Default::default() },
                ..base
            },
        }
    }

    pub fn problem_def(&self) -> Result<ProblemDef> {
        ProblemDef::build(self.problem, &self.grid, self.n_neurons, self.seed, &self.sampling, &self.fixed_params)
    }

    /// Weights of the starting guess: zero, or for FitzHugh-Nagumo a front
    /// `u = -tanh(x - L/2)` with `v` on the nullcline of the `v` equation.
    pub fn initial_guess(&self, problem: &ProblemDef) -> Result<Col<f64>> {
        match self.problem {
            ProblemKind::Fhn => {
                let mid = 0.5 * problem.domain().bounds().iter().map(|[a, b]| a + b).sum::<f64>();
                let (a0, a1) = (problem.param("a0"), problem.param("a1"));
                let u = move |x: &[f64]| -(x[0] - mid).tanh();
                let v = move |x: &[f64]| (-(x[0] - mid).tanh() - a0) / a1;
                problem.fit_profile(&[&u, &v], self.solver.svd_tol)
            }
            _ => Ok(Col::zeros(problem.n_weights())),
        }
    }

    /// Converged states at `mu_start` and `mu_second`.
    pub fn start_states(&self, problem: &ProblemDef) -> Result<(SteadyState, SteadyState)> {
        let w0 = self.initial_guess(problem)?;
        let first = newton_solve(problem, &w0, self.mu_start, &self.solver)?;
        if !first.converged {
            return Err(Error::numeric(format!("no steady state found at {} = {}", problem.bifurcation_param_name(), self.mu_start)));
        }
        let second = newton_solve(problem, &first.weights, self.mu_second, &self.solver)?;
        if !second.converged {
            return Err(Error::numeric(format!("no steady state found at {} = {}", problem.bifurcation_param_name(), self.mu_second)));
        }
        Ok((first, second))
    }

    /// Start states plus the traced branch.
    pub fn run_continuation(&self, problem: &ProblemDef) -> Result<Branch> {
        let (a, b) = self.start_states(problem)?;
        if self.both_directions {
            trace_branch_both(problem, &a, &b, &self.continuation, &self.eigs)
        } else {
            trace_branch(problem, &a, &b, &self.continuation, &self.eigs)
        }
    }
}
