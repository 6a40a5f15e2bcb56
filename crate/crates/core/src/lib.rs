//! Steady states, branches, and linear stability of PDEs discretized by
//! physics-informed random projection networks.

pub mod basis;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod fdref;
pub mod io;
pub mod presets;
pub mod reproduce;
pub mod problems;
pub mod solver;
pub mod stability;

pub use basis::{eval_features, sample_basis, sample_basis_with, CenterPlacement, Domain, FeatureMatrices, RpnnBasis, SamplingOptions};
pub use continuation::{trace_branch, trace_branch_both, Branch, BranchPoint, ContinuationOptions, Event, EventKind, Termination};
pub use error::{Error, Result};
pub use faer::c64;
pub use fdref::{fd_solve, fd_spectrum, FdProblem, FdSolution};
pub use presets::Preset;
pub use problems::{CollocationSet, ConstraintMask, FixedParams, ProblemDef, ProblemKind};
pub use solver::{newton_solve, NewtonOptions, SteadyState, SvdFactors, TruncationMode};
pub use stability::{EigGroup, EigMethod, EigOptions, SpectrumResult};
