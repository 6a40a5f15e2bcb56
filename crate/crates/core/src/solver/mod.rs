//! Truncated-SVD least squares and the Newton iteration for steady states.

mod newton;
mod svd;

pub use newton::{newton_solve, NewtonOptions, NewtonRecord, SteadyState};
pub use svd::{numerical_rank, pinv_apply, singular_values, truncated_svd, SvdFactors, TruncationMode};
