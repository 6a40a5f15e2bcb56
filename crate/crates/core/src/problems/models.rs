//! Pointwise coefficients of the three benchmark models.

use serde::{Deserialize, Serialize};

use super::{ProblemDef, ProblemKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Coefficient of the Laplacian in the equation for field `a`.
pub(super) fn diffusion(p: &ProblemDef, a: usize, mu: f64) -> f64 {
    match p.kind() {
        ProblemKind::Bratu1d | ProblemKind::Bratu2d => 1.0,
        ProblemKind::Fhn => p.param(if a == 0 { "Du" } else { "Dv" }),
        ProblemKind::AllenCahn => mu,
    }
}

pub(super) fn diffusion_dmu(p: &ProblemDef, _a: usize, _mu: f64) -> f64 {
    match p.kind() {
        ProblemKind::AllenCahn => 1.0,
        _ => 0.0,
    }
}

/// Reaction term of field `a` at point values `x` (one entry per field).
pub(super) fn reaction(p: &ProblemDef, a: usize, x: &[f64], mu: f64) -> f64 {
    let u = x[0];
    match p.kind() {
        ProblemKind::Bratu1d | ProblemKind::Bratu2d => mu * u.exp(),
        ProblemKind::Fhn if a == 0 => u - u * u * u - x[1],
        ProblemKind::Fhn => mu * (u - p.param("a1") * x[1] - p.param("a0")),
        ProblemKind::AllenCahn => -(u * u * u - u) / mu,
    }
}

/// Derivative of reaction `a` with respect to field `b`.
pub(super) fn reaction_jac(p: &ProblemDef, a: usize, b: usize, x: &[f64], mu: f64) -> f64 {
    let u = x[0];
    match (p.kind(), a, b) {
        (ProblemKind::Bratu1d | ProblemKind::Bratu2d, _, _) => mu * u.exp(),
        (ProblemKind::Fhn, 0, 0) => 1.0 - 3.0 * u * u,
        (ProblemKind::Fhn, 0, _) => -1.0,
        (ProblemKind::Fhn, _, 0) => mu,
        (ProblemKind::Fhn, _, _) => -mu * p.param("a1"),
        (ProblemKind::AllenCahn, _, _) => -(3.0 * u * u - 1.0) / mu,
    }
}

pub(super) fn reaction_dmu(p: &ProblemDef, a: usize, x: &[f64], mu: f64) -> f64 {
    let u = x[0];
    match p.kind() {
        ProblemKind::Bratu1d | ProblemKind::Bratu2d => u.exp(),
        ProblemKind::Fhn if a == 0 => 0.0,
        ProblemKind::Fhn => u - p.param("a1") * x[1] - p.param("a0"),
        ProblemKind::AllenCahn => (u * u * u - u) / (mu * mu),
    }
}
