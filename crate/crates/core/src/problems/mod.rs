//! Benchmark PDEs as collocation residuals over the output weights.
//!
//! Every benchmark has the form `D_a(mu) lap(u_a) + r_a(u, mu) = 0` in the
//! interior and a Dirichlet or Neumann row on the boundary, per field `a`.
//! The residual is stacked field-major, and so are the weights `[w_u; w_v]`.

mod collocation;
mod models;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::{Col, Mat};
use serde::{Deserialize, Serialize};

use crate::basis::{eval_features, sample_basis_with, Domain, FeatureMatrices, RpnnBasis, SamplingOptions};
use crate::error::{Error, Result};

pub use collocation::{linspace, CollocationSet};
pub use models::BoundaryKind;

pub type FixedParams = BTreeMap<String, f64>;

/// Allen-Cahn is singular as eps -> 0.
pub const MIN_EPSILON: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "bratu1d")]
    Bratu1d,
    #[serde(rename = "bratu2d")]
    Bratu2d,
    #[serde(rename = "fhn")]
    Fhn,
    #[serde(rename = "allen_cahn")]
    AllenCahn,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [ProblemKind::Bratu1d, ProblemKind::Bratu2d, ProblemKind::Fhn, ProblemKind::AllenCahn];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Bratu1d => "bratu1d",
            ProblemKind::Bratu2d => "bratu2d",
            ProblemKind::Fhn => "fhn",
            ProblemKind::AllenCahn => "allen_cahn",
        }
    }

    pub fn n_fields(self) -> usize {
        match self {
            ProblemKind::Fhn => 2,
            _ => 1,
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            ProblemKind::Bratu1d => Domain::interval(0.0, 1.0),
            ProblemKind::Bratu2d => Domain::rectangle([0.0, 1.0], [0.0, 1.0]),
            ProblemKind::Fhn => Domain::interval(0.0, 20.0),
            ProblemKind::AllenCahn => Domain::interval(-1.0, 1.0),
        }
        .expect("static domains are valid")
    }

    pub fn bifurcation_param_name(self) -> &'static str {
        match self {
            ProblemKind::Bratu1d | ProblemKind::Bratu2d => "p",
            ProblemKind::Fhn | ProblemKind::AllenCahn => "eps",
        }
    }

    pub fn boundary_kind(self) -> BoundaryKind {
        match self {
            ProblemKind::Bratu1d | ProblemKind::Bratu2d => BoundaryKind::Dirichlet,
            ProblemKind::Fhn | ProblemKind::AllenCahn => BoundaryKind::Neumann,
        }
    }

    pub fn default_params(self) -> FixedParams {
        match self {
            ProblemKind::Fhn => [("Du", 1.0), ("Dv", 4.0), ("a0", -0.03), ("a1", 2.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            _ => FixedParams::new(),
        }
    }

    /// Default parameters with `overrides` applied; unknown names are rejected.
    pub fn resolve_params(self, overrides: &FixedParams) -> Result<FixedParams> {
        let mut p = self.default_params();
        for (k, v) in overrides {
            match p.get_mut(k) {
                Some(slot) if v.is_finite() => *slot = *v,
                Some(_) => return Err(Error::arg(format!("parameter {k} must be finite"))),
                None => return Err(Error::arg(format!("{} has no parameter named {k:?}", self.name()))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown problem {s:?}")))
    }
}

/// Zero on boundary rows, one elsewhere, per field block.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMask {
    pub b_diag: Vec<f64>,
}

impl ConstraintMask {
    pub fn from_boundary(is_boundary: &[bool], n_fields: usize) -> Self {
        let b_diag = (0..n_fields)
            .flat_map(|_| is_boundary.iter().map(|&b| if b { 0.0 } else { 1.0 }))
            .collect();
        ConstraintMask { b_diag }
    }

    pub fn all_ones(n: usize) -> Self {
        ConstraintMask { b_diag: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.b_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b_diag.is_empty()
    }

    pub fn is_constraint(&self, i: usize) -> bool {
        self.b_diag[i] == 0.0
    }

    pub fn n_constraints(&self) -> usize {
        self.b_diag.iter().filter(|&&b| b == 0.0).count()
    }
}

/// A discretized benchmark problem.
#[derive(Clone, Debug)]
pub struct ProblemDef {
    kind: ProblemKind,
    colloc: CollocationSet,
    basis: RpnnBasis,
    features: FeatureMatrices,
    lap: Mat<f64>,
    bc_rows: Mat<f64>,
    params: FixedParams,
}

/// Summary statistics of a solution on the collocation points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub mean_u: f64,
    pub mean_v: Option<f64>,
    pub max_u: f64,
    /// Root-mean-square of u over the collocation points.
    pub l2_u: f64,
}

impl ProblemDef {
    pub fn new(kind: ProblemKind, colloc: CollocationSet, basis: RpnnBasis, overrides: &FixedParams) -> Result<Self> {
        if basis.domain() != &kind.domain() {
            return Err(Error::arg(format!("basis domain does not match {kind}")));
        }
        let params = kind.resolve_params(overrides)?;
        let features = eval_features(&basis, colloc.points().as_ref())?;
        let lap = features.laplacian();
        let bc_rows = match kind.boundary_kind() {
            BoundaryKind::Dirichlet => features.psi.clone(),
            BoundaryKind::Neumann => normal_derivative_rows(&colloc, &kind.domain(), &features),
        };
        Ok(ProblemDef { kind, colloc, basis, features, lap, bc_rows, params })
    }

    /// Equispaced grid with `grid[q]` points per axis and a freshly sampled basis.
    pub fn build(
        kind: ProblemKind,
        grid: &[usize],
        n_neurons: usize,
        seed: u64,
        sampling: &SamplingOptions,
        overrides: &FixedParams,
    ) -> Result<Self> {
        let domain = kind.domain();
        let colloc = CollocationSet::grid(&domain, grid)?;
        let per_axis = *grid.iter().min().expect("grid validated non-empty");
        let basis = sample_basis_with(&domain, n_neurons, per_axis, seed, sampling)?;
        ProblemDef::new(kind, colloc, basis, overrides)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn n_fields(&self) -> usize {
        self.kind.n_fields()
    }

    pub fn domain(&self) -> &Domain {
        self.basis.domain()
    }

    pub fn colloc(&self) -> &CollocationSet {
        &self.colloc
    }

    pub fn basis(&self) -> &RpnnBasis {
        &self.basis
    }

    pub fn features(&self) -> &FeatureMatrices {
        &self.features
    }

    pub fn psi(&self) -> &Mat<f64> {
        &self.features.psi
    }

    pub fn laplacian(&self) -> &Mat<f64> {
        &self.lap
    }

    pub fn params(&self) -> &FixedParams {
        &self.params
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn n_points(&self) -> usize {
        self.colloc.len()
    }

    pub fn n_neurons(&self) -> usize {
        self.basis.n_neurons()
    }

    pub fn n_weights(&self) -> usize {
        self.n_fields() * self.n_neurons()
    }

    pub fn n_rows(&self) -> usize {
        self.n_fields() * self.n_points()
    }

    pub fn bifurcation_param_name(&self) -> &'static str {
        self.kind.bifurcation_param_name()
    }

    pub fn constraint_mask(&self) -> ConstraintMask {
        ConstraintMask::from_boundary(self.colloc.is_boundary(), self.n_fields())
    }

    fn check(&self, w: &Col<f64>, mu: f64) -> Result<()> {
        if w.nrows() != self.n_weights() {
            return Err(Error::arg(format!("weights have length {}, expected {}", w.nrows(), self.n_weights())));
        }
        if !mu.is_finite() {
            return Err(Error::arg("parameter value must be finite"));
        }
        if self.kind == ProblemKind::AllenCahn && mu < MIN_EPSILON {
            return Err(Error::arg(format!("Allen-Cahn eps = {mu} is below the guard {MIN_EPSILON}")));
        }
        Ok(())
    }

    fn block<'a>(&self, w: &'a Col<f64>, a: usize) -> faer::ColRef<'a, f64> {
        let n = self.n_neurons();
        w.as_ref().subrows(a * n, n)
    }

    /// Network output per field at the collocation points.
    pub fn fields(&self, w: &Col<f64>) -> Vec<Col<f64>> {
        (0..self.n_fields()).map(|a| &self.features.psi * self.block(w, a)).collect()
    }

    /// Stacked field values `[u; v]` at the collocation points.
    pub fn values(&self, w: &Col<f64>) -> Col<f64> {
        stack(&self.fields(w))
    }

    /// Block-diagonal collocation matrix acting on stacked weights.
    pub fn psi_blocks(&self) -> Mat<f64> {
        block_diag(&self.features.psi, self.n_fields())
    }

    pub fn summary(&self, w: &Col<f64>) -> SolutionSummary {
        let f = self.fields(w);
        let m = self.n_points() as f64;
        let u = &f[0];
        SolutionSummary {
            mean_u: u.sum() / m,
            mean_v: f.get(1).map(|v| v.sum() / m),
            max_u: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            l2_u: u.norm_l2() / m.sqrt(),
        }
    }

    pub fn residual(&self, w: &Col<f64>, mu: f64) -> Result<Col<f64>> {
        self.check(w, mu)?;
        let (m, nf) = (self.n_points(), self.n_fields());
        let vals = self.fields(w);
        let mut out = Col::zeros(nf * m);
        let mut pt = vec![0.0; nf];
        for a in 0..nf {
            let wa = self.block(w, a);
            let lap = &self.lap * wa;
            let bc = &self.bc_rows * wa;
            let diff = models::diffusion(self, a, mu);
            for i in 0..m {
                out[a * m + i] = if self.colloc.is_boundary()[i] {
                    bc[i]
                } else {
                    for (b, v) in vals.iter().enumerate() {
                        pt[b] = v[i];
                    }
                    diff * lap[i] + models::reaction(self, a, &pt, mu)
                };
            }
        }
        finite_or_err(out, "residual")
    }

    pub fn jacobian_w(&self, w: &Col<f64>, mu: f64) -> Result<Mat<f64>> {
        self.check(w, mu)?;
        let (m, n, nf) = (self.n_points(), self.n_neurons(), self.n_fields());
        let vals = self.fields(w);
        let psi = &self.features.psi;
        let mut jac = Mat::zeros(nf * m, nf * n);
        let mut pt = vec![0.0; nf];
        for i in 0..m {
            for (b, v) in vals.iter().enumerate() {
                pt[b] = v[i];
            }
            let bnd = self.colloc.is_boundary()[i];
            for a in 0..nf {
                let row = a * m + i;
                if bnd {
                    for j in 0..n {
                        jac[(row, a * n + j)] = self.bc_rows[(i, j)];
                    }
                    continue;
                }
                let diff = models::diffusion(self, a, mu);
                for b in 0..nf {
                    let c = models::reaction_jac(self, a, b, &pt, mu);
                    let d = if a == b { diff } else { 0.0 };
                    for j in 0..n {
                        jac[(row, b * n + j)] = d * self.lap[(i, j)] + c * psi[(i, j)];
                    }
                }
            }
        }
        Ok(jac)
    }

    pub fn jacobian_mu(&self, w: &Col<f64>, mu: f64) -> Result<Col<f64>> {
        self.check(w, mu)?;
        let (m, nf) = (self.n_points(), self.n_fields());
        let vals = self.fields(w);
        let mut out = Col::zeros(nf * m);
        let mut pt = vec![0.0; nf];
        for a in 0..nf {
            let dd = models::diffusion_dmu(self, a, mu);
            let lap = if dd != 0.0 { Some(&self.lap * self.block(w, a)) } else { None };
            for i in 0..m {
                if self.colloc.is_boundary()[i] {
                    continue;
                }
                for (b, v) in vals.iter().enumerate() {
                    pt[b] = v[i];
                }
                out[a * m + i] = lap.as_ref().map_or(0.0, |l| dd * l[i]) + models::reaction_dmu(self, a, &pt, mu);
            }
        }
        finite_or_err(out, "parameter derivative")
    }

    /// Pointwise coefficients of the physical Jacobian at the collocation points.
    pub fn pointwise_jacobian(&self, w: &Col<f64>, mu: f64) -> Result<PointwiseJacobian> {
        self.check(w, mu)?;
        let (m, nf) = (self.n_points(), self.n_fields());
        let vals = self.fields(w);
        let mut reaction = vec![vec![Col::zeros(m); nf]; nf];
        let mut pt = vec![0.0; nf];
        for i in 0..m {
            if self.colloc.is_boundary()[i] {
                continue;
            }
            for (b, v) in vals.iter().enumerate() {
                pt[b] = v[i];
            }
            for (a, row) in reaction.iter_mut().enumerate() {
                for (b, col) in row.iter_mut().enumerate() {
                    col[i] = models::reaction_jac(self, a, b, &pt, mu);
                }
            }
        }
        Ok(PointwiseJacobian {
            diffusion: (0..nf).map(|a| models::diffusion(self, a, mu)).collect(),
            reaction,
            boundary: self.kind.boundary_kind(),
        })
    }

    /// Least-squares weights whose output best matches `values` (stacked per field).
    pub fn fit_values(&self, values: &Col<f64>, svd_tol: f64) -> Result<Col<f64>> {
        if values.nrows() != self.n_rows() {
            return Err(Error::arg("fit target has the wrong length"));
        }
        let f = crate::solver::truncated_svd(self.psi().as_ref(), svd_tol, crate::solver::TruncationMode::Relative)?;
        let m = self.n_points();
        let blocks: Result<Vec<_>> = (0..self.n_fields())
            .map(|a| f.pinv_apply(&values.as_ref().subrows(a * m, m).to_owned()))
            .collect();
        Ok(stack(&blocks?))
    }

    /// Fits a profile given as a function of the point coordinates, one closure per field.
    pub fn fit_profile(&self, profile: &[&dyn Fn(&[f64]) -> f64], svd_tol: f64) -> Result<Col<f64>> {
        if profile.len() != self.n_fields() {
            return Err(Error::arg("need one profile per field"));
        }
        let m = self.n_points();
        let vals = Col::from_fn(self.n_rows(), |r| profile[r / m](&self.colloc.point(r % m)));
        self.fit_values(&vals, svd_tol)
    }
}

/// Coefficient form of the physical Jacobian: per field pair `(a, b)`,
/// `delta_ab * diffusion[a] * lap + diag(reaction[a][b])` on interior rows and
/// the boundary operator on boundary rows.
#[derive(Clone, Debug)]
pub struct PointwiseJacobian {
    pub diffusion: Vec<f64>,
    pub reaction: Vec<Vec<Col<f64>>>,
    pub boundary: BoundaryKind,
}

impl PointwiseJacobian {
    /// Applies the physical Jacobian to the basis blocks, giving `J_u Psi`.
    pub fn compose(&self, problem: &ProblemDef) -> Mat<f64> {
        let f = problem.features();
        let (m, n, nf) = (problem.n_points(), problem.n_neurons(), problem.n_fields());
        let bc = match self.boundary {
            BoundaryKind::Dirichlet => f.psi.clone(),
            BoundaryKind::Neumann => normal_derivative_rows(problem.colloc(), problem.domain(), f),
        };
        let lap = f.laplacian();
        let mut out = Mat::zeros(nf * m, nf * n);
        for a in 0..nf {
            for b in 0..nf {
                let mut blk = Mat::<f64>::zeros(m, n);
                if a == b {
                    blk += faer::Scale(self.diffusion[a]) * &lap;
                }
                let scaled = Mat::from_fn(m, n, |i, j| self.reaction[a][b][i] * f.psi[(i, j)]);
                blk += &scaled;
                for i in 0..m {
                    if problem.colloc().is_boundary()[i] {
                        for j in 0..n {
                            blk[(i, j)] = if a == b { bc[(i, j)] } else { 0.0 };
                        }
                    }
                }
                out.as_mut().submatrix_mut(a * m, b * n, m, n).copy_from(&blk);
            }
        }
        out
    }
}

/// Rows of the outward-axis derivative at boundary points (zero elsewhere).
fn normal_derivative_rows(colloc: &CollocationSet, domain: &Domain, f: &FeatureMatrices) -> Mat<f64> {
    let (m, n) = (f.n_points(), f.n_neurons());
    let mut out = Mat::zeros(m, n);
    for i in 0..m {
        if !colloc.is_boundary()[i] {
            continue;
        }
        let x = colloc.point(i);
        for (q, [a, b]) in domain.bounds().iter().enumerate() {
            let sign = if (x[q] - b).abs() <= 1e-12 {
                1.0
            } else if (x[q] - a).abs() <= 1e-12 {
                -1.0
            } else {
                continue;
            };
            for j in 0..n {
                out[(i, j)] += sign * f.dpsi[q][(i, j)];
            }
        }
    }
    out
}

pub fn stack(blocks: &[Col<f64>]) -> Col<f64> {
    let total = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Col::zeros(total);
    let mut k = 0;
    for b in blocks {
        out.as_mut().subrows_mut(k, b.nrows()).copy_from(b);
        k += b.nrows();
    }
    out
}

pub fn block_diag(a: &Mat<f64>, copies: usize) -> Mat<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut out = Mat::zeros(copies * m, copies * n);
    for c in 0..copies {
        out.as_mut().submatrix_mut(c * m, c * n, m, n).copy_from(a);
    }
    out
}

fn finite_or_err(v: Col<f64>, what: &str) -> Result<Col<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::numeric(format!("{what} contains non-finite entries")))
    }
}

#[cfg(test)]
mod tests;
