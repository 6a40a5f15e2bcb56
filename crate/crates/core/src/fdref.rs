//! Second-order finite-difference reference discretizations of the benchmarks.
//!
//! Bratu eliminates its Dirichlet nodes; FitzHugh-Nagumo and Allen-Cahn keep
//! every node and close the Neumann condition with ghost points, so the end
//! rows of the Laplacian read `2 (u_1 - u_0) / h^2`.

use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat};

use crate::error::{Error, Result};
use crate::problems::{linspace, BoundaryKind, FixedParams, ProblemKind, MIN_EPSILON};
use crate::stability::{normalized, EigGroup, SpectrumResult};

#[derive(Clone, Debug)]
pub struct FdProblem {
    kind: ProblemKind,
    params: FixedParams,
    grid: Vec<usize>,
    /// Laplacian on the unknowns of one field.
    lap: Mat<f64>,
    /// Full-grid index of each unknown of one field.
    unknown_nodes: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FdSolution {
    /// Field values on the full grid, stacked per field.
    pub values: Col<f64>,
    pub unknowns: Col<f64>,
    pub mu: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FdProblem {
    /// `grid[q]` nodes per axis, boundary nodes included.
    pub fn new(kind: ProblemKind, overrides: &FixedParams, grid: &[usize]) -> Result<Self> {
        let domain = kind.domain();
        if grid.len() != domain.dim() || grid.iter().any(|&g| g < 3) {
            return Err(Error::arg(format!("{kind} needs {} axes with at least 3 nodes", domain.dim())));
        }
        let params = kind.resolve_params(overrides)?;
        let h: Vec<f64> = (0..grid.len()).map(|q| domain.length(q) / (grid[q] - 1) as f64).collect();
        let total: usize = grid.iter().product();
        let interior = |node: usize| {
            let mut rest = node;
            grid.iter().all(|&g| {
                let k = rest % g;
                rest /= g;
                k > 0 && k + 1 < g
            })
        };
        let unknown_nodes: Vec<usize> = match kind.boundary_kind() {
            BoundaryKind::Dirichlet => (0..total).filter(|&i| interior(i)).collect(),
            BoundaryKind::Neumann => (0..total).collect(),
        };
        let pos: Vec<Option<usize>> = {
            let mut p = vec![None; total];
            for (k, &i) in unknown_nodes.iter().enumerate() {
                p[i] = Some(k);
            }
            p
        };
        let nu = unknown_nodes.len();
        let mut lap = Mat::zeros(nu, nu);
        for (row, &node) in unknown_nodes.iter().enumerate() {
            let mut stride = 1;
            let mut rest = node;
            for (q, &g) in grid.iter().enumerate() {
                let k = rest % g;
                rest /= g;
                let inv = 1.0 / (h[q] * h[q]);
                lap[(row, row)] -= 2.0 * inv;
                // Ghost points mirror the inner neighbour at a Neumann end.
                let left = if k > 0 { Some(node - stride) } else { None };
                let right = if k + 1 < g { Some(node + stride) } else { None };
                let (left, right) = match (left, right) {
                    (None, r) => (r, r),
                    (l, None) => (l, l),
                    lr => lr,
                };
                for nb in [left, right].into_iter().flatten() {
                    if let Some(c) = pos[nb] {
                        lap[(row, c)] += inv;
                    }
                }
                stride *= g;
            }
        }
        Ok(FdProblem { kind, params, grid: grid.to_vec(), lap, unknown_nodes })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn laplacian(&self) -> &Mat<f64> {
        &self.lap
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.iter().product()
    }

    pub fn n_unknowns(&self) -> usize {
        self.kind.n_fields() * self.unknown_nodes.len()
    }

    /// Node coordinates, first axis fastest.
    pub fn nodes(&self) -> Mat<f64> {
        let domain = self.kind.domain();
        let axes: Vec<Vec<f64>> = self.grid.iter().zip(domain.bounds()).map(|(&g, [a, b])| linspace(*a, *b, g)).collect();
        Mat::from_fn(self.n_nodes(), self.grid.len(), |i, q| {
            let stride: usize = self.grid[..q].iter().product();
            axes[q][(i / stride) % self.grid[q]]
        })
    }

    /// Unknowns to full-grid values (Dirichlet nodes set to zero).
    pub fn expand(&self, x: &Col<f64>) -> Col<f64> {
        let (nn, nu) = (self.n_nodes(), self.unknown_nodes.len());
        let mut out = Col::zeros(self.kind.n_fields() * nn);
        for a in 0..self.kind.n_fields() {
            for (k, &i) in self.unknown_nodes.iter().enumerate() {
                out[a * nn + i] = x[a * nu + k];
            }
        }
        out
    }

    pub fn restrict(&self, full: &Col<f64>) -> Col<f64> {
        let (nn, nu) = (self.n_nodes(), self.unknown_nodes.len());
        Col::from_fn(self.n_unknowns(), |r| full[(r / nu) * nn + self.unknown_nodes[r % nu]])
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        if !mu.is_finite() || (self.kind == ProblemKind::AllenCahn && mu < MIN_EPSILON) {
            return Err(Error::arg(format!("invalid parameter value {mu} for {}", self.kind)));
        }
        Ok(())
    }

    pub fn residual(&self, x: &Col<f64>, mu: f64) -> Result<Col<f64>> {
        self.check_mu(mu)?;
        let nu = self.unknown_nodes.len();
        if x.nrows() != self.n_unknowns() {
            return Err(Error::arg("wrong number of unknowns"));
        }
        let u = x.as_ref().subrows(0, nu);
        let lu = &self.lap * u;
        let out = match self.kind {
            ProblemKind::Bratu1d | ProblemKind::Bratu2d => Col::from_fn(nu, |i| lu[i] + mu * u[i].exp()),
            ProblemKind::AllenCahn => Col::from_fn(nu, |i| mu * lu[i] - (u[i].powi(3) - u[i]) / mu),
            ProblemKind::Fhn => {
                let v = x.as_ref().subrows(nu, nu);
                let lv = &self.lap * v;
                let p = |k: &str| self.params[k];
                Col::from_fn(2 * nu, |r| {
                    if r < nu {
                        p("Du") * lu[r] + u[r] - u[r].powi(3) - v[r]
                    } else {
                        let i = r - nu;
                        p("Dv") * lv[i] + mu * (u[i] - p("a1") * v[i] - p("a0"))
                    }
                })
            }
        };
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::numeric("finite-difference residual is not finite"))
        }
    }

    pub fn jacobian(&self, x: &Col<f64>, mu: f64) -> Result<Mat<f64>> {
        self.check_mu(mu)?;
        let nu = self.unknown_nodes.len();
        let u = x.as_ref().subrows(0, nu);
        let diag_add = |m: &mut Mat<f64>, r0: usize, c0: usize, d: &dyn Fn(usize) -> f64| {
            for i in 0..nu {
                m[(r0 + i, c0 + i)] += d(i);
            }
        };
        Ok(match self.kind {
            ProblemKind::Bratu1d | ProblemKind::Bratu2d => {
                let mut j = self.lap.clone();
                diag_add(&mut j, 0, 0, &|i| mu * u[i].exp());
                j
            }
            ProblemKind::AllenCahn => {
                let mut j = faer::Scale(mu) * &self.lap;
                diag_add(&mut j, 0, 0, &|i| -(3.0 * u[i] * u[i] - 1.0) / mu);
                j
            }
            ProblemKind::Fhn => {
                let p = |k: &str| self.params[k];
                let mut j = Mat::zeros(2 * nu, 2 * nu);
                j.as_mut().submatrix_mut(0, 0, nu, nu).copy_from(faer::Scale(p("Du")) * &self.lap);
                j.as_mut().submatrix_mut(nu, nu, nu, nu).copy_from(faer::Scale(p("Dv")) * &self.lap);
                diag_add(&mut j, 0, 0, &|i| 1.0 - 3.0 * u[i] * u[i]);
                diag_add(&mut j, 0, nu, &|_| -1.0);
                diag_add(&mut j, nu, 0, &|_| mu);
                diag_add(&mut j, nu, nu, &|_| -mu * p("a1"));
                j
            }
        })
    }
}

/// Damped Newton on the finite-difference system. `u0` holds full-grid values
/// (zero when absent).
pub fn fd_solve(fd: &FdProblem, mu: f64, u0: Option<&Col<f64>>, tol: f64, max_iter: usize) -> Result<FdSolution> {
    let mut x = match u0 {
        Some(v) if v.nrows() == fd.kind.n_fields() * fd.n_nodes() => fd.restrict(v),
        Some(_) => return Err(Error::arg("initial guess has the wrong length")),
        None => Col::zeros(fd.n_unknowns()),
    };
    let mut f = fd.residual(&x, mu)?;
    let mut iterations = 0;
    while f.norm_max() > tol && iterations < max_iter {
        iterations += 1;
        let dx = -fd.jacobian(&x, mu)?.partial_piv_lu().solve(&f);
        let base = f.norm_l2();
        let mut t = 1.0;
        loop {
            let trial = &x + faer::Scale(t) * &dx;
            match fd.residual(&trial, mu) {
                Ok(ft) if ft.norm_l2() < base || t < 1e-3 => {
                    x = trial;
                    f = ft;
                    break;
                }
                Ok(_) | Err(Error::Numeric(_)) if t >= 1e-3 => t *= 0.5,
                Ok(ft) => {
                    x = trial;
                    f = ft;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let residual_norm = f.norm_max();
    let converged = residual_norm <= tol;
    if !converged {
        log::warn!("finite-difference Newton stopped at |F| = {residual_norm:.2e} after {iterations} iterations");
    }
    Ok(FdSolution { values: fd.expand(&x), unknowns: x, mu, residual_norm, iterations, converged })
}

/// Leading `k` eigenpairs (by real part) of the finite-difference Jacobian.
pub fn fd_spectrum(fd: &FdProblem, mu: f64, unknowns: &Col<f64>, k: usize) -> Result<SpectrumResult> {
    let j = fd.jacobian(unknowns, mu)?;
    let evd = j.eigen().map_err(|e| Error::numeric(format!("dense eigensolve failed: {e:?}")))?;
    let vals: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].re.total_cmp(&vals[a].re).then(vals[b].im.total_cmp(&vals[a].im)));
    let mut out = SpectrumResult { shift: f64::NAN, ..Default::default() };
    let (nn, nu) = (fd.n_nodes(), fd.unknown_nodes.len());
    for &c in order.iter().take(k) {
        let x = evd.U().col(c);
        let mut phi = Col::<c64>::zeros(fd.kind.n_fields() * nn);
        for a in 0..fd.kind.n_fields() {
            for (r, &i) in fd.unknown_nodes.iter().enumerate() {
                phi[a * nn + i] = x[a * nu + r];
            }
        }
        let (phi, s) = normalized(&phi);
        let xs = Col::from_fn(x.nrows(), |i| x[i] * s);
        let jx = Col::from_fn(x.nrows(), |i| (0..x.nrows()).map(|l| xs[l] * j[(i, l)]).sum::<c64>());
        let r = Col::from_fn(x.nrows(), |i| jx[i] - vals[c] * xs[i]);
        out.eigenvalues.push(vals[c]);
        out.residuals.push(r.norm_l2() / jx.norm_l2().max(f64::MIN_POSITIVE));
        out.physical_vectors.push(phi);
        out.groups.push(EigGroup::Physical);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd(kind: ProblemKind, n: &[usize]) -> FdProblem {
        FdProblem::new(kind, &FixedParams::new(), n).unwrap()
    }

    /// Lower-branch Bratu profile from `cosh t = 4 t / sqrt(2 p)`, root by bisection.
    fn bratu_exact(p: f64, x: f64) -> f64 {
        let g = |t: f64| t.cosh() - 4.0 * t / (2.0 * p).sqrt();
        let (mut a, mut b) = (1e-12, 1.1997);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(a) * g(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let t = 0.5 * (a + b);
        2.0 * (t.cosh() / (t * (1.0 - 2.0 * x)).cosh()).ln()
    }

    fn bratu_error(n: usize, p: f64) -> f64 {
        let f = fd(ProblemKind::Bratu1d, &[n]);
        let s = fd_solve(&f, p, None, 1e-10, 50).unwrap();
        assert!(s.converged);
        let x = f.nodes();
        (0..n).map(|i| (s.values[i] - bratu_exact(p, x[(i, 0)])).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn stencils_annihilate_constants_where_expected() {
        let lap1 = fd(ProblemKind::Fhn, &[21]).laplacian().clone();
        let ones = Col::<f64>::from_fn(21, |_| 1.0);
        assert!((&lap1 * &ones).norm_max() < 1e-12);
        let lap2 = fd(ProblemKind::Bratu2d, &[6, 5]).laplacian().clone();
        assert_eq!(lap2.nrows(), 4 * 3);
        let d = fd(ProblemKind::Bratu1d, &[11]);
        let l = d.laplacian();
        for i in 1..l.nrows() - 1 {
            assert!((0..l.ncols()).map(|j| l[(i, j)]).sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn bratu_matches_closed_form_at_second_order() {
        assert!(bratu_error(101, 1.0) <= 1e-3);
        let (e1, e2, e3) = (bratu_error(51, 2.0), bratu_error(101, 2.0), bratu_error(201, 2.0));
        for r in [e1 / e2, e2 / e3] {
            assert!((3.5..=4.5).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn trivial_solutions() {
        let f = fd(ProblemKind::Bratu1d, &[101]);
        assert_eq!(fd_solve(&f, 0.0, None, 1e-10, 10).unwrap().values.norm_max(), 0.0);
        let f = fd(ProblemKind::AllenCahn, &[101]);
        let one = Col::from_fn(101, |_| 1.0);
        let s = fd_solve(&f, 0.5, Some(&one), 1e-10, 10).unwrap();
        assert!(s.converged && (&s.values - &one).norm_max() == 0.0);
    }

    #[test]
    fn laplacian_spectra() {
        let f = fd(ProblemKind::Bratu1d, &[101]);
        let p = 1e-3;
        let s = fd_solve(&f, p, None, 1e-10, 20).unwrap();
        let sp = fd_spectrum(&f, p, &s.unknowns, 3).unwrap();
        assert!((sp.eigenvalues[0].re - (-PI * PI + p)).abs() < 1e-2);

        let eps = 0.3;
        let f = fd(ProblemKind::AllenCahn, &[201]);
        let sp = fd_spectrum(&f, eps, &Col::zeros(201), 4).unwrap();
        for (k, lam) in sp.eigenvalues.iter().enumerate() {
            let want = 1.0 / eps - eps * (k as f64 * PI / 2.0).powi(2);
            assert!((lam.re - want).abs() < 1e-3 * want.abs().max(1.0), "{k}: {lam} vs {want}");
        }
    }

    #[test]
    fn fhn_front_has_damped_oscillatory_pair() {
        let f = fd(ProblemKind::Fhn, &[201]);
        let x = f.nodes();
        let guess = Col::from_fn(402, |r| {
            let u = -(x[(r % 201, 0)] - 10.0).tanh();
            if r < 201 { u } else { (u + 0.03) / 2.0 }
        });
        let mut st = fd_solve(&f, 0.5, Some(&guess), 1e-10, 50).unwrap();
        assert!(st.converged);
        for eps in [0.3, 0.15, 0.08, 0.05, 0.03] {
            st = fd_solve(&f, eps, Some(&st.values), 1e-10, 50).unwrap();
            assert!(st.converged);
        }
        let sp = fd_spectrum(&f, 0.03, &st.unknowns, 4).unwrap();
        let lead = sp.eigenvalues[0];
        assert!(lead.re < 0.0 && lead.im.abs() > 1e-3, "{lead}");
        assert!(sp.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn unmasked_dense_path_agrees() {
        let f = fd(ProblemKind::Bratu1d, &[31]);
        let s = fd_solve(&f, 1.0, None, 1e-10, 20).unwrap();
        let j = f.jacobian(&s.unknowns, 1.0).unwrap();
        let dense = crate::stability::dense_generalized_eigs(&j, &crate::ConstraintMask::all_ones(29), Default::default()).unwrap();
        let sp = fd_spectrum(&f, 1.0, &s.unknowns, 29).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&sp.eigenvalues) {
            assert!((a - b).norm() < 1e-8 * a.norm());
        }
    }
}
