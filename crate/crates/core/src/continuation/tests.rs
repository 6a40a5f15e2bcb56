use super::*;
use crate::basis::SamplingOptions;
use crate::problems::{FixedParams, ProblemKind};
use crate::solver::{newton_solve, NewtonOptions};

fn bratu(m: usize, n: usize) -> ProblemDef {
    ProblemDef::build(ProblemKind::Bratu1d, &[m], n, 1, &SamplingOptions::default(), &FixedParams::new()).unwrap()
}

fn allen_cahn(m: usize, n: usize) -> ProblemDef {
    ProblemDef::build(ProblemKind::AllenCahn, &[m], n, 2, &SamplingOptions::default(), &FixedParams::new()).unwrap()
}

fn solve(p: &ProblemDef, mu: f64, w0: Option<&Col<f64>>) -> SteadyState {
    let zero = Col::zeros(p.n_weights());
    let st = newton_solve(p, w0.unwrap_or(&zero), mu, &NewtonOptions::default()).unwrap();
    assert!(st.converged, "newton failed at mu = {mu}");
    st
}

fn eig() -> EigOptions {
    EigOptions { k: 4, ..Default::default() }
}

#[test]
fn options_validate() {
    assert!(ContinuationOptions { ds: 0.0, ..Default::default() }.validate().unwrap_err().is_usage());
    assert!(ContinuationOptions { mu_min: 1.0, mu_max: 0.0, ..Default::default() }.validate().is_err());
    assert!(ContinuationOptions::default().validate().is_ok());
    let p = bratu(21, 12);
    let a = BranchPoint::from_state(&p, &solve(&p, 0.1, None), 0.0);
    assert!(arclength_step(&p, &a, &a, 0.1, &ContinuationOptions::default()).is_err());
    assert!(arclength_step(&p, &a, &a, 0.0, &ContinuationOptions::default()).unwrap_err().is_usage());
}

#[test]
fn single_step_advances_and_matches_fd() {
    let p = bratu(61, 30);
    let (s0, s1) = (solve(&p, 0.1, None), solve(&p, 0.2, None));
    let opts = ContinuationOptions { ds: 0.1, ..Default::default() };
    let (a, b) = (BranchPoint::from_state(&p, &s0, 0.0), BranchPoint::from_state(&p, &s1, 0.1));
    let out = arclength_step(&p, &a, &b, 0.1, &opts).unwrap();
    assert!(out.point.mu > 0.2);
    assert!(out.point.constraint.abs() <= opts.tol);

    let fd = crate::fdref::FdProblem::new(ProblemKind::Bratu1d, &FixedParams::new(), &[61]).unwrap();
    let r = crate::fdref::fd_solve(&fd, out.point.mu, None, 1e-10, 50).unwrap();
    let fd_mean = r.values.iter().sum::<f64>() / 61.0;
    assert!((out.point.summary.mean_u - fd_mean).abs() < 1e-3);

    let mut pt = out.point;
    annotate(&p, &mut pt, &eig(), opts.stability_zero_tol);
    assert!(pt.is_stable());
}

#[test]
fn bratu_fold_is_traversed_once() {
    let p = bratu(61, 30);
    let (s0, s1) = (solve(&p, 0.1, None), solve(&p, 0.2, None));
    let opts = ContinuationOptions { ds: 0.2, ds_max: 0.5, n_steps: 60, mu_min: 0.05, mu_max: 4.0, ..Default::default() };
    let b = trace_branch(&p, &s0, &s1, &opts, &eig()).unwrap();
    assert!((b.max_mu() - 3.5138).abs() < 5e-3, "max mu {}", b.max_mu());
    let folds: Vec<_> = b.events_of(EventKind::Fold).collect();
    assert_eq!(folds.len(), 1);
    assert!((folds[0].mu - 3.5138).abs() < 5e-3);
    assert_eq!(b.events_of(EventKind::Hopf).count(), 0);
    assert_eq!(b.events_of(EventKind::Pitchfork).count(), 0);
    let changes = b.points.windows(2).filter(|w| w[0].is_stable() != w[1].is_stable()).count();
    assert_eq!(changes, 1);
    for pt in &b.points[2..] {
        assert!(pt.constraint.abs() <= opts.tol);
        assert!(pt.residual_norm <= opts.residual_tol);
    }
}

#[test]
fn stable_stretch_has_no_events() {
    let p = bratu(41, 20);
    let (s0, s1) = (solve(&p, 0.1, None), solve(&p, 0.2, None));
    let opts = ContinuationOptions { ds: 0.1, n_steps: 20, mu_max: 1.0, ..Default::default() };
    let b = trace_branch(&p, &s0, &s1, &opts, &eig()).unwrap();
    assert_eq!(b.termination, Termination::LeftRange);
    assert!(b.events.is_empty());
    assert!(b.points.iter().all(|pt| pt.is_stable() && pt.tags.is_empty()));
}

#[test]
fn allen_cahn_trivial_branch_pitchfork() {
    let p = allen_cahn(61, 40);
    let (s0, s1) = (solve(&p, 0.8, None), solve(&p, 0.78, None));
    let opts = ContinuationOptions { ds: 0.03, ds_max: 0.03, n_steps: 40, mu_min: 0.5, ..Default::default() };
    let b = trace_branch(&p, &s0, &s1, &opts, &eig()).unwrap();
    let pf: Vec<_> = b.events_of(EventKind::Pitchfork).collect();
    assert_eq!(pf.len(), 1, "{:?}", b.events);
    let eps1 = 2.0 / std::f64::consts::PI;
    assert!(pf[0].refined);
    assert!((pf[0].mu - eps1).abs() < 5e-3, "{}", pf[0].mu);
    assert_eq!(b.events_of(EventKind::Fold).count(), 0);
}

#[test]
fn switching_is_mirror_symmetric() {
    let p = allen_cahn(61, 40);
    let eps = 0.97 * 2.0 / std::f64::consts::PI;
    let st = solve(&p, eps, None);
    let at = BranchPoint::from_state(&p, &st, 0.0);
    let s = leading_eigs(&p, &st.weights, eps, &EigOptions { k: 4, sigma: 0.1, ..Default::default() }).unwrap();
    // Second physical eigenvalue belongs to the first antisymmetric mode.
    let idx = s.physical()[1];
    assert!(s.eigenvalues[idx].re.abs() < 0.2);
    let v = Col::from_fn(p.n_weights(), |i| s.weight_vectors[idx][i].re);

    let newton = NewtonOptions::default();
    let none = switch_branch(&p, &at, &v, 0.0, &newton).unwrap();
    assert!(none.switch_failed);
    let plus = switch_branch(&p, &at, &v, 0.3, &newton).unwrap();
    let minus = switch_branch(&p, &at, &v, -0.3, &newton).unwrap();
    assert!(!plus.switch_failed && !minus.switch_failed);
    let (up, um) = (p.values(&plus.state.weights), p.values(&minus.state.weights));
    assert!((&up + &um).norm_max() < 1e-8);
    assert!(up.norm_max() > 0.05);
    assert!(switch_branch(&p, &at, &Col::zeros(3), 0.3, &newton).unwrap_err().is_usage());
}
