use super::*;
use crate::basis::SamplingOptions;
use crate::solver::{newton_solve, NewtonOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(kind: ProblemKind) -> ProblemDef {
    let grid: &[usize] = if kind == ProblemKind::Bratu2d { &[7, 6] } else { &[23] };
    ProblemDef::build(kind, grid, 17, 3, &SamplingOptions::default(), &FixedParams::new()).unwrap()
}

fn mu_for(kind: ProblemKind) -> f64 {
    match kind {
        ProblemKind::Bratu1d | ProblemKind::Bratu2d => 1.7,
        ProblemKind::Fhn => 0.6,
        ProblemKind::AllenCahn => 0.3,
    }
}

fn random_weights(p: &ProblemDef, seed: u64) -> Col<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Col::from_fn(p.n_weights(), |_| 0.2 * (rng.random::<f64>() - 0.5))
}

#[test]
fn weight_jacobian_matches_central_differences() {
    let h = 1e-6;
    for kind in ProblemKind::ALL {
        let p = small(kind);
        let mu = mu_for(kind);
        let w = random_weights(&p, 7);
        let jac = p.jacobian_w(&w, mu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let j = rng.random_range(0..p.n_weights());
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fd = (p.residual(&wp, mu).unwrap() - p.residual(&wm, mu).unwrap()) / (2.0 * h);
            let col = jac.col(j).to_owned();
            let err = (&fd - &col).norm_l2();
            assert!(err <= 1e-6 * (1.0 + col.norm_l2()), "{kind} column {j}: {err:e}");
        }
    }
}

#[test]
fn parameter_jacobian_matches_central_differences() {
    let h = 1e-6;
    for kind in ProblemKind::ALL {
        let p = small(kind);
        let mu = mu_for(kind);
        let w = random_weights(&p, 8);
        let fd = (p.residual(&w, mu + h).unwrap() - p.residual(&w, mu - h).unwrap()) / (2.0 * h);
        let an = p.jacobian_mu(&w, mu).unwrap();
        for i in 0..fd.nrows() {
            assert!((fd[i] - an[i]).abs() <= 1e-6 * (1.0 + an[i].abs()), "{kind} row {i}");
        }
    }
}

#[test]
fn composed_pointwise_jacobian_reproduces_weight_jacobian() {
    for kind in ProblemKind::ALL {
        let p = small(kind);
        let w = random_weights(&p, 9);
        let mu = mu_for(kind);
        let jw = p.jacobian_w(&w, mu).unwrap();
        let comp = p.pointwise_jacobian(&w, mu).unwrap().compose(&p);
        assert!((&jw - &comp).norm_l2() <= 1e-12 * jw.norm_l2(), "{kind}");
    }
}

#[test]
fn bratu_trivial_residuals() {
    let p = small(ProblemKind::Bratu1d);
    let w = Col::zeros(p.n_weights());
    assert_eq!(p.residual(&w, 0.0).unwrap().norm_max(), 0.0);
    let r = p.residual(&w, 1.0).unwrap();
    for i in 0..p.n_points() {
        assert_eq!(r[i], if p.colloc().is_boundary()[i] { 0.0 } else { 1.0 });
    }
    let dmu = p.jacobian_mu(&w, 0.3).unwrap();
    for i in 0..p.n_points() {
        assert_eq!(dmu[i], if p.colloc().is_boundary()[i] { 0.0 } else { 1.0 });
    }
    let jac = p.jacobian_w(&w, 0.0).unwrap();
    for i in 0..p.n_points() {
        let want = if p.colloc().is_boundary()[i] { p.psi().row(i) } else { p.laplacian().row(i) };
        assert_eq!((jac.row(i) - want).norm_max(), 0.0);
    }
}

#[test]
fn allen_cahn_parameter_derivative_vanishes_at_zero() {
    let p = small(ProblemKind::AllenCahn);
    let d = p.jacobian_mu(&Col::zeros(p.n_weights()), 0.4).unwrap();
    assert_eq!(d.norm_max(), 0.0);
}

#[test]
fn mask_zero_counts() {
    let cases = [(ProblemKind::Bratu1d, vec![101], 2), (ProblemKind::Bratu2d, vec![21, 21], 80), (ProblemKind::Fhn, vec![201], 4)];
    for (kind, grid, zeros) in cases {
        let p = ProblemDef::build(kind, &grid, 10, 0, &SamplingOptions::default(), &FixedParams::new()).unwrap();
        let mask = p.constraint_mask();
        assert_eq!(mask.len(), p.n_rows());
        assert_eq!(mask.n_constraints(), zeros);
        assert_eq!(zeros, p.colloc().m_bc() * p.n_fields());
    }
}

#[test]
fn argument_errors() {
    let p = small(ProblemKind::AllenCahn);
    assert!(p.residual(&Col::zeros(3), 0.5).unwrap_err().is_usage());
    assert!(p.residual(&Col::zeros(p.n_weights()), 1e-5).unwrap_err().is_usage());
    assert!("heat".parse::<ProblemKind>().is_err());
    assert_eq!("allen_cahn".parse::<ProblemKind>().unwrap(), ProblemKind::AllenCahn);
    let bad: FixedParams = [("Dw".to_string(), 1.0)].into_iter().collect();
    assert!(ProblemKind::Fhn.resolve_params(&bad).is_err());
    assert!(ProblemKind::Bratu1d.resolve_params(&[("Du".to_string(), 1.0)].into_iter().collect()).is_err());
    let ok: FixedParams = [("Dv".to_string(), 3.0)].into_iter().collect();
    assert_eq!(ProblemKind::Fhn.resolve_params(&ok).unwrap()["Dv"], 3.0);
}

#[test]
fn allen_cahn_unit_state_is_exact() {
    let p = ProblemDef::build(ProblemKind::AllenCahn, &[41], 30, 2, &SamplingOptions::default(), &FixedParams::new()).unwrap();
    let w0 = p.fit_profile(&[&|_| 1.0], 1e-10).unwrap();
    let st = newton_solve(&p, &w0, 0.5, &NewtonOptions::default()).unwrap();
    assert!(st.converged);
    let u = p.values(&st.weights);
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-8));
}

#[test]
fn summary_uses_first_field() {
    let p = small(ProblemKind::Fhn);
    let w = random_weights(&p, 4);
    let s = p.summary(&w);
    let f = p.fields(&w);
    assert!((s.mean_u - f[0].sum() / 23.0).abs() < 1e-15);
    assert!((s.mean_v.unwrap() - f[1].sum() / 23.0).abs() < 1e-15);
}
