use faer::linalg::solvers::Solve;
use faer::{Col, Mat};
use proptest::prelude::*;

use meshlessbif::basis::sigmoid_pair;
use meshlessbif::diagnostics::chain_rule_check;
use meshlessbif::problems::CollocationSet;
use meshlessbif::solver::truncated_svd;
use meshlessbif::{eval_features, sample_basis, Domain, ProblemDef, ProblemKind, SamplingOptions, TruncationMode};

fn domain(dim: usize) -> Domain {
    if dim == 1 {
        Domain::interval(-1.0, 2.0).unwrap()
    } else {
        Domain::rectangle([0.0, 1.0], [-0.5, 1.5]).unwrap()
    }
}

fn points(rows: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(rows.len(), rows[0].len(), |i, q| rows[i][q])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigmoid_stays_in_unit_interval(z in -1e4f64..1e4) {
        let (s, sc) = sigmoid_pair(z);
        prop_assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&sc));
        prop_assert!((s + sc - 1.0).abs() <= 2.0 * f64::EPSILON);
        if z.abs() < 30.0 {
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn sampled_basis_respects_bounds_and_centers(seed in any::<u64>(), n in 1usize..60, m in 2usize..120, dim in 1usize..=2) {
        let dom = domain(dim);
        let b = sample_basis(&dom, n, m, seed).unwrap();
        for j in 0..n {
            let (a, c) = (b.alpha(j), b.center(j));
            for (aq, uq) in a.iter().zip(b.alpha_upper()) {
                prop_assert!(aq.abs() <= *uq);
            }
            prop_assert!(dom.contains(c, 0.0));
            let beta: f64 = -a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
            prop_assert!((b.beta(j) - beta).abs() <= 1e-12 * (1.0 + beta.abs()));
            let (s, _) = sigmoid_pair(b.preactivation(j, c));
            prop_assert!((s - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn derivatives_match_fourth_order_differences(seed in any::<u64>(), dim in 1usize..=2, x0 in 0.1f64..0.9, y0 in 0.1f64..0.9) {
        let dom = domain(dim);
        let b = sample_basis(&dom, 12, 20, seed).unwrap();
        let x: Vec<f64> = dom.bounds().iter().zip([x0, y0]).map(|([a, c], t)| a + (c - a) * t).collect();
        let h = 1e-3;
        let f0 = eval_features(&b, points(std::slice::from_ref(&x)).as_ref()).unwrap();
        for q in 0..dim {
            let shifted: Vec<Vec<f64>> = [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|k| {
                    let mut p = x.clone();
                    p[q] += k * h;
                    p
                })
                .collect();
            let f = eval_features(&b, points(&shifted).as_ref()).unwrap();
            for j in 0..12 {
                let v = |r: usize| f.psi[(r, j)];
                let d1 = (v(0) - 8.0 * v(1) + 8.0 * v(2) - v(3)) / (12.0 * h);
                let d2 = (-v(0) + 16.0 * v(1) - 30.0 * f0.psi[(0, j)] + 16.0 * v(2) - v(3)) / (12.0 * h * h);
                let scale = b.alpha(j)[q].abs().max(1.0);
                prop_assert!((d1 - f0.dpsi[q][(0, j)]).abs() <= 1e-7 * scale.powi(5));
                prop_assert!((d2 - f0.d2psi[q][(0, j)]).abs() <= 1e-4 * scale.powi(6));
            }
        }
    }

    #[test]
    fn constraint_mask_counts_boundary_rows(kind_i in 0usize..4, m in 5usize..40) {
        let kind = ProblemKind::ALL[kind_i];
        let grid: Vec<usize> = vec![m; kind.domain().dim()];
        let colloc = CollocationSet::grid(&kind.domain(), &grid).unwrap();
        let mask = ProblemDef::build(kind, &grid, 10, 0, &SamplingOptions::default(), &Default::default()).unwrap().constraint_mask();
        let expected_bc = if grid.len() == 1 { 2 } else { 4 * (m - 1) };
        prop_assert_eq!(colloc.m_bc(), expected_bc);
        prop_assert_eq!(mask.len(), kind.n_fields() * colloc.len());
        prop_assert_eq!(mask.n_constraints(), kind.n_fields() * expected_bc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pseudo_inverse_matches_regularized_normal_equations(entries in prop::collection::vec(-1.0f64..1.0, 30 * 20), rhs in prop::collection::vec(-1.0f64..1.0, 30)) {
        let a = Mat::from_fn(30, 20, |i, j| entries[i * 20 + j] + if i == j { 3.0 } else { 0.0 });
        let b = Col::from_fn(30, |i| rhs[i]);
        let x = truncated_svd(a.as_ref(), 1e-12, TruncationMode::Relative).unwrap().pinv_apply(&b).unwrap();
        let mut normal = a.transpose() * &a;
        for i in 0..20 {
            normal[(i, i)] += 1e-12;
        }
        let oracle = normal.partial_piv_lu().solve(a.transpose() * &b);
        prop_assert!((&x - &oracle).norm_l2() <= 1e-6 * oracle.norm_l2().max(1.0));
    }

    #[test]
    fn weight_jacobian_factors_through_pointwise_jacobian(seed in 0u64..1000, kind_i in 0usize..4, mu in 0.2f64..1.0) {
        let kind = ProblemKind::ALL[kind_i];
        let grid = vec![9; kind.domain().dim()];
        let p = ProblemDef::build(kind, &grid, 15, seed, &SamplingOptions::default(), &Default::default()).unwrap();
        let w = Col::from_fn(p.n_weights(), |i| 0.05 * ((i as f64 + seed as f64) * 0.37).sin());
        prop_assert!(chain_rule_check(&p, &w, mu).unwrap().rel_error <= 1e-12);
    }
}
