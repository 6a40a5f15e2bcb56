//! Runtime checks of the collocation matrix structure: singular-value decay,
//! boundary-row rank, and the chain rule linking the two Jacobians.

use std::collections::BTreeMap;

use faer::{Col, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{ConstraintMask, ProblemDef};
use crate::solver::singular_values;

/// Singular values below this fraction of the largest are left out of the fit.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Relative tolerances reported in `numerical_rank_at`.
pub const RANK_TOLS: [f64; 4] = [1e-6, 1e-8, 1e-10, 1e-12];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub singular_values: Vec<f64>,
    /// 1-based inclusive index range used for the fit.
    pub fit_range: [usize; 2],
    pub fit_log10_slope: f64,
    pub fit_r2: f64,
    /// Keyed by the relative tolerance, formatted like `1e-8`.
    pub numerical_rank_at: BTreeMap<String, usize>,
    /// `R` in `sigma_j ~ R^(-j/2)`.
    pub estimated_r: f64,
    pub fit_unreliable: bool,
}

impl DecayReport {
    pub fn rank_at(&self, tol: f64) -> Option<usize> {
        self.numerical_rank_at.get(&tol_key(tol)).copied()
    }
}

fn tol_key(tol: f64) -> String {
    format!("{tol:e}")
}

/// Least-squares line through `(x, y)`; returns slope and R^2.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    // A perfectly flat spectrum is fit exactly.
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// Fits `log10 sigma_j` against `j` over `fit_range` (1-based, inclusive), or
/// over every value above the noise floor when `None`.
pub fn svd_decay_report(psi: MatRef<'_, f64>, fit_range: Option<[usize; 2]>) -> Result<DecayReport> {
    let sv = singular_values(psi)?;
    let Some(&s1) = sv.first() else {
        return Err(Error::arg("empty matrix"));
    };
    let above_floor = sv.iter().take_while(|&&s| s >= NOISE_FLOOR * s1 && s > 0.0).count();
    let [lo, hi] = fit_range.unwrap_or([1, above_floor.max(1)]);
    if lo < 1 || lo > hi || hi > sv.len() {
        return Err(Error::arg(format!("fit range [{lo}, {hi}] outside [1, {}]", sv.len())));
    }
    if hi > above_floor {
        return Err(Error::arg(format!("fit range reaches index {hi}, below the noise floor (last usable index {above_floor})")));
    }
    let x: Vec<f64> = (lo..=hi).map(|j| j as f64).collect();
    let y: Vec<f64> = (lo..=hi).map(|j| sv[j - 1].log10()).collect();
    let fit_unreliable = x.len() < 4;
    let (slope, r2) = if x.len() >= 2 { line_fit(&x, &y) } else { (f64::NAN, f64::NAN) };
    let numerical_rank_at = RANK_TOLS.iter().map(|&t| (tol_key(t), sv.iter().filter(|&&s| s > t * s1).count())).collect();
    Ok(DecayReport {
        fit_range: [lo, hi],
        fit_log10_slope: slope,
        fit_r2: r2,
        numerical_rank_at,
        estimated_r: 10f64.powf(-2.0 * slope),
        fit_unreliable,
        singular_values: sv,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRank {
    pub full_row_rank: bool,
    pub smallest_sv: f64,
    pub largest_sv: f64,
    pub n_boundary_rows: usize,
}

/// Rank of the rows of `psi` flagged as constraints by `mask`.
pub fn boundary_rank_check(psi: MatRef<'_, f64>, mask: &ConstraintMask) -> Result<BoundaryRank> {
    if mask.len() != psi.nrows() {
        return Err(Error::arg(format!("mask length {} != {} rows", mask.len(), psi.nrows())));
    }
    let rows: Vec<usize> = (0..psi.nrows()).filter(|&i| mask.is_constraint(i)).collect();
    if rows.is_empty() {
        return Err(Error::arg("no boundary rows"));
    }
    let sub = Mat::from_fn(rows.len(), psi.ncols(), |r, c| psi[(rows[r], c)]);
    let sv = singular_values(sub.as_ref())?;
    let largest = sv.first().copied().unwrap_or(0.0);
    // A wide block has rows.len() singular values; a tall one cannot have full row rank.
    let smallest = if rows.len() <= psi.ncols() { sv[rows.len() - 1] } else { 0.0 };
    Ok(BoundaryRank {
        full_row_rank: largest > 0.0 && smallest > 1e-10 * largest,
        smallest_sv: smallest,
        largest_sv: largest,
        n_boundary_rows: rows.len(),
    })
}

/// Boundary-row rank for a problem's stacked collocation matrix.
pub fn problem_boundary_rank(problem: &ProblemDef) -> Result<BoundaryRank> {
    boundary_rank_check(problem.psi().as_ref(), &ConstraintMask::from_boundary(problem.colloc().is_boundary(), 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRuleReport {
    pub rel_error: f64,
}

/// `|J_w - J_u Psi|_F / |J_w|_F` for given matrices.
pub fn chain_rule_error(j_w: &Mat<f64>, composed: &Mat<f64>) -> Result<f64> {
    if j_w.shape() != composed.shape() {
        return Err(Error::arg("chain-rule operands differ in shape"));
    }
    let denom = j_w.norm_l2();
    let num = (j_w - composed).norm_l2();
    Ok(if denom > 0.0 { num / denom } else { num })
}

pub fn chain_rule_check(problem: &ProblemDef, w: &Col<f64>, mu: f64) -> Result<ChainRuleReport> {
    let j_w = problem.jacobian_w(w, mu)?;
    let composed = problem.pointwise_jacobian(w, mu)?.compose(problem);
    Ok(ChainRuleReport { rel_error: chain_rule_error(&j_w, &composed)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SamplingOptions;
    use crate::problems::{FixedParams, ProblemKind};

    fn build(kind: ProblemKind, grid: &[usize], n: usize, seed: u64) -> ProblemDef {
        ProblemDef::build(kind, grid, n, seed, &SamplingOptions::default(), &FixedParams::new()).unwrap()
    }

    #[test]
    fn constructed_decay_rate() {
        let d = Mat::from_fn(40, 40, |i, j| if i == j { 2f64.powf(-((i + 1) as f64) / 2.0) } else { 0.0 });
        let r = svd_decay_report(d.as_ref(), None).unwrap();
        assert!((r.estimated_r - 2.0).abs() < 1e-6, "{}", r.estimated_r);
        assert!((r.fit_r2 - 1.0).abs() < 1e-12);
        assert!(!r.fit_unreliable);
    }

    #[test]
    fn flat_spectrum_has_unit_rate() {
        let q = Mat::from_fn(20, 20, |i, j| if i == j { 1.0 } else { 0.0 });
        let q = q.qr().compute_Q() * Mat::from_fn(20, 20, |i, j| ((i * 7 + j * 3) as f64).sin()).qr().compute_Q();
        let r = svd_decay_report(q.as_ref(), None).unwrap();
        assert!(r.fit_log10_slope.abs() < 1e-10);
        assert!((r.estimated_r - 1.0).abs() < 1e-8);
        assert_eq!(r.rank_at(1e-8), Some(20));
    }

    #[test]
    fn short_range_is_flagged_and_bad_range_rejected() {
        let d = Mat::from_fn(10, 10, |i, j| if i == j { 0.5f64.powi(i as i32) } else { 0.0 });
        assert!(svd_decay_report(d.as_ref(), Some([2, 4])).unwrap().fit_unreliable);
        assert!(svd_decay_report(d.as_ref(), Some([0, 4])).unwrap_err().is_usage());
        assert!(svd_decay_report(d.as_ref(), Some([3, 11])).unwrap_err().is_usage());
    }

    #[test]
    fn bratu_collocation_matrix_decays_geometrically() {
        let p = build(ProblemKind::Bratu1d, &[101], 50, 0);
        let r = svd_decay_report(p.psi().as_ref(), None).unwrap();
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.fit_r2 >= 0.97 && (3.0..=8.0).contains(&r.estimated_r), "{} {}", r.fit_r2, r.estimated_r);
        assert!(r.rank_at(1e-8).unwrap() < 50);
    }

    #[test]
    fn boundary_rows_have_full_rank() {
        let p = build(ProblemKind::Bratu1d, &[101], 50, 0);
        let b = problem_boundary_rank(&p).unwrap();
        assert!(b.full_row_rank && b.n_boundary_rows == 2);

        let mut psi = Mat::from_fn(5, 8, |i, j| (((i + 1) * (j + 2)) as f64 * 0.37).sin().powi(2) + 0.1 * (i * j) as f64);
        let mask = ConstraintMask::from_boundary(&[true, false, false, true, true], 1);
        assert!(boundary_rank_check(psi.as_ref(), &mask).unwrap().full_row_rank);
        for j in 0..8 {
            psi[(4, j)] = psi[(0, j)];
        }
        assert!(!boundary_rank_check(psi.as_ref(), &mask).unwrap().full_row_rank);
        assert!(boundary_rank_check(psi.as_ref(), &ConstraintMask::all_ones(5)).unwrap_err().is_usage());
    }

    #[test]
    fn chain_rule_holds_and_detects_corruption() {
        for kind in [ProblemKind::Bratu1d, ProblemKind::Fhn] {
            let p = build(kind, &[31], 20, 5);
            let w = Col::from_fn(p.n_weights(), |i| 0.1 * ((i as f64) * 0.7).cos());
            assert!(chain_rule_check(&p, &w, 0.8).unwrap().rel_error <= 1e-12);
            let mut j = p.jacobian_w(&w, 0.8).unwrap();
            let composed = p.pointwise_jacobian(&w, 0.8).unwrap().compose(&p);
            j[(3, 2)] += 1.0;
            assert!(chain_rule_error(&j, &composed).unwrap() > 1e-6);
        }
    }
}
