//! Benchmark reproduction suite: each numbered criterion runs a reference
//! configuration and compares against published or derived values.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use faer::{Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{sample_basis, sigmoid_pair, Domain, SamplingOptions};
use crate::continuation::{first_fold, solve_on_branch, switch_branch, Branch, BranchPoint, EventKind};
use crate::diagnostics::{boundary_rank_check, svd_decay_report};
use crate::error::{Error, Result};
use crate::fdref::{fd_solve, fd_spectrum, FdProblem};
use crate::presets::Preset;
use crate::problems::{ConstraintMask, FixedParams, ProblemDef, ProblemKind};
use crate::solver::{newton_solve, numerical_rank, SteadyState};
use crate::stability::{
    arnoldi_eigs, build_pencil, dense_generalized_eigs, leading_eigs, naive_physical_jacobian, restarted_arnoldi, DenseBackend,
    EigGroup, EigMethod, EigOptions, SpectrumResult,
};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Bratu1d,
    Bratu2d,
    Fhn,
    AllenCahn,
    Properties,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bratu1d" => Suite::Bratu1d,
            "bratu2d" => Suite::Bratu2d,
            "fhn" => Suite::Fhn,
            "allen_cahn" => Suite::AllenCahn,
            "properties" => Suite::Properties,
            "all" => Suite::All,
            _ => return Err(Error::arg(format!("unknown suite '{s}' (bratu1d, bratu2d, fhn, allen_cahn, properties, all)"))),
        })
    }
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Bratu1d => vec![1, 2, 3, 4, 5, 10],
            Suite::Bratu2d => vec![6],
            Suite::Fhn => vec![7],
            Suite::AllenCahn => vec![8],
            Suite::Properties => vec![9],
            Suite::All => (1..=10).collect(),
        }
    }
}

pub const TITLES: [&str; 10] = [
    "Bratu 1D fold",
    "Bratu 1D eigenvalues at p=3",
    "Bratu 1D analytic profile",
    "spurious near-zero cluster",
    "singular-value decay",
    "Bratu 2D fold and eigenvalues",
    "FitzHugh-Nagumo fold and Hopf",
    "Allen-Cahn pitchforks and switching",
    "property suite",
    "shift-invert vs naive timing",
];

type Check = Result<(bool, String)>;

/// Runs one criterion; errors become failures with the message as detail.
pub fn run_criterion(id: u8) -> Result<CriterionOutcome> {
    let f: fn() -> Check = match id {
        1 => bratu_fold,
        2 => bratu_eigenvalues,
        3 => bratu_profile,
        4 => spurious_cluster,
        5 => singular_value_decay,
        6 => bratu2d,
        7 => fhn_events,
        8 => allen_cahn_pitchforks,
        9 => property_suite,
        10 => timing,
        _ => return Err(Error::arg(format!("no criterion {id}"))),
    };
    let t = Instant::now();
    let (pass, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionOutcome { id, title: TITLES[id as usize - 1], pass, detail, seconds: t.elapsed().as_secs_f64() })
}

pub fn run_suite(suite: Suite) -> Vec<CriterionOutcome> {
    suite.criteria().into_iter().map(|id| run_criterion(id).expect("suite ids are valid")).collect()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn leading_re(s: &SpectrumResult) -> Result<f64> {
    s.leading().map(|z| z.re).ok_or_else(|| Error::numeric("no physical eigenvalue computed"))
}

fn preset_problem(kind: ProblemKind) -> Result<(Preset, ProblemDef)> {
    let pre = Preset::for_kind(kind);
    let p = pre.problem_def()?;
    Ok((pre, p))
}

fn on_branch(p: &ProblemDef, pre: &Preset, branch: &Branch, mu: f64, after: usize) -> Result<SteadyState> {
    solve_on_branch(p, branch, mu, after, &pre.solver)?.ok_or_else(|| Error::numeric(format!("branch does not reach mu = {mu} after point {after}")))
}

fn fold_index(branch: &Branch) -> Result<usize> {
    first_fold(branch).ok_or_else(|| Error::numeric("no fold on the branch"))
}

// --- Bratu closed form -------------------------------------------------------

/// Root of `cosh t = 4 t / sqrt(2 p)` on the lower (`t < t_c`) or upper branch.
pub fn bratu_theta(p: f64, upper: bool) -> Option<f64> {
    let g = |t: f64| t.cosh() - 4.0 * t / (2.0 * p).sqrt();
    // t_c solves t tanh t = 1.
    let (mut a, mut b): (f64, f64) = (0.5, 2.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m * m.tanh() < 1.0 {
            a = m
        } else {
            b = m
        }
    }
    let tc = 0.5 * (a + b);
    if g(tc) > 0.0 {
        return None;
    }
    let (mut a, mut b) = if upper { (tc, 50.0) } else { (1e-14, tc) };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (g(a) <= 0.0) == (g(m) <= 0.0) {
            a = m
        } else {
            b = m
        }
    }
    Some(0.5 * (a + b))
}

pub fn bratu_exact(p: f64, x: f64, upper: bool) -> Option<f64> {
    let t = bratu_theta(p, upper)?;
    Some(2.0 * (t.cosh() / (t * (1.0 - 2.0 * x)).cosh()).ln())
}

// --- criteria ------------------------------------------------------------------

fn bratu_fold() -> Check {
    let t = Instant::now();
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let b = pre.run_continuation(&p)?;
    let secs = t.elapsed().as_secs_f64();
    let max_mu = b.max_mu();
    let fold = b.events_of(EventKind::Fold).next().map(|e| e.mu);
    let pass = within(max_mu, 3.509, 3.519) && fold.is_some_and(|f| within(f, 3.509, 3.519)) && secs <= 60.0;
    Ok((pass, format!("max p = {max_mu:.6}, fold event = {fold:?}, {secs:.1} s")))
}

fn bratu_eigenvalues() -> Check {
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let b = pre.run_continuation(&p)?;
    let fold = fold_index(&b)?;
    let fd = FdProblem::new(ProblemKind::Bratu1d, &pre.fixed_params, &pre.grid)?;
    let mut pass = true;
    let mut detail = String::new();
    for (name, after, want, tol) in [("lower", 0, -4.64, 0.05), ("upper", fold, 7.01, 0.07)] {
        let st = on_branch(&p, &pre, &b, 3.0, after)?;
        let lam = leading_re(&leading_eigs(&p, &st.weights, 3.0, &pre.eigs)?)?;
        let guess = p.values(&st.weights);
        let fs = fd_solve(&fd, 3.0, Some(&guess), 1e-10, 50)?;
        let lam_fd = fd_spectrum(&fd, 3.0, &fs.unknowns, 1)?.eigenvalues[0].re;
        let rel = (lam - lam_fd).abs() / lam_fd.abs();
        pass &= (lam - want).abs() <= tol && rel <= 2e-2 && fs.converged;
        let _ = write!(detail, "{name}: lambda1 = {lam:.4} (fd {lam_fd:.4}, rel {rel:.1e}); ");
    }
    Ok((pass, detail))
}

fn bratu_profile() -> Check {
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let mut worst: f64 = 0.0;
    let mut w = Col::zeros(p.n_weights());
    for mu in [0.5, 1.0, 2.0, 3.0] {
        let st = newton_solve(&p, &w, mu, &pre.solver)?;
        if !st.converged {
            return Ok((false, format!("no convergence at p = {mu}")));
        }
        let u = p.values(&st.weights);
        for i in 0..p.n_points() {
            let x = p.colloc().point(i)[0];
            worst = worst.max((u[i] - bratu_exact(mu, x, false).expect("p below the fold")).abs());
        }
        w = st.weights;
    }
    Ok((worst <= 1e-4, format!("max |u - u_exact| = {worst:.2e} over p in {{0.5, 1, 2, 3}}")))
}

fn bratu_lower_state(pre: &Preset, p: &ProblemDef, mu: f64) -> Result<SteadyState> {
    let mut w = Col::zeros(p.n_weights());
    for m in [0.5 * mu, mu] {
        let st = newton_solve(p, &w, m, &pre.solver)?;
        if !st.converged {
            return Err(Error::numeric(format!("no steady state at p = {m}")));
        }
        w = st.weights;
    }
    newton_solve(p, &w, mu, &pre.solver)
}

fn spurious_cluster() -> Check {
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let st = bratu_lower_state(&pre, &p, 3.0)?;
    let naive = leading_eigs(&p, &st.weights, 3.0, &EigOptions { method: EigMethod::Naive, ..pre.eigs.clone() })?;
    let si = leading_eigs(&p, &st.weights, 3.0, &pre.eigs)?;
    let r = numerical_rank(p.psi().as_ref(), 1e-8)?;
    let max_abs = naive.eigenvalues.iter().filter(|z| z.re.is_finite()).map(|z| z.norm()).fold(0.0, f64::max);
    let near: Vec<usize> = (0..naive.len()).filter(|&i| naive.eigenvalues[i].norm() <= 1e-6 * max_abs).collect();
    let labelled = near.iter().all(|&i| naive.groups[i] == EigGroup::SpuriousNearZero);
    let m = p.n_points();
    let (l_naive, l_si) = (leading_re(&naive)?, leading_re(&si)?);
    let pass = near.len() >= m - r && labelled && (l_naive - l_si).abs() <= 1e-3;
    Ok((
        pass,
        format!(
            "{} near-zero eigenvalues (M - r = {}), all labelled spurious: {labelled}; lambda1 naive {l_naive:.6} vs shift-invert {l_si:.6}",
            near.len(),
            m - r
        ),
    ))
}

fn singular_value_decay() -> Check {
    let mut pass = true;
    let (mut rs, mut r2s) = (vec![], vec![]);
    for seed in 0..10 {
        let p = ProblemDef::build(ProblemKind::Bratu1d, &[101], 50, seed, &SamplingOptions::default(), &FixedParams::new())?;
        let rep = svd_decay_report(p.psi().as_ref(), None)?;
        pass &= rep.fit_r2 >= 0.97 && within(rep.estimated_r, 3.0, 8.0) && !rep.fit_unreliable;
        rs.push(rep.estimated_r);
        r2s.push(rep.fit_r2);
    }
    let (lo, hi) = (rs.iter().cloned().fold(f64::INFINITY, f64::min), rs.iter().cloned().fold(0.0, f64::max));
    let r2min = r2s.iter().cloned().fold(1.0, f64::min);
    Ok((pass, format!("10 seeds: R in [{lo:.2}, {hi:.2}], min r2 = {r2min:.4}")))
}

fn bratu2d() -> Check {
    let t = Instant::now();
    let (pre, p) = preset_problem(ProblemKind::Bratu2d)?;
    let b = pre.run_continuation(&p)?;
    let max_mu = b.max_mu();
    let fold = fold_index(&b)?;
    let lower = leading_re(&leading_eigs(&p, &on_branch(&p, &pre, &b, 6.0, 0)?.weights, 6.0, &pre.eigs)?)?;
    let upper = leading_re(&leading_eigs(&p, &on_branch(&p, &pre, &b, 6.0, fold)?.weights, 6.0, &pre.eigs)?)?;
    let secs = t.elapsed().as_secs_f64();
    let pass = within(max_mu, 6.78, 6.83) && (lower + 8.66).abs() <= 0.15 && (upper - 13.59).abs() <= 0.25 && secs <= 600.0;
    Ok((pass, format!("max p = {max_mu:.5}; lambda1 at p=6: lower {lower:.4}, upper {upper:.4}; {secs:.0} s")))
}

fn fhn_events() -> Check {
    let (pre, p) = preset_problem(ProblemKind::Fhn)?;
    let b = pre.run_continuation(&p)?;
    let folds: Vec<f64> = b.events_of(EventKind::Fold).map(|e| e.mu).collect();
    let hopfs: Vec<(f64, Option<f64>)> = b.events_of(EventKind::Hopf).map(|e| (e.mu, e.imag)).collect();
    let fold_ok = folds.iter().any(|&m| within(m, 0.940, 0.950));
    let hopf_ok = hopfs.iter().any(|&(m, im)| within(m, 0.016, 0.021) && im.is_some_and(|v| v > pre.continuation.imag_tol));
    let fold = fold_index(&b)?;
    let upper = leading_re(&leading_eigs(&p, &on_branch(&p, &pre, &b, 0.8, 0)?.weights, 0.8, &pre.eigs)?)?;
    let lower = leading_re(&leading_eigs(&p, &on_branch(&p, &pre, &b, 0.8, fold)?.weights, 0.8, &pre.eigs)?)?;
    let pass = fold_ok && hopf_ok && (upper + 0.0495).abs() <= 0.005 && (lower - 0.1266).abs() <= 0.01;
    Ok((pass, format!("folds {folds:.5?}, hopf (eps, |Im|) {hopfs:.5?}; lambda1 at eps=0.8: upper {upper:.5}, lower {lower:.5}")))
}

/// Neumann cosine mode `cos(k pi (x - a) / L)` on an interval.
fn neumann_mode(k: usize, x: f64, a: f64, len: f64) -> f64 {
    (k as f64 * std::f64::consts::PI * (x - a) / len).cos()
}

fn allen_cahn_pitchforks() -> Check {
    let (pre, p) = preset_problem(ProblemKind::AllenCahn)?;
    let b = pre.run_continuation(&p)?;
    let mut found: Vec<f64> = b.events_of(EventKind::Pitchfork).map(|e| e.mu).collect();
    found.sort_by(|a, b| b.total_cmp(a));
    let want: Vec<f64> = (1..=5).map(|k| 2.0 / (k as f64 * std::f64::consts::PI)).collect();
    let mut pass = found.len() == 5 && found.iter().zip(&want).all(|(f, w)| (f - w).abs() <= 1e-3);
    let mut detail = format!("crossings {found:.5?}; ");
    let [a, bnd] = p.domain().bounds()[0];
    for (k, &eps_k) in want.iter().enumerate().map(|(i, e)| (i + 1, e)) {
        let eps = 0.97 * eps_k;
        let zero = newton_solve(&p, &Col::zeros(p.n_weights()), eps, &pre.solver)?;
        let at = BranchPoint::from_state(&p, &zero, 0.0);
        let spec = leading_eigs(&p, &zero.weights, eps, &pre.eigs)?;
        // The mode that just crossed has the smallest positive eigenvalue.
        let Some(idx) = spec.physical().into_iter().filter(|&i| spec.eigenvalues[i].re > 0.0).min_by(|&i, &j| spec.eigenvalues[i].re.total_cmp(&spec.eigenvalues[j].re)) else {
            pass = false;
            let _ = write!(detail, "k={k}: no unstable mode; ");
            continue;
        };
        let v = Col::from_fn(p.n_weights(), |i| spec.weight_vectors[idx][i].re);
        let out = switch_branch(&p, &at, &v, 0.3, &pre.solver)?;
        let u = p.values(&out.state.weights);
        let mode = Col::from_fn(p.n_points(), |i| neumann_mode(k, p.colloc().point(i)[0], a, bnd - a));
        let cos = (u.transpose() * &mode).abs() / (u.norm_l2() * mode.norm_l2()).max(f64::MIN_POSITIVE);
        pass &= !out.switch_failed && cos > 0.9;
        let _ = write!(detail, "k={k}: cos {cos:.4}{}; ", if out.switch_failed { " (switch failed)" } else { "" });
    }
    Ok((pass, detail))
}

// --- property suite ------------------------------------------------------------

fn derivative_checks(detail: &mut String) -> Result<bool> {
    let domain = Domain::interval(0.0, 1.0)?;
    let basis = sample_basis(&domain, 50, 101, 11)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 5e-4;
    let mut worst: (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let j = rng.random_range(0..50);
        let x = rng.random::<f64>();
        let f = |y: f64| sigmoid_pair(basis.preactivation(j, &[y])).0;
        let feats = crate::basis::eval_features(&basis, Mat::from_fn(1, 1, |_, _| x).as_ref())?;
        let (d1, d2) = (feats.dpsi[0][(0, j)], feats.d2psi[0][(0, j)]);
        let fd1 = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
        let fd2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        worst.0 = worst.0.max((fd1 - d1).abs() / d1.abs().max(1.0));
        worst.1 = worst.1.max((fd2 - d2).abs() / d2.abs().max(1.0));
    }
    let mut ok = worst.0 <= 1e-6 && worst.1 <= 1e-5;

    let mut jac_worst: f64 = 0.0;
    for kind in ProblemKind::ALL {
        let grid = if kind == ProblemKind::Bratu2d { vec![7, 6] } else { vec![21] };
        let p = ProblemDef::build(kind, &grid, 15, 3, &SamplingOptions::default(), &FixedParams::new())?;
        let w = Col::from_fn(p.n_weights(), |i| 0.2 * ((i as f64) * 0.9).sin());
        let mu = 0.7;
        let j = p.jacobian_w(&w, mu)?;
        let e = 1e-6;
        let mut num = Mat::zeros(j.nrows(), j.ncols());
        for c in 0..j.ncols() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[c] += e;
            wm[c] -= e;
            num.col_mut(c).copy_from(&((p.residual(&wp, mu)? - p.residual(&wm, mu)?) / (2.0 * e)));
        }
        jac_worst = jac_worst.max((&j - &num).norm_l2() / j.norm_l2());
    }
    ok &= jac_worst <= 1e-6;
    let _ = write!(detail, "derivatives: basis {:.1e}/{:.1e}, jacobian {jac_worst:.1e}; ", worst.0, worst.1);
    Ok(ok)
}

/// Convection-diffusion toy with identity boundary rows and a random invertible `Psi`.
fn toy_pencil(m: usize) -> (Mat<f64>, Mat<f64>, ConstraintMask) {
    let h = 1.0 / (m - 1) as f64;
    let mut ju = Mat::zeros(m, m);
    ju[(0, 0)] = 1.0;
    ju[(m - 1, m - 1)] = 1.0;
    for i in 1..m - 1 {
        ju[(i, i - 1)] = 1.0 / (h * h) + 8.0 / h;
        ju[(i, i)] = -2.0 / (h * h) + 3.0;
        ju[(i, i + 1)] = 1.0 / (h * h) - 8.0 / h;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi = Mat::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
    let mut b = vec![1.0; m];
    b[0] = 0.0;
    b[m - 1] = 0.0;
    (ju, psi, ConstraintMask { b_diag: b })
}

fn oracle_checks(detail: &mut String) -> Result<bool> {
    let (ju, psi, mask) = toy_pencil(40);
    let jw = &ju * &psi;
    let dense = dense_generalized_eigs(&ju, &mask, DenseBackend::Condensation)?;
    let mut worst: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for sigma in [0.0, -30.0] {
        let op = build_pencil(&jw, &psi, &mask, sigma, 1e-12)?;
        let opts = EigOptions::default().arnoldi();
        orth = orth.max(restarted_arnoldi(&op, 6, &opts)?.orthogonality);
        let s = arnoldi_eigs(&op, &psi, 6, &opts, 1e-8)?;
        for lam in &s.eigenvalues {
            let best = dense.physical().iter().map(|&i| (dense.eigenvalues[i] - lam).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(best / lam.norm().max(1.0));
        }
    }
    let _ = write!(detail, "arnoldi vs dense {worst:.1e}; ");
    Ok(worst <= 1e-8 && orth <= 1e-10)
}

fn spectral_checks(detail: &mut String) -> Result<bool> {
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let b = pre.run_continuation(&p)?;
    let fold = fold_index(&b)?;
    let mut ok = true;
    let (mut res_worst, mut shift_worst, mut orth): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut rank_ok = true;
    for after in [0, fold] {
        let st = on_branch(&p, &pre, &b, 3.0, after)?;
        let s1 = leading_eigs(&p, &st.weights, 3.0, &pre.eigs)?;
        let s05 = leading_eigs(&p, &st.weights, 3.0, &EigOptions { sigma: 0.5, ..pre.eigs.clone() })?;
        for &i in &s1.physical() {
            res_worst = res_worst.max(s1.residuals[i]);
        }
        let (a, c) = (s1.leading().unwrap_or_default(), s05.leading().unwrap_or_default());
        shift_worst = shift_worst.max((a - c).norm() / a.norm());

        let j_w = p.jacobian_w(&st.weights, 3.0)?;
        let psi = p.psi_blocks();
        let op = build_pencil(&j_w, &psi, &p.constraint_mask(), pre.eigs.sigma, pre.eigs.svd_tol)?;
        orth = orth.max(restarted_arnoldi(&op, pre.eigs.k, &pre.eigs.arnoldi())?.orthogonality);
        let ju = naive_physical_jacobian(&j_w, &psi, pre.eigs.pinv_tol)?;
        rank_ok &= numerical_rank(ju.as_ref(), pre.eigs.pinv_tol)? <= numerical_rank(psi.as_ref(), pre.eigs.pinv_tol)?;
    }
    ok &= res_worst <= 1e-8 && shift_worst <= 1e-6 && orth <= 1e-10 && rank_ok;
    let _ = write!(
        detail,
        "pencil residual max {res_worst:.1e}, shift independence {shift_worst:.1e}, krylov orthogonality {orth:.1e}, rank bound {rank_ok}; "
    );
    Ok(ok)
}

fn boundary_rank_checks(detail: &mut String) -> Result<bool> {
    let mut failures = vec![];
    for kind in ProblemKind::ALL {
        let pre = Preset::for_kind(kind);
        for seed in 0..20 {
            let p = ProblemDef::build(kind, &pre.grid, pre.n_neurons, seed, &pre.sampling, &pre.fixed_params)?;
            let mask = ConstraintMask::from_boundary(p.colloc().is_boundary(), 1);
            if !boundary_rank_check(p.psi().as_ref(), &mask)?.full_row_rank {
                failures.push(format!("{kind}/{seed}"));
            }
        }
    }
    let _ = write!(detail, "boundary rank failures {failures:?}");
    Ok(failures.is_empty())
}

fn property_suite() -> Check {
    let mut detail = String::new();
    let mut pass = derivative_checks(&mut detail)?;
    pass &= oracle_checks(&mut detail)?;
    pass &= spectral_checks(&mut detail)?;
    pass &= boundary_rank_checks(&mut detail)?;
    Ok((pass, detail))
}

/// Mean wall time of the shift-invert (k = 7) and naive eigensolves at the
/// Bratu 1D lower state, p = 3.
pub fn timing_ratio(reps: usize) -> Result<(f64, f64)> {
    let (pre, p) = preset_problem(ProblemKind::Bratu1d)?;
    let st = bratu_lower_state(&pre, &p, 3.0)?;
    let si = EigOptions { k: 7, ..pre.eigs.clone() };
    let naive = EigOptions { method: EigMethod::Naive, ..pre.eigs.clone() };
    // Warm up caches and the allocator before timing.
    leading_eigs(&p, &st.weights, 3.0, &si)?;
    leading_eigs(&p, &st.weights, 3.0, &naive)?;
    let time = |o: &EigOptions| -> Result<f64> {
        let t = Instant::now();
        for _ in 0..reps {
            leading_eigs(&p, &st.weights, 3.0, o)?;
        }
        Ok(t.elapsed().as_secs_f64() / reps as f64)
    };
    Ok((time(&si)?, time(&naive)?))
}

fn timing() -> Check {
    let (t_si, t_naive) = timing_ratio(20)?;
    let ratio = t_naive / t_si;
    Ok((ratio >= 1.5, format!("shift-invert {:.2} ms, naive {:.2} ms, ratio {ratio:.2}", t_si * 1e3, t_naive * 1e3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bratu_closed_form_solves_the_equation() {
        for (p, upper) in [(1.0, false), (3.0, false), (3.0, true)] {
            let h = 1e-4;
            for x in [0.2, 0.5, 0.7] {
                let u = |y: f64| bratu_exact(p, y, upper).unwrap();
                let lap = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
                assert!((lap + p * u(x).exp()).abs() < 1e-4 * (1.0 + p * u(x).exp()));
            }
            assert!(bratu_exact(p, 0.0, upper).unwrap().abs() < 1e-12);
        }
        assert!(bratu_theta(3.6, false).is_none());
        assert!(bratu_exact(3.0, 0.5, true).unwrap() > bratu_exact(3.0, 0.5, false).unwrap());
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap().criteria().len(), 10);
        assert!("nope".parse::<Suite>().unwrap_err().is_usage());
        assert!(run_criterion(11).is_err());
    }
}
