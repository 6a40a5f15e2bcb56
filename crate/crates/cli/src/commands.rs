use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use meshlessbif::continuation::{first_fold, solve_on_branch};
use meshlessbif::diagnostics::{problem_boundary_rank, svd_decay_report};
use meshlessbif::io::{write_branch_csv, write_decay_csv, write_eigenfunction_csv, write_events_json, write_solution_csv, write_spectrum_csv};
use meshlessbif::reproduce::{run_criterion, timing_ratio, CriterionOutcome, Suite};
use meshlessbif::solver::{newton_solve, SteadyState};
use meshlessbif::stability::leading_eigs;
use meshlessbif::{fd_solve, fd_spectrum, Branch, EigMethod, FdProblem, ProblemDef, SpectrumResult};

use crate::config::{BranchSel, RunConfig};
use crate::CliError;

/// Output directory plus the JSON-lines convergence log.
struct Run {
    dir: PathBuf,
    log: BufWriter<File>,
}

impl Run {
    fn start(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
        let resolved = serde_json::to_string_pretty(cfg).expect("config serializes");
        std::fs::write(dir.join("resolved_config.json"), resolved + "\n")?;
        let log = BufWriter::new(File::create(dir.join("convergence.jsonl"))?);
        Ok(Run { dir, log })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn record(&mut self, v: Value) -> Result<(), CliError> {
        writeln!(self.log, "{v}")?;
        self.log.flush()?;
        Ok(())
    }

    fn newton(&mut self, st: &SteadyState) -> Result<(), CliError> {
        for r in &st.trace {
            self.record(json!({"stage": "newton", "mu": st.mu, "iter": r.iter, "res_norm": r.res_norm, "step_norm": r.step_norm, "rank": r.rank}))?;
        }
        self.record(json!({"stage": "newton_done", "mu": st.mu, "converged": st.converged, "iterations": st.iterations, "residual_norm": st.residual_norm}))
    }

    fn branch(&mut self, b: &Branch) -> Result<(), CliError> {
        for (i, p) in b.points.iter().enumerate() {
            self.record(json!({"stage": "continuation", "index": i, "s": p.s, "mu": p.mu, "residual_norm": p.residual_norm, "constraint": p.constraint, "n_unstable": p.n_unstable}))?;
        }
        self.record(json!({"stage": "continuation_done", "points": b.points.len(), "events": b.events.len(), "termination": b.termination}))
    }
}

fn build(cfg: &RunConfig, run: &Run) -> Result<ProblemDef, CliError> {
    let problem = cfg.preset().problem_def()?;
    let basis = serde_json::to_string_pretty(problem.basis()).expect("basis serializes");
    std::fs::write(run.path("basis.json"), basis + "\n")?;
    Ok(problem)
}

/// Steady state at the configured `mu` on the selected branch.
fn steady_state(cfg: &RunConfig, problem: &ProblemDef, run: &mut Run) -> Result<SteadyState, CliError> {
    let preset = cfg.preset();
    let mu = cfg.target_mu();
    let name = problem.bifurcation_param_name();
    match cfg.branch {
        BranchSel::Lower => {
            let w0 = preset.initial_guess(problem)?;
            let st = newton_solve(problem, &w0, mu, &cfg.solver)?;
            run.newton(&st)?;
            if !st.converged {
                return Err(CliError::numeric(format!(
                    "Newton did not converge at {name} = {mu} (|F| = {:.3e} after {} iterations)",
                    st.residual_norm, st.iterations
                )));
            }
            Ok(st)
        }
        BranchSel::Upper => {
            let branch = preset.run_continuation(problem)?;
            run.branch(&branch)?;
            let fold = first_fold(&branch).ok_or_else(|| CliError::numeric("the continued branch has no fold, so there is no upper branch"))?;
            let st = solve_on_branch(problem, &branch, mu, fold, &cfg.solver)?
                .ok_or_else(|| CliError::numeric(format!("the branch past the fold does not reach {name} = {mu}")))?;
            run.newton(&st)?;
            Ok(st)
        }
    }
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::start(cfg)?;
    let problem = build(cfg, &run)?;
    let st = steady_state(cfg, &problem, &mut run)?;
    write_solution_csv(run.create("solution.csv")?, problem.colloc().points(), &problem.values(&st.weights), problem.n_fields(), None)?;
    let summary = json!({
        "mu": st.mu,
        "branch": cfg.branch,
        "converged": st.converged,
        "iterations": st.iterations,
        "residual_norm": st.residual_norm,
        "summary": problem.summary(&st.weights),
    });
    std::fs::write(run.path("solve.json"), serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    println!("{} = {}: converged in {} iterations, |F| = {:.3e}", problem.bifurcation_param_name(), st.mu, st.iterations, st.residual_norm);
    Ok(())
}

pub fn continue_branch(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::start(cfg)?;
    let problem = build(cfg, &run)?;
    let branch = cfg.preset().run_continuation(&problem)?;
    run.branch(&branch)?;
    write_branch_csv(run.create("branch.csv")?, &branch, cfg.eigs.k)?;
    write_events_json(run.create("events.json")?, &branch.events)?;
    println!("{} points, termination {:?}", branch.points.len(), branch.termination);
    for e in &branch.events {
        println!("{:?} at {} = {:.6}", e.kind, problem.bifurcation_param_name(), e.mu);
    }
    Ok(())
}

fn write_spectrum(run: &Run, points: &faer::Mat<f64>, spec: &SpectrumResult, n_fields: usize, k: usize, source: Option<&str>) -> Result<(), CliError> {
    write_spectrum_csv(run.create("spectrum.csv")?, spec, source)?;
    for (j, &i) in spec.physical().iter().take(k).enumerate() {
        if let Some(phi) = spec.physical_vectors.get(i) {
            write_eigenfunction_csv(run.create(&format!("eigenfunction_{}.csv", j + 1))?, points, phi, n_fields, source)?;
        }
    }
    Ok(())
}

pub fn eigs(cfg: &RunConfig) -> Result<(), CliError> {
    let n_weights = cfg.n_neurons * cfg.problem.n_fields();
    if cfg.eigs.k > n_weights {
        return Err(CliError::usage(format!("k = {} exceeds the {} output weights", cfg.eigs.k, n_weights)));
    }
    let mut run = Run::start(cfg)?;
    let problem = build(cfg, &run)?;
    let st = steady_state(cfg, &problem, &mut run)?;
    let mu = st.mu;
    let nf = problem.n_fields();
    write_solution_csv(run.create("solution.csv")?, problem.colloc().points(), &problem.values(&st.weights), nf, None)?;
    let spec = match cfg.eigs.method {
        EigMethod::Fd => {
            let fd = FdProblem::new(cfg.problem, &cfg.fixed_params, &cfg.grid)?;
            let fs = fd_solve(&fd, mu, Some(&problem.values(&st.weights)), 1e-10, 50)?;
            run.record(json!({"stage": "fd_newton", "mu": mu, "converged": fs.converged, "iterations": fs.iterations, "residual_norm": fs.residual_norm}))?;
            if !fs.converged {
                return Err(CliError::numeric(format!("finite-difference Newton stopped at |F| = {:.3e}", fs.residual_norm)));
            }
            write_solution_csv(run.create("solution_fd.csv")?, &fd.nodes(), &fs.values, nf, Some("fd"))?;
            let spec = fd_spectrum(&fd, mu, &fs.unknowns, cfg.eigs.k)?;
            write_spectrum(&run, &fd.nodes(), &spec, nf, cfg.eigs.k, Some("fd"))?;
            spec
        }
        _ => {
            let spec = leading_eigs(&problem, &st.weights, mu, &cfg.eigs)?;
            write_spectrum(&run, problem.colloc().points(), &spec, nf, cfg.eigs.k, None)?;
            spec
        }
    };
    run.record(json!({"stage": "eigs", "method": cfg.eigs.method, "mu": mu, "n": spec.len(), "warnings": spec.warnings}))?;
    for &i in spec.physical().iter().take(cfg.eigs.k) {
        let z = spec.eigenvalues[i];
        println!("lambda = {:+.8e} {:+.8e}i  (residual {:.1e})", z.re, z.im, spec.residuals.get(i).copied().unwrap_or(f64::NAN));
    }
    Ok(())
}

pub fn svd_report(cfg: &RunConfig, fit_range: Option<[usize; 2]>) -> Result<(), CliError> {
    let run = Run::start(cfg)?;
    let problem = build(cfg, &run)?;
    let report = svd_decay_report(problem.psi().as_ref(), fit_range)?;
    let boundary = problem_boundary_rank(&problem)?;
    let out = json!({"decay": report, "boundary_rank": boundary});
    std::fs::write(run.path("svd_report.json"), serde_json::to_string_pretty(&out).expect("report serializes") + "\n")?;
    write_decay_csv(run.create("decay.csv")?, &report)?;
    println!(
        "estimated R = {:.3}, r2 = {:.4}, rank at 1e-8 = {}, boundary rows full rank: {}",
        report.estimated_r,
        report.fit_r2,
        report.rank_at(1e-8).unwrap_or(0),
        boundary.full_row_rank
    );
    Ok(())
}

fn run_parallel(ids: &[u8], jobs: usize) -> Vec<CriterionOutcome> {
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, ids.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&id) = ids.get(i) else { break };
                let out = run_criterion(id).expect("suite ids are valid");
                done.lock().expect("no poisoned lock").push(out);
            });
        }
    });
    let mut out = done.into_inner().expect("no poisoned lock");
    out.sort_by_key(|o| o.id);
    out
}

pub fn reproduce(suite: &str, jobs: usize, out_dir: Option<&Path>) -> Result<bool, CliError> {
    let suite: Suite = suite.parse()?;
    let rows = run_parallel(&suite.criteria(), jobs);
    for r in &rows {
        println!("{} criterion {:2} ({}): {} [{:.1} s]", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title, r.detail, r.seconds);
    }
    let (t_si, t_naive) = timing_ratio(20)?;
    println!("timing ratio naive:shift_invert = {:.2} ({:.2} ms vs {:.2} ms)", t_naive / t_si, t_naive * 1e3, t_si * 1e3);
    let all_pass = rows.iter().all(|r| r.pass);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let table: Vec<Value> = rows
            .iter()
            .map(|r| json!({"criterion": r.id, "title": r.title, "pass": r.pass, "detail": r.detail, "seconds": r.seconds}))
            .collect();
        let out = json!({"rows": table, "timing": {"shift_invert_s": t_si, "naive_s": t_naive, "ratio": t_naive / t_si}});
        std::fs::write(dir.join("reproduce.json"), serde_json::to_string_pretty(&out).expect("summary serializes") + "\n")?;
    }
    Ok(all_pass)
}
