use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use meshlessbif::{
    ContinuationOptions, EigOptions, FixedParams, NewtonOptions, Preset, ProblemKind, SamplingOptions,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSel {
    /// Newton from the preset starting guess.
    #[default]
    Lower,
    /// The part of the continued branch past its first fold.
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub mu_start: f64,
    pub mu_second: f64,
    /// Replaces `mu_max` (or `mu_min` when below `mu_start`).
    pub mu_stop: Option<f64>,
    pub both_directions: bool,
    #[serde(flatten)]
    pub options: ContinuationOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub fixed_params: FixedParams,
    pub n_neurons: usize,
    /// Collocation points per axis.
    pub grid: Vec<usize>,
    pub seed: u64,
    pub sampling: SamplingOptions,
    pub solver: NewtonOptions,
    pub continuation: ContinuationConfig,
    pub eigs: EigOptions,
    /// Parameter value for `solve` and `eigs`; `continuation.mu_start` when absent.
    pub mu: Option<f64>,
    pub branch: BranchSel,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn defaults(kind: ProblemKind) -> Self {
        let p = Preset::for_kind(kind);
        RunConfig {
            problem: kind,
            fixed_params: kind.default_params(),
            n_neurons: p.n_neurons,
            grid: p.grid,
            seed: p.seed,
            sampling: p.sampling,
            solver: p.solver,
            continuation: ContinuationConfig {
                mu_start: p.mu_start,
                mu_second: p.mu_second,
                mu_stop: None,
                both_directions: p.both_directions,
                options: p.continuation,
            },
            eigs: p.eigs,
            mu: None,
            branch: BranchSel::Lower,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn target_mu(&self) -> f64 {
        self.mu.unwrap_or(self.continuation.mu_start)
    }

    pub fn preset(&self) -> Preset {
        let c = &self.continuation;
        let mut cont = c.options.clone();
        if let Some(stop) = c.mu_stop {
            if stop >= c.mu_start {
                cont.mu_max = stop;
            } else {
                cont.mu_min = stop;
            }
        }
        Preset {
            problem: self.problem,
            fixed_params: self.fixed_params.clone(),
            grid: self.grid.clone(),
            n_neurons: self.n_neurons,
            seed: self.seed,
            sampling: self.sampling,
            solver: self.solver.clone(),
            mu_start: c.mu_start,
            mu_second: c.mu_second,
            continuation: cont,
            both_directions: c.both_directions,
            eigs: self.eigs.clone(),
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let value: Value = if is_toml {
        toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid TOML in {}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid JSON in {}: {e}", path.display())))?
    };
    if !value.is_object() {
        return Err(CliError::usage("config must be a table/object at the top level"));
    }
    Ok(value)
}

/// Every key of `user` must already exist in `base`; maps and `fixed_params` are merged key by key.
fn merge(base: &mut Value, user: &Value, path: &str) -> Result<(), CliError> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &sub)?,
                    None => return Err(CliError::usage(format!("unknown config key '{sub}'"))),
                }
            }
            Ok(())
        }
        (b, u) => {
            *b = u.clone();
            Ok(())
        }
    }
}

fn set(root: &mut Value, path: &[&str], v: Value) {
    let mut cur = root;
    for key in &path[..path.len() - 1] {
        cur = cur.as_object_mut().expect("defaults are objects").entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    cur.as_object_mut().expect("defaults are objects").insert(path[path.len() - 1].to_string(), v);
}

/// Command-line overrides, each a dotted path into the config and a JSON value.
pub type Overrides = Vec<(&'static [&'static str], Value)>;

/// Preset defaults for the problem, then the file, then the flags.
pub fn resolve(file: Option<&Path>, problem_flag: Option<&str>, overrides: Overrides) -> Result<RunConfig, CliError> {
    let user = file.map(read_config_file).transpose()?;
    let name = match (problem_flag, user.as_ref().and_then(|u| u.get("problem"))) {
        (Some(p), _) => p.to_string(),
        (None, Some(Value::String(p))) => p.clone(),
        (None, Some(_)) => return Err(CliError::usage("config key 'problem' must be a string")),
        (None, None) => return Err(CliError::usage("no problem given (use --problem or a config file)")),
    };
    let kind: ProblemKind = name.parse().map_err(CliError::from)?;
    let mut value = serde_json::to_value(RunConfig::defaults(kind)).expect("defaults serialize");
    if let Some(u) = &user {
        merge(&mut value, u, "")?;
    }
    set(&mut value, &["problem"], Value::String(name));
    for (path, v) in overrides {
        set(&mut value, path, v);
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.problem.resolve_params(&cfg.fixed_params)?;
    cfg.solver.validate()?;
    cfg.continuation.options.validate()?;
    if cfg.grid.len() != cfg.problem.domain().dim() {
        return Err(CliError::usage(format!("{} needs {} grid sizes", cfg.problem, cfg.problem.domain().dim())));
    }
    if cfg.eigs.k == 0 {
        return Err(CliError::usage("eigs.k must be at least 1"));
    }
    if cfg.continuation.mu_start == cfg.continuation.mu_second {
        return Err(CliError::usage("continuation.mu_start and mu_second must differ"));
    }
    Ok(())
}
