//! Experiment configuration, repeated runs with deterministic seeding, grid
//! sweeps, CSV persistence and grouped summaries.
//!
//! Repetition `i` of an experiment is seeded with `seed + i` (wrapping); runs
//! are spread over a thread pool but records always come back in run order,
//! so the CSV is a pure function of the configuration.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{rng_for_seed, Algorithm, EngineError, HyperParams};
use crate::powerlaw::Bound;
use crate::problems::{load_instance, InitMode, Problem, ProblemError};
use crate::stats::{normalize_runtime, summarize, SampleSummary};

pub const DEFAULT_BUDGET: u64 = 100_000_000;
pub const DEFAULT_SWEEP_CAP: usize = 10_000;
/// Seed offset between consecutive sweep cells; also the repetition cap of a
/// sweep, so that no two runs of a sweep share a seed.
pub const SWEEP_SEED_STRIDE: u64 = 1_000_000;

pub const CSV_HEADER: [&str; 17] = [
    "run_id",
    "problem",
    "n",
    "k",
    "algorithm",
    "beta_lambda",
    "u_lambda",
    "beta_p",
    "u_p",
    "beta_c",
    "u_c",
    "init_mode",
    "seed",
    "success",
    "iterations",
    "evaluations",
    "best_fitness",
];

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot parse config: {0}")]
    Json(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("sweep has {cells} cells, more than the cap of {cap}")]
    CapExceeded { cells: usize, cap: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("cannot build thread pool: {0}")]
    Threads(String),
}

fn config_error(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticSpec {
    pub lambda: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EaSpec {
    /// Defaults to `1/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    /// `ht-ollga`, `static-ollga` or `ea`.
    pub name: String,
    /// Defaults to [`HyperParams::recommended`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<HyperParams>,
    #[serde(default, rename = "static", skip_serializing_if = "Option::is_none")]
    pub static_params: Option<StaticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ea: Option<EaSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    /// `uniform`, `local_optimum` or `distance` (with `param` = distance).
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<usize>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            mode: "uniform".into(),
            param: None,
        }
    }
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
    pub repetitions: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Json(e.to_string()))
}

/// Relative instance paths are taken relative to the configuration file.
fn anchor_instance(problem: &mut ProblemSpec, config_path: &Path) {
    if let (Some(instance), Some(dir)) = (&problem.instance, config_path.parent()) {
        if instance.is_relative() {
            problem.instance = Some(dir.join(instance));
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut config = Self::from_json(&read_text(path)?)?;
        anchor_instance(&mut config.problem, path);
        Ok(config)
    }

    /// Validates the configuration and builds everything a run needs.
    pub fn prepare(&self) -> Result<Experiment, HarnessError> {
        if self.repetitions == 0 {
            return Err(config_error("repetitions", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(config_error("budget", "must be at least 1"));
        }
        let problem = self.build_problem()?;
        let (algorithm, hyper) = self.build_algorithm(problem.dimension())?;
        let init = self.build_init()?;
        init.check(&problem)
            .map_err(|e| config_error("init", e.to_string()))?;
        Ok(Experiment {
            problem,
            algorithm,
            hyper,
            init,
            repetitions: self.repetitions,
            budget: self.budget,
            seed: self.seed,
        })
    }

    fn build_problem(&self) -> Result<Problem, HarnessError> {
        let spec = &self.problem;
        let need_n = || spec.n.ok_or_else(|| config_error("problem.n", "required for this problem"));
        let bad = |field: &str| Err(config_error(field, format!("not accepted by problem {:?}", spec.name)));
        let wrap = |field: &str, e: ProblemError| config_error(field, e.to_string());
        let problem = match spec.name.as_str() {
            "onemax" | "leadingones" => {
                if spec.k.is_some() {
                    return bad("problem.k");
                }
                if spec.instance.is_some() {
                    return bad("problem.instance");
                }
                let n = need_n()?;
                if spec.name == "onemax" {
                    Problem::onemax(n)
                } else {
                    Problem::leadingones(n)
                }
                .map_err(|e| wrap("problem.n", e))?
            }
            "jump" => {
                if spec.instance.is_some() {
                    return bad("problem.instance");
                }
                let n = need_n()?;
                let k = spec
                    .k
                    .ok_or_else(|| config_error("problem.k", "required for jump"))?;
                Problem::jump(n, k).map_err(|e| wrap("problem.k", e))?
            }
            "mst" | "partition" => {
                if spec.k.is_some() {
                    return bad("problem.k");
                }
                let path = spec
                    .instance
                    .as_ref()
                    .ok_or_else(|| config_error("problem.instance", "required for this problem"))?;
                let problem = load_instance(path)
                    .map_err(|e| wrap("problem.instance", e))?
                    .into_problem();
                if problem.name() != spec.name {
                    return Err(config_error(
                        "problem.instance",
                        format!("file holds a {} instance", problem.name()),
                    ));
                }
                if let Some(n) = spec.n {
                    if n != problem.dimension() {
                        return Err(config_error(
                            "problem.n",
                            format!("instance has dimension {}", problem.dimension()),
                        ));
                    }
                }
                problem
            }
            other => {
                return Err(config_error(
                    "problem.name",
                    format!("unknown problem {other:?} (expected onemax, leadingones, jump, mst or partition)"),
                ))
            }
        };
        Ok(problem)
    }

    fn build_algorithm(&self, n: usize) -> Result<(Algorithm, Option<HyperParams>), HarnessError> {
        let spec = &self.algorithm;
        let reject = |field: &str, present: bool| {
            if present {
                Err(config_error(field, format!("not accepted by algorithm {:?}", spec.name)))
            } else {
                Ok(())
            }
        };
        match spec.name.as_str() {
            "ht-ollga" => {
                reject("algorithm.static", spec.static_params.is_some())?;
                reject("algorithm.ea", spec.ea.is_some())?;
                let hyper = spec.hyper.unwrap_or_else(HyperParams::recommended);
                let alg = Algorithm::heavy_tailed(&hyper, n)
                    .map_err(|e| config_error("algorithm.hyper", e.to_string()))?;
                Ok((alg, Some(hyper)))
            }
            "static-ollga" => {
                reject("algorithm.hyper", spec.hyper.is_some())?;
                reject("algorithm.ea", spec.ea.is_some())?;
                let lambda = spec
                    .static_params
                    .ok_or_else(|| config_error("algorithm.static", "required for static-ollga"))?
                    .lambda;
                let alg = Algorithm::static_ollga(lambda, n)
                    .map_err(|e| config_error("algorithm.static.lambda", e.to_string()))?;
                Ok((alg, None))
            }
            "ea" => {
                reject("algorithm.hyper", spec.hyper.is_some())?;
                reject("algorithm.static", spec.static_params.is_some())?;
                let rate = spec.ea.unwrap_or_default().rate.unwrap_or(1.0 / n as f64);
                let alg = Algorithm::ea(rate).map_err(|e| config_error("algorithm.ea.rate", e.to_string()))?;
                Ok((alg, None))
            }
            other => Err(config_error(
                "algorithm.name",
                format!("unknown algorithm {other:?} (expected ht-ollga, static-ollga or ea)"),
            )),
        }
    }

    fn build_init(&self) -> Result<InitMode, HarnessError> {
        let spec = &self.init;
        let no_param = || match spec.param {
            Some(_) => Err(config_error("init.param", format!("not accepted by mode {:?}", spec.mode))),
            None => Ok(()),
        };
        match spec.mode.as_str() {
            "uniform" => no_param().map(|_| InitMode::UniformRandom),
            "local_optimum" => no_param().map(|_| InitMode::JumpLocalOptimum),
            "distance" => spec
                .param
                .map(InitMode::FixedDistance)
                .ok_or_else(|| config_error("init.param", "distance mode needs a distance")),
            other => Err(config_error(
                "init.mode",
                format!("unknown mode {other:?} (expected uniform, local_optimum or distance)"),
            )),
        }
    }
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: Problem,
    pub algorithm: Algorithm,
    /// Unresolved hyperparameters of a heavy-tailed run, echoed in records.
    pub hyper: Option<HyperParams>,
    pub init: InitMode,
    pub repetitions: u64,
    pub budget: u64,
    pub seed: u64,
}

impl Experiment {
    pub fn run(&self, threads: Option<usize>) -> Result<Vec<RunRecord>, HarnessError> {
        with_threads(threads, || {
            (0..self.repetitions)
                .into_par_iter()
                .map(|i| self.run_one(i))
                .collect()
        })?
    }

    fn run_one(&self, run_id: u64) -> Result<RunRecord, HarnessError> {
        let seed = self.seed.wrapping_add(run_id);
        let mut rng = rng_for_seed(seed);
        let result = self.algorithm.run(&self.problem, self.init, self.budget, &mut rng)?;
        let n = self.problem.dimension();
        let (mut beta_lambda, mut u_lambda, mut beta_p, mut u_p, mut beta_c, mut u_c) =
            (None, None, None, None, None, None);
        if let (Some(h), Algorithm::HeavyTailed(resolved)) = (&self.hyper, &self.algorithm) {
            beta_lambda = Some(h.beta_lambda);
            beta_p = Some(h.beta_p);
            beta_c = Some(h.beta_c);
            u_lambda = Some(resolved.lambda().upper());
            u_p = Some(resolved.p().upper());
            u_c = Some(resolved.c().upper());
        }
        Ok(RunRecord {
            run_id,
            problem: self.problem.name().to_string(),
            n,
            k: self.problem.jump_k(),
            algorithm: self.algorithm.name().to_string(),
            beta_lambda,
            u_lambda,
            beta_p,
            u_p,
            beta_c,
            u_c,
            init_mode: self.init.to_string(),
            seed,
            success: result.success,
            iterations: result.iterations,
            evaluations: result.evaluations,
            best_fitness: result.best_fitness,
        })
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool (one worker
/// per logical core) when `None`.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(config_error("threads", "must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| HarnessError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunRecord>, HarnessError> {
    config.prepare()?.run(threads)
}

/// Outcome of one run as stored in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub problem: String,
    pub n: usize,
    pub k: Option<usize>,
    pub algorithm: String,
    pub beta_lambda: Option<f64>,
    #[serde(with = "opt_bound")]
    pub u_lambda: Option<Bound>,
    pub beta_p: Option<f64>,
    #[serde(with = "opt_bound")]
    pub u_p: Option<Bound>,
    pub beta_c: Option<f64>,
    #[serde(with = "opt_bound")]
    pub u_c: Option<Bound>,
    pub init_mode: String,
    pub seed: u64,
    pub success: bool,
    pub iterations: u64,
    pub evaluations: u64,
    pub best_fitness: i64,
}

/// Bounds as CSV cells: empty, an integer, or `inf`.
mod opt_bound {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::powerlaw::Bound;

    pub fn serialize<S: Serializer>(value: &Option<Bound>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            None => s.serialize_none(),
            Some(Bound::Finite(u)) => s.serialize_u64(*u),
            Some(Bound::Infinite) => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Bound>, D::Error> {
        let Some(text) = Option::<String>::deserialize(d)? else {
            return Ok(None);
        };
        match text.as_str() {
            "" => Ok(None),
            "inf" => Ok(Some(Bound::Infinite)),
            t => t
                .parse::<u64>()
                .map(|u| Some(Bound::Finite(u)))
                .map_err(|_| D::Error::custom(format!("invalid bound {t:?}"))),
        }
    }
}

fn csv_error(path: &Path, e: &csv::Error) -> HarnessError {
    HarnessError::Csv {
        path: path.display().to_string(),
        line: e.position().map_or(0, |p| p.line()),
        message: match e.kind() {
            csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
            _ => e.to_string(),
        },
    }
}

/// Renders records as CSV text with the fixed header.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    fs::write(path, records_to_csv(records)).map_err(|e| io_error(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    parse_csv(&read_text(path)?, path)
}

/// Parses CSV text; `origin` only labels errors.
pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => None,
        Some(row) => Some(row.map_err(|e| csv_error(origin, &e))?),
    };
    if header.as_ref().is_none_or(|h| h.iter().ne(CSV_HEADER)) {
        return Err(HarnessError::Csv {
            path: origin.display().to_string(),
            line: 1,
            message: format!("missing header; expected {}", CSV_HEADER.join(",")),
        });
    }
    let header = header.expect("checked above");
    rows.map(|row| {
        let row = row.map_err(|e| csv_error(origin, &e))?;
        row.deserialize(Some(&header)).map_err(|e| csv_error(origin, &e))
    })
    .collect()
}

/// Lists of values spanning a sweep; absent lists keep the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_lambda: Option<Vec<f64>>,
    /// Sets `beta_p` and `beta_c` together.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_pc: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: ExperimentConfig,
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut config = Self::from_json(&read_text(path)?)?;
        anchor_instance(&mut config.experiment.problem, path);
        Ok(config)
    }

    /// One configuration per grid cell, `n` varying slowest and `beta_pc`
    /// fastest; cell `i` is seeded with `seed + i * SWEEP_SEED_STRIDE`.
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>, HarnessError> {
        let base = &self.experiment;
        if base.repetitions > SWEEP_SEED_STRIDE {
            return Err(config_error(
                "experiment.repetitions",
                format!("a sweep allows at most {SWEEP_SEED_STRIDE} repetitions per cell"),
            ));
        }
        fn axis<T: Copy>(field: &str, list: &Option<Vec<T>>) -> Result<Vec<Option<T>>, HarnessError> {
            match list {
                None => Ok(vec![None]),
                Some(v) if v.is_empty() => Err(config_error(field, "list is empty")),
                Some(v) => Ok(v.iter().copied().map(Some).collect()),
            }
        }
        let ns = axis("grid.n", &self.grid.n)?;
        let ks = axis("grid.k", &self.grid.k)?;
        let lambdas = axis("grid.beta_lambda", &self.grid.beta_lambda)?;
        let pcs = axis("grid.beta_pc", &self.grid.beta_pc)?;
        let uses_betas = self.grid.beta_lambda.is_some() || self.grid.beta_pc.is_some();
        if uses_betas && base.algorithm.name != "ht-ollga" {
            return Err(config_error("grid", "beta lists need the ht-ollga algorithm"));
        }
        let cells = ns.len() * ks.len() * lambdas.len() * pcs.len();
        let cap = self.cap.unwrap_or(DEFAULT_SWEEP_CAP);
        if cells > cap {
            return Err(HarnessError::CapExceeded { cells, cap });
        }
        let mut out = Vec::with_capacity(cells);
        for &n in &ns {
            for &k in &ks {
                for &bl in &lambdas {
                    for &bpc in &pcs {
                        let mut cell = base.clone();
                        cell.output = None;
                        cell.seed = base
                            .seed
                            .wrapping_add(SWEEP_SEED_STRIDE.wrapping_mul(out.len() as u64));
                        if n.is_some() {
                            cell.problem.n = n;
                        }
                        if k.is_some() {
                            cell.problem.k = k;
                        }
                        if uses_betas {
                            let mut hyper = cell.algorithm.hyper.unwrap_or_else(HyperParams::recommended);
                            if let Some(b) = bl {
                                hyper.beta_lambda = b;
                            }
                            if let Some(b) = bpc {
                                hyper.beta_p = b;
                                hyper.beta_c = b;
                            }
                            cell.algorithm.hyper = Some(hyper);
                        }
                        out.push(cell);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Runs every cell of a sweep. All cells are validated before any runs.
pub fn sweep(config: &SweepConfig, threads: Option<usize>) -> Result<Vec<RunRecord>, HarnessError> {
    let experiments = config
        .cells()?
        .iter()
        .map(ExperimentConfig::prepare)
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    for e in &experiments {
        records.extend(e.run(threads)?);
    }
    Ok(records)
}

/// Record columns usable as grouping keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Problem,
    N,
    K,
    Algorithm,
    BetaLambda,
    ULambda,
    BetaP,
    UP,
    BetaC,
    UC,
    InitMode,
}

impl GroupKey {
    pub const ALL: [GroupKey; 11] = [
        GroupKey::Problem,
        GroupKey::N,
        GroupKey::K,
        GroupKey::Algorithm,
        GroupKey::BetaLambda,
        GroupKey::ULambda,
        GroupKey::BetaP,
        GroupKey::UP,
        GroupKey::BetaC,
        GroupKey::UC,
        GroupKey::InitMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Problem => "problem",
            GroupKey::N => "n",
            GroupKey::K => "k",
            GroupKey::Algorithm => "algorithm",
            GroupKey::BetaLambda => "beta_lambda",
            GroupKey::ULambda => "u_lambda",
            GroupKey::BetaP => "beta_p",
            GroupKey::UP => "u_p",
            GroupKey::BetaC => "beta_c",
            GroupKey::UC => "u_c",
            GroupKey::InitMode => "init_mode",
        }
    }

    pub fn value(self, r: &RunRecord) -> String {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        match self {
            GroupKey::Problem => r.problem.clone(),
            GroupKey::N => r.n.to_string(),
            GroupKey::K => opt(&r.k),
            GroupKey::Algorithm => r.algorithm.clone(),
            GroupKey::BetaLambda => opt(&r.beta_lambda),
            GroupKey::ULambda => opt(&r.u_lambda),
            GroupKey::BetaP => opt(&r.beta_p),
            GroupKey::UP => opt(&r.u_p),
            GroupKey::BetaC => opt(&r.beta_c),
            GroupKey::UC => opt(&r.u_c),
            GroupKey::InitMode => r.init_mode.clone(),
        }
    }

    /// Every column that identifies a configuration.
    pub fn configuration() -> Vec<GroupKey> {
        Self::ALL.to_vec()
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown group key {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    /// Values of the grouping keys, in key order.
    pub key: Vec<String>,
    pub runs: usize,
    pub failures: usize,
    /// Over successful runs only; `None` when every run failed.
    pub summary: Option<SampleSummary>,
}

/// Summaries of evaluations per group, groups in order of first appearance.
/// Failed runs are counted but excluded from the statistics; with
/// `normalize`, each run's evaluations are divided by `n ln n`.
pub fn group_summary(records: &[RunRecord], keys: &[GroupKey], normalize: bool) -> Vec<GroupSummary> {
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<String>, usize, Vec<f64>)> = Vec::new();
    for r in records {
        let key: Vec<String> = keys.iter().map(|k| k.value(r)).collect();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, 0, Vec::new()));
            groups.len() - 1
        });
        let group = &mut groups[slot];
        if r.success {
            let v = r.evaluations as f64;
            group.2.push(if normalize { normalize_runtime(v, r.n) } else { v });
        } else {
            group.1 += 1;
        }
    }
    groups
        .into_iter()
        .map(|(key, failures, values)| GroupSummary {
            key,
            runs: values.len() + failures,
            failures,
            summary: summarize(&values).ok(),
        })
        .collect()
}

/// Summary table as CSV: the key columns, then
/// `runs,failures,metric,mean,std,min,max`.
pub fn summary_to_csv(groups: &[GroupSummary], keys: &[GroupKey], normalize: bool) -> String {
    let metric = if normalize { "evaluations/(n ln n)" } else { "evaluations" };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
    header.extend(["runs", "failures", "metric", "mean", "std", "min", "max"]);
    w.write_record(&header).expect("in-memory write");
    for g in groups {
        let mut row = g.key.clone();
        row.extend([g.runs.to_string(), g.failures.to_string(), metric.to_string()]);
        match &g.summary {
            Some(s) => row.extend([s.mean, s.std, s.min, s.max].map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    fn field_of(e: HarnessError) -> String {
        match e {
            HarnessError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            (r#"{"problem":{"name":"onemax"},"algorithm":{"name":"ea"},"repetitions":1}"#, "problem.n"),
            (r#"{"problem":{"name":"jump","n":16},"algorithm":{"name":"ea"},"repetitions":1}"#, "problem.k"),
            (r#"{"problem":{"name":"jump","n":16,"k":5},"algorithm":{"name":"ea"},"repetitions":1}"#, "problem.k"),
            (r#"{"problem":{"name":"cube","n":16},"algorithm":{"name":"ea"},"repetitions":1}"#, "problem.name"),
            (r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ga"},"repetitions":1}"#, "algorithm.name"),
            (r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ea"},"repetitions":0}"#, "repetitions"),
            (r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ea"},"repetitions":1,"budget":0}"#, "budget"),
            (
                r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"static-ollga","static":{"lambda":9}},"repetitions":1}"#,
                "algorithm.static.lambda",
            ),
            (
                r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ht-ollga","hyper":{"beta_lambda":2.5,"u_lambda":"inf","beta_p":1.1,"u_p":5,"beta_c":1.1,"u_c":"sqrt_n"}},"repetitions":1}"#,
                "algorithm.hyper",
            ),
            (
                r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ea"},"repetitions":1,"init":{"mode":"local_optimum"}}"#,
                "init",
            ),
            (
                r#"{"problem":{"name":"onemax","n":16},"algorithm":{"name":"ea"},"repetitions":1,"init":{"mode":"distance"}}"#,
                "init.param",
            ),
            (r#"{"problem":{"name":"mst"},"algorithm":{"name":"ea"},"repetitions":1}"#, "problem.instance"),
        ];
        for (json, field) in cases {
            assert_eq!(field_of(config(json).prepare().unwrap_err()), field, "{json}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(
            r#"{"problem":{"name":"onemax","n":8},"algorithm":{"name":"ea"},"repetitions":1,"repetition":2}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("repetition"));
    }

    #[test]
    fn sweep_cells_and_seeds() {
        let s = SweepConfig::from_json(
            r#"{"experiment":{"problem":{"name":"jump","n":16,"k":2},"algorithm":{"name":"ht-ollga"},"repetitions":3,"seed":7},
                "grid":{"beta_lambda":[2.0,2.4],"beta_pc":[1.0,1.4]}}"#,
        )
        .unwrap();
        let cells = s.cells().unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[3].seed, 7 + 3 * SWEEP_SEED_STRIDE);
        let h = cells[1].algorithm.hyper.unwrap();
        assert_eq!((h.beta_lambda, h.beta_p, h.beta_c), (2.0, 1.4, 1.4));
        let mut bad = s.clone();
        bad.grid.beta_pc = Some(vec![]);
        assert_eq!(field_of(bad.cells().unwrap_err()), "grid.beta_pc");
        let mut capped = s;
        capped.cap = Some(3);
        assert!(matches!(capped.cells(), Err(HarnessError::CapExceeded { cells: 4, cap: 3 })));
    }
}
