//! Experiment runner behind the `dpgrr` binary.
//!
//! An experiment is a TOML file:
//!
//! ```toml
//! name = "canonical"
//! seeds = [42]
//! epochs = 1600
//! loss = "logistic"
//! output_dir = "../runs/canonical"   # relative to this file
//!
//! [dataset]
//! source = "synthetic"
//! m = 5
//! n = 20
//! d = 10
//! separation = 1.0
//! decay = 0.5                        # feature scale ratio between coordinates
//! seed = 42
//!
//! [regularizer]
//! kind = "l1"
//! lambda = 0.1
//!
//! [graph]
//! eta = 0.2
//! window = 4
//! steps = "growing"                  # or { fixed = 3 }
//! slots = [[[0, 1]], [[1, 2]], [[2, 3]], [[3, 4]]]
//!
//! [[algorithms]]
//! name = "dpg-rr"
//! step = { rule = "theorem" }        # M at the bound; `scale` or `m` override
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{self, LabelMode, PartitionStrategy};
use crate::dpgrr::{self, theorem_step_bound, Algorithm, RunConfig, RunTrace, StepRule};
use crate::error::{Error, Result};
use crate::metrics;
use crate::netgraph::{validate_schedule, GraphSchedule, StepsMode, ValidationReport};
use crate::objectives::{gradient_bound, Problem, SmoothLossKind};
use crate::proxops::Regularizer;
use crate::reference::{self, FixtureStore, ReferenceSolution};
use crate::vecops;

/// Gradient-mapping tolerance for certified optima.
pub const ORACLE_TOL: f64 = 1e-10;
pub const ORACLE_MAX_ITERS: usize = 2_000_000;

pub const CSV_HEADER: [&str; 8] = [
    "epoch",
    "F_bar",
    "F_hat",
    "subopt",
    "D",
    "max_consensus_dist",
    "sigma_star_sq",
    "V_t",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub epochs: usize,
    #[serde(default = "default_loss")]
    pub loss: SmoothLossKind,
    #[serde(default = "default_output", skip_serializing)]
    pub output_dir: PathBuf,
    /// Record every k-th epoch; unset keeps at most ~2000 rows.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Also write `x_bar` and `x_hat` for every recorded epoch.
    #[serde(default)]
    pub write_snapshots: bool,
    /// Optimum store; defaults to `optima.txt` next to the config.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default = "yes")]
    pub enforce_step_bound: bool,
    #[serde(default, skip_serializing)]
    pub parallel: bool,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub dataset: DatasetSpec,
    #[serde(default = "default_reg")]
    pub regularizer: Regularizer,
    pub graph: GraphSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_loss() -> SmoothLossKind {
    SmoothLossKind::Logistic
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_reg() -> Regularizer {
    Regularizer::Zero
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        m: usize,
        n: usize,
        d: usize,
        separation: f64,
        /// Geometric decay of feature scales; 1 is isotropic.
        #[serde(default = "one")]
        decay: f64,
        seed: u64,
    },
    Libsvm {
        path: PathBuf,
        m: usize,
        #[serde(default = "default_strategy")]
        strategy: PartitionStrategy,
        #[serde(default)]
        shuffle_seed: Option<u64>,
        /// Feature dimension; inferred from the file when unset.
        #[serde(default)]
        dim: Option<usize>,
    },
}

fn default_strategy() -> PartitionStrategy {
    PartitionStrategy::RoundRobin
}

impl DatasetSpec {
    pub fn agents(&self) -> usize {
        match *self {
            DatasetSpec::Synthetic { m, .. } | DatasetSpec::Libsvm { m, .. } => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub eta: f64,
    /// Connectivity window `B`.
    pub window: usize,
    #[serde(default = "default_steps")]
    pub steps: StepsMode,
    /// Edge list for each period slot.
    pub slots: Vec<Vec<(usize, usize)>>,
}

fn default_steps() -> StepsMode {
    StepsMode::Growing
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: Algorithm,
    pub step: StepSpec,
    /// File stem; defaults to the algorithm name.
    #[serde(default)]
    pub label: Option<String>,
}

impl AlgorithmSpec {
    pub fn stem(&self) -> &str {
        self.label.as_deref().unwrap_or(self.name.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    /// `gamma = M / sqrt(T)`; `M` given directly or as `scale` times the bound.
    Theorem {
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        scale: Option<f64>,
    },
    Constant { gamma: f64 },
    Diminishing { gamma0: f64 },
}

impl StepSpec {
    pub fn resolve(&self, problem: &Problem) -> StepRule {
        match *self {
            StepSpec::Theorem { m: Some(m), .. } => StepRule::Theorem(m),
            StepSpec::Theorem { m: None, scale } => {
                let bound = theorem_step_bound(problem.lipschitz_constant(), problem.local_len());
                StepRule::Theorem(scale.unwrap_or(1.0) * bound)
            }
            StepSpec::Constant { gamma } => StepRule::Constant(gamma),
            StepSpec::Diminishing { gamma0 } => StepRule::Diminishing(gamma0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(default)]
    pub sigma_star: bool,
    #[serde(default)]
    pub forward_deviation: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A parsed config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    base_dir: PathBuf,
    out_override: Option<PathBuf>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let exp = Experiment {
            config,
            base_dir,
            out_override: None,
        };
        exp.check_fields()?;
        Ok(exp)
    }

    fn check_fields(&self) -> Result<()> {
        let c = &self.config;
        if c.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if c.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        let mut stems: Vec<&str> = c.algorithms.iter().map(AlgorithmSpec::stem).collect();
        stems.sort_unstable();
        if stems.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("algorithm labels must be unique".into()));
        }
        if c.dataset.agents() != self.graph_agents() {
            return Err(Error::Config(format!(
                "dataset has m = {} agents but graph slots mention {}",
                c.dataset.agents(),
                self.graph_agents()
            )));
        }
        c.regularizer.validate()
    }

    fn graph_agents(&self) -> usize {
        // every agent must exist even if no edge mentions it
        let mentioned = self
            .config
            .graph
            .slots
            .iter()
            .flatten()
            .map(|&(a, b)| a.max(b) + 1)
            .max()
            .unwrap_or(0);
        mentioned.max(self.config.dataset.agents())
    }

    /// Replaces the seed list.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seeds = vec![seed];
        self
    }

    /// Output directory taken as given (relative to the working directory).
    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.out_override = Some(dir);
        self
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.out_override {
            Some(d) => d.clone(),
            None => self.resolve(&self.config.output_dir),
        }
    }

    pub fn fixtures_path(&self) -> PathBuf {
        match &self.config.fixtures {
            Some(p) => self.resolve(p),
            None => self.base_dir.join("optima.txt"),
        }
    }

    /// Hash of every semantic field: everything except the output directory
    /// and the parallelism switch.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(&self.config).expect("config serializes");
        sha256_hex(json.as_bytes())
    }

    pub fn build_problem(&self) -> Result<(Problem, DataInfo)> {
        let c = &self.config;
        let (datasets, dim, dropped) = match &c.dataset {
            DatasetSpec::Synthetic {
                m,
                n,
                d,
                separation,
                decay,
                seed,
            } => (
                dataio::synthesize_with_decay(*m, *n, *d, *separation, *decay, *seed)?,
                *d,
                0,
            ),
            DatasetSpec::Libsvm {
                path,
                m,
                strategy,
                shuffle_seed,
                dim,
            } => {
                let path = self.resolve(path);
                let file = fs::File::open(&path)
                    .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
                let mode = match c.loss {
                    SmoothLossKind::Logistic => LabelMode::Classification,
                    SmoothLossKind::LeastSquares => LabelMode::Regression,
                };
                let parsed = dataio::parse_libsvm(io::BufReader::new(file), mode)?;
                let d = match *dim {
                    Some(d) if d < parsed.dim => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: parsed.dim,
                        })
                    }
                    Some(d) => d,
                    None => parsed.dim,
                };
                let (ds, part) = dataio::partition(&parsed.samples, *m, *strategy, *shuffle_seed)?;
                (ds, d, part.dropped)
            }
        };
        let problem = Problem::new(datasets, dim, c.loss, c.regularizer)?;
        let info = DataInfo {
            m: problem.agents(),
            n: problem.local_len(),
            d: problem.dim,
            dropped,
            problem_hash: problem_hash(&problem),
        };
        Ok((problem, info))
    }

    pub fn build_schedule(&self) -> Result<GraphSchedule> {
        let g = &self.config.graph;
        GraphSchedule::from_edge_slots(self.graph_agents(), &g.slots, g.eta, g.window)
    }

    /// Engine configuration for one algorithm entry and seed.
    pub fn run_config(&self, spec: &AlgorithmSpec, problem: &Problem, seed: u64) -> RunConfig {
        let c = &self.config;
        let mut rc = RunConfig::new(spec.name, c.epochs, spec.step.resolve(problem));
        rc.steps_mode = c.graph.steps;
        rc.seed = seed;
        rc.snapshot_every = c.snapshot_every;
        rc.x0 = c.x0.clone();
        rc.record_forward_deviation = c.diagnostics.forward_deviation;
        rc.enforce_step_bound = c.enforce_step_bound;
        rc.parallel = c.parallel;
        rc
    }
}

/// Size of the partitioned problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataInfo {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub dropped: usize,
    /// Hash of the partitioned samples, loss and regularizer; keys the optimum
    /// store.
    #[serde(skip)]
    pub problem_hash: String,
}

/// Hash of the data and objective, independent of algorithm settings.
pub fn problem_hash(problem: &Problem) -> String {
    let mut h = Sha256::new();
    let head = format!(
        "{}|{}|{}|{}|",
        serde_json::to_string(&problem.kind).expect("serializes"),
        serde_json::to_string(&problem.reg).expect("serializes"),
        problem.dim,
        problem.agents()
    );
    h.update(head.as_bytes());
    for ds in &problem.datasets {
        h.update((ds.samples.len() as u64).to_le_bytes());
        for s in &ds.samples {
            h.update(s.label.to_bits().to_le_bytes());
            h.update((s.features.len() as u64).to_le_bytes());
            for &(k, v) in &s.features {
                h.update(k.to_le_bytes());
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

/// Step-size verdict for one algorithm entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCheck {
    pub label: String,
    pub gamma: f64,
    pub detail: String,
    pub ok: bool,
    pub exceeds_bound: bool,
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub schedule: Option<ValidationReport>,
    pub steps: Vec<StepCheck>,
    /// First violated assumption, if any.
    pub failure: Option<String>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks the schedule and every step rule. With `strict` a theorem step above
/// the bound fails even if the config only asks for a warning.
pub fn validate(exp: &Experiment, problem: &Problem, strict: bool) -> Validation {
    let mut failure = None;
    let schedule = match exp.build_schedule() {
        Ok(s) => {
            let rep = validate_schedule(&s);
            if !rep.matrices_ok() {
                failure = Some("mixing matrices: doubly stochastic, symmetric, eta-bounded".to_string());
            } else if !rep.connectivity_ok() {
                failure = Some(format!("uniform connectivity: some window of B = {} slots is disconnected", rep.window));
            }
            Some(rep)
        }
        Err(e @ Error::EtaViolation { .. }) => {
            failure = Some(format!("mixing matrices: {e}"));
            None
        }
        Err(e) => {
            failure = Some(format!("graph schedule: {e}"));
            None
        }
    };
    let bound = theorem_step_bound(problem.lipschitz_constant(), problem.local_len());
    let mut steps = Vec::new();
    for spec in &exp.config.algorithms {
        let mut rc = exp.run_config(spec, problem, 0);
        rc.enforce_step_bound = true;
        let gamma = rc.base_step();
        let exceeds = matches!(rc.step, StepRule::Theorem(m) if m > bound * (1.0 + 1e-12));
        let (ok, detail) = match rc.check_step(problem) {
            Ok(()) => (true, describe_step(rc.step, bound)),
            Err(_) if exceeds => (
                !(strict || exp.config.enforce_step_bound),
                format!("{} exceeds bound {bound:e}", describe_step(rc.step, bound)),
            ),
            Err(e) => (false, e.to_string()),
        };
        if !ok && failure.is_none() {
            failure = Some(if exceeds {
                format!("step-size bound: {} has M above sqrt(6)/(6 L n) = {bound:e}", spec.stem())
            } else {
                format!("step size: {}: {detail}", spec.stem())
            });
        }
        steps.push(StepCheck {
            label: spec.stem().to_string(),
            gamma,
            detail,
            ok,
            exceeds_bound: exceeds,
        });
    }
    Validation {
        schedule,
        steps,
        failure,
    }
}

fn describe_step(rule: StepRule, bound: f64) -> String {
    match rule {
        StepRule::Constant(g) => format!("constant gamma = {g}"),
        StepRule::Theorem(m) => format!("theorem M = {m:e} (bound {bound:e})"),
        StepRule::Diminishing(g) => format!("diminishing gamma0 = {g}"),
    }
}

/// Certified optimum and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub x: Vec<f64>,
    pub mapping_norm: f64,
    pub source: String,
}

/// Looks the optimum up in the store, solving on the fly when absent.
pub fn find_optimum(exp: &Experiment, problem: &Problem, key: &str) -> Result<Optimum> {
    let store = FixtureStore::open(exp.fixtures_path())?;
    if let Some(f) = store.get(key) {
        let x = store.read_x(f)?;
        if x.len() == problem.dim {
            return Ok(Optimum {
                value: f.value,
                x,
                mapping_norm: f.mapping_norm,
                source: format!("fixture (tol {:e})", f.tol),
            });
        }
        log::warn!("fixture {key} has the wrong dimension; recomputing");
    }
    let (sol, converged) = match reference::solve_centralized(problem, ORACLE_TOL, ORACLE_MAX_ITERS) {
        Ok(s) => (s, true),
        Err(Error::NoConvergence { best }) => (*best, false),
        Err(e) => return Err(e),
    };
    let source = if converged {
        format!("computed (tol {ORACLE_TOL:e})")
    } else {
        log::warn!("optimum not certified: mapping norm {:e}", sol.mapping_norm);
        format!("computed, NOT converged (mapping norm {:e})", sol.mapping_norm)
    };
    Ok(Optimum {
        value: sol.value,
        x: sol.x,
        mapping_norm: sol.mapping_norm,
        source,
    })
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Metrics rows in the on-disk CSV layout.
pub fn write_metrics_csv<W: Write>(w: W, trace: &RunTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &trace.records {
        let m = &r.metrics;
        out.write_record([
            m.epoch.to_string(),
            fmt_f64(m.f_bar),
            fmt_f64(m.f_hat),
            fmt_opt(m.subopt),
            fmt_f64(m.consensus),
            fmt_f64(m.max_consensus_dist),
            fmt_opt(m.sigma_star_sq),
            fmt_opt(m.forward_dev),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `epoch, xbar_0.., xhat_0..` for every recorded epoch.
pub fn write_snapshot_csv<W: Write>(w: W, trace: &RunTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = trace.x_hat.len();
    let mut header = vec!["epoch".to_string()];
    header.extend((0..d).map(|k| format!("xbar_{k}")));
    header.extend((0..d).map(|k| format!("xhat_{k}")));
    out.write_record(&header).map_err(csv_err)?;
    for r in &trace.records {
        let mut row = vec![r.metrics.epoch.to_string()];
        row.extend(r.x_bar.iter().copied().map(fmt_f64));
        row.extend(r.x_hat.iter().copied().map(fmt_f64));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestRun {
    pub label: String,
    pub algorithm: String,
    pub seed: u64,
    pub gamma: f64,
    pub step_rule: String,
    pub final_subopt: Option<f64>,
    pub metrics_file: String,
    pub snapshot_file: Option<String>,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub problem_hash: String,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub data: DataInfo,
    pub lipschitz_l: f64,
    pub gradient_bound_g_f: f64,
    pub subgradient_bound_g_phi: f64,
    pub theorem_m_bound: f64,
    pub f_star: f64,
    pub f_star_source: String,
    pub f_star_mapping_norm: f64,
    pub sigma_star_sq: Option<f64>,
    pub runs: Vec<ManifestRun>,
}

/// Everything produced by [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
    pub traces: Vec<(String, u64, RunTrace)>,
}

fn metrics_stem(label: &str, seed: u64, multi: bool) -> String {
    if multi {
        format!("{label}_seed{seed}")
    } else {
        label.to_string()
    }
}

/// Validates, runs every algorithm for every seed and writes CSVs plus a
/// manifest.
pub fn cmd_run(exp: &Experiment) -> Result<RunOutput> {
    let (problem, info) = exp.build_problem()?;
    let v = validate(exp, &problem, false);
    if let Some(f) = &v.failure {
        return Err(Error::Config(format!("validation failed: {f}")));
    }
    let schedule = exp.build_schedule()?;
    let opt = find_optimum(exp, &problem, &info.problem_hash)?;
    let c = &exp.config;
    let sigma = if c.diagnostics.sigma_star {
        Some(metrics::shuffling_variance(&problem, &opt.x)?)
    } else {
        None
    };
    let radius = vecops::norm(&opt.x);
    let lip = problem.lipschitz_constant();

    let dir = exp.output_dir();
    fs::create_dir_all(&dir)?;
    let multi = c.seeds.len() > 1;
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    for &seed in &c.seeds {
        for spec in &c.algorithms {
            let mut rc = exp.run_config(spec, &problem, seed);
            rc.optimum = Some(opt.value);
            rc.sigma_star_sq = sigma;
            log::info!("running {} seed {seed} for {} epochs", spec.stem(), c.epochs);
            let trace = dpgrr::run(&rc, &problem, &schedule)?;
            let stem = metrics_stem(spec.stem(), seed, multi);
            let metrics_file = format!("{stem}_metrics.csv");
            write_metrics_csv(fs::File::create(dir.join(&metrics_file))?, &trace)?;
            let snapshot_file = if c.write_snapshots {
                let f = format!("{stem}_snapshots.csv");
                write_snapshot_csv(fs::File::create(dir.join(&f))?, &trace)?;
                Some(f)
            } else {
                None
            };
            runs.push(ManifestRun {
                label: spec.stem().to_string(),
                algorithm: spec.name.name().to_string(),
                seed,
                gamma: trace.gamma,
                step_rule: describe_step(rc.step, theorem_step_bound(lip, problem.local_len())),
                final_subopt: trace.last().metrics.subopt,
                metrics_file,
                snapshot_file,
            });
            traces.push((spec.stem().to_string(), seed, trace));
        }
    }

    let manifest = Manifest {
        name: c.name.clone(),
        config_hash: exp.config_hash(),
        problem_hash: info.problem_hash.clone(),
        seeds: c.seeds.clone(),
        epochs: c.epochs,
        lipschitz_l: lip,
        gradient_bound_g_f: gradient_bound(&problem.datasets, problem.kind, radius)?,
        subgradient_bound_g_phi: problem.reg.subgradient_bound(problem.dim, radius),
        theorem_m_bound: theorem_step_bound(lip, problem.local_len()),
        f_star: opt.value,
        f_star_source: opt.source.clone(),
        f_star_mapping_norm: opt.mapping_norm,
        sigma_star_sq: sigma,
        data: info,
        runs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunOutput {
        manifest,
        output_dir: dir,
        traces,
    })
}

/// Plain-text validation report.
pub fn cmd_validate(exp: &Experiment) -> Result<(Validation, String)> {
    let (problem, info) = exp.build_problem()?;
    let v = validate(exp, &problem, true);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "experiment {}: m = {}, n = {}, d = {}, L = {:e}",
        exp.config.name,
        info.m,
        info.n,
        info.d,
        problem.lipschitz_constant()
    );
    match &v.schedule {
        Some(rep) => {
            let _ = writeln!(out, "{rep}");
        }
        None => {
            let _ = writeln!(out, "graph schedule: could not be built");
        }
    }
    for s in &v.steps {
        let _ = writeln!(
            out,
            "step {}: gamma = {:e}, {} {}",
            s.label,
            s.gamma,
            s.detail,
            if s.ok { "ok" } else { "FAIL" }
        );
    }
    match &v.failure {
        None => out.push_str("result: PASS\n"),
        Some(f) => {
            let _ = writeln!(out, "result: FAIL ({f})");
        }
    }
    Ok((v, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub key: String,
    pub value: f64,
    pub mapping_norm: f64,
    /// False when an existing fixture already met the tolerance.
    pub written: bool,
    pub store: PathBuf,
}

/// Computes and stores the certified optimum; a no-op when the stored one
/// already meets `tol`.
pub fn cmd_oracle(exp: &Experiment, tol: f64, max_iters: usize) -> Result<OracleOutcome> {
    let (problem, info) = exp.build_problem()?;
    let path = exp.fixtures_path();
    let mut store = FixtureStore::open(&path)?;
    let key = info.problem_hash;
    if let Some(f) = store.get(&key) {
        if f.tol <= tol && f.mapping_norm <= tol {
            return Ok(OracleOutcome {
                value: f.value,
                mapping_norm: f.mapping_norm,
                key,
                written: false,
                store: path,
            });
        }
    }
    let sol: ReferenceSolution = reference::solve_centralized(&problem, tol, max_iters)?;
    store.insert(&key, tol, &sol)?;
    Ok(OracleOutcome {
        key,
        value: sol.value,
        mapping_norm: sol.mapping_norm,
        written: true,
        store: path,
    })
}
