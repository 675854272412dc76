//! Synchronous epoch engine for distributed proximal gradient with random
//! reshuffling, its sampling variants, and a distributed subgradient baseline.
//!
//! One DPG epoch for every agent `j`:
//!
//! 1. `x_j^0 = x_j`, then `x_j^{i+1} = x_j^i - gamma * grad f_{j, pi_j(i)}(x_j^i)`
//!    for `i = 0..n`, following the agent's order for the epoch;
//! 2. `v_j = sum_l lambda_jl * x_l^n` with `lambda` the multi-step consensus
//!    weights for the epoch;
//! 3. `x_j <- prox_{gamma, phi}(v_j)`.
//!
//! Phase 2 reads every agent's phase-1 output, so phases are barrier
//! separated. DPG-RR, DPG-SG and DPG-IG differ only in the sampling schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, EpochMetrics};
use crate::netgraph::{GraphSchedule, ScheduleCursor, StepsMode};
use crate::objectives::Problem;
use crate::sampling::{SamplingMode, SamplingSchedule};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "dpg-rr")]
    DpgRr,
    #[serde(rename = "dpg-sg")]
    DpgSg,
    #[serde(rename = "dpg-ig")]
    DpgIg,
    #[serde(rename = "dgm")]
    Dgm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DpgRr => "dpg-rr",
            Algorithm::DpgSg => "dpg-sg",
            Algorithm::DpgIg => "dpg-ig",
            Algorithm::Dgm => "dgm",
        }
    }

    pub fn sampling_mode(self) -> Option<SamplingMode> {
        match self {
            Algorithm::DpgRr => Some(SamplingMode::RandomReshuffling),
            Algorithm::DpgSg => Some(SamplingMode::WithReplacement),
            Algorithm::DpgIg => Some(SamplingMode::Incremental),
            Algorithm::Dgm => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Fixed `gamma`.
    Constant(f64),
    /// `gamma = M / sqrt(T)`.
    Theorem(f64),
    /// `gamma_t = gamma0 / sqrt(t + 1)` (subgradient baseline only).
    Diminishing(f64),
}

/// Largest admissible `M` in the `gamma = M / sqrt(T)` rule: `sqrt(6) / (6 L n)`.
pub fn theorem_step_bound(lipschitz: f64, n: usize) -> f64 {
    6f64.sqrt() / (6.0 * lipschitz * n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub epochs: usize,
    pub step: StepRule,
    pub steps_mode: StepsMode,
    pub seed: u64,
    /// Record every k-th epoch; `None` picks at most ~2000 records.
    pub snapshot_every: Option<usize>,
    /// Keep every agent's iterate in recorded epochs.
    pub keep_agent_iterates: bool,
    /// Shared starting point; zero when `None`.
    pub x0: Option<Vec<f64>>,
    /// Record inner averages so `V_t` can be reported.
    pub record_forward_deviation: bool,
    /// Reject a theorem rule whose `M` exceeds the bound instead of warning.
    pub enforce_step_bound: bool,
    /// Known optimal value for suboptimality.
    pub optimum: Option<f64>,
    /// Precomputed shuffling variance copied into the metrics.
    pub sigma_star_sq: Option<f64>,
    pub parallel: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, epochs: usize, step: StepRule) -> Self {
        RunConfig {
            algorithm,
            epochs,
            step,
            steps_mode: StepsMode::Growing,
            seed: 0,
            snapshot_every: None,
            keep_agent_iterates: false,
            x0: None,
            record_forward_deviation: false,
            enforce_step_bound: true,
            optimum: None,
            sigma_star_sq: None,
            parallel: false,
        }
    }

    pub fn cadence(&self) -> usize {
        self.snapshot_every
            .unwrap_or_else(|| self.epochs.div_ceil(2000))
            .max(1)
    }

    /// Step size used by the DPG variants (and `gamma0` for the baseline).
    pub fn base_step(&self) -> f64 {
        match self.step {
            StepRule::Constant(g) | StepRule::Diminishing(g) => g,
            StepRule::Theorem(m) => m / (self.epochs.max(1) as f64).sqrt(),
        }
    }

    /// Checks the step rule against the problem's constants.
    pub fn check_step(&self, problem: &Problem) -> Result<()> {
        let g = self.base_step();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::NonPositiveStep(g));
        }
        match (self.algorithm, self.step) {
            (Algorithm::Dgm, StepRule::Diminishing(_)) => {}
            (Algorithm::Dgm, _) => {
                return Err(Error::Config("dgm requires a diminishing step rule".into()))
            }
            (_, StepRule::Diminishing(_)) => {
                return Err(Error::Config(format!(
                    "{} requires a constant or theorem step rule",
                    self.algorithm.name()
                )))
            }
            (_, StepRule::Theorem(m)) => {
                let bound = theorem_step_bound(problem.lipschitz_constant(), problem.local_len());
                if m > bound * (1.0 + 1e-12) {
                    let msg = format!("step-size bound: M = {m} exceeds sqrt(6)/(6 L n) = {bound}");
                    if self.enforce_step_bound {
                        return Err(Error::Config(msg));
                    }
                    log::warn!("{msg}");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Per-agent iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// `x_{j,t}`
    pub x: Vec<f64>,
    /// Last inner iterate `x_{j,t}^n`.
    pub x_inner: Vec<f64>,
    /// Post-consensus `v_{j,t}`.
    pub v: Vec<f64>,
}

impl AgentState {
    pub fn new(x: Vec<f64>) -> Self {
        AgentState {
            x_inner: x.clone(),
            v: x.clone(),
            x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub metrics: EpochMetrics,
    pub x_bar: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub agents: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub records: Vec<EpochRecord>,
    pub final_iterates: Vec<Vec<f64>>,
    /// Running average `x_hat_T` over epochs `1..=T` (`x_bar_0` when `T = 0`).
    pub x_hat: Vec<f64>,
}

impl RunTrace {
    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("trace always holds the initial record")
    }
}

fn map_agents<T: Send>(
    states: &mut [AgentState],
    parallel: bool,
    f: impl Fn(usize, &mut AgentState) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return states
            .par_iter_mut()
            .enumerate()
            .map(|(j, s)| f(j, s))
            .collect();
    }
    let _ = parallel;
    states.iter_mut().enumerate().map(|(j, s)| f(j, s)).collect()
}

/// Network side of the engine: the schedule and its communication-step cursor.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    pub problem: &'a Problem,
    pub schedule: &'a GraphSchedule,
    pub steps_mode: StepsMode,
    pub cursor: ScheduleCursor,
    pub parallel: bool,
}

impl<'a> Engine<'a> {
    pub fn new(problem: &'a Problem, schedule: &'a GraphSchedule, steps_mode: StepsMode) -> Result<Self> {
        if schedule.agents() != problem.agents() {
            return Err(Error::DimensionMismatch {
                expected: problem.agents(),
                got: schedule.agents(),
            });
        }
        Ok(Engine {
            problem,
            schedule,
            steps_mode,
            cursor: ScheduleCursor::new(),
            parallel: false,
        })
    }

    /// One synchronous DPG epoch. Returns the inner averages
    /// `x_bar_t^0..x_bar_t^{n-1}` when `record_inner` is set.
    pub fn run_epoch_dpg(
        &mut self,
        states: &mut [AgentState],
        gamma: f64,
        sampling: &SamplingSchedule,
        t: usize,
        record_inner: bool,
    ) -> Result<Option<Vec<Vec<f64>>>> {
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveStep(gamma));
        }
        let problem = self.problem;
        let n = problem.local_len();
        let d = problem.dim;

        // phase 1: local reshuffled gradient pass
        let inner = map_agents(states, self.parallel, |j, st| {
            let samples = &problem.datasets[j].samples;
            let mut x = st.x.clone();
            let mut trail = record_inner.then(|| Vec::with_capacity(n));
            for (i, idx) in sampling.epoch_indices(j, t).into_iter().enumerate() {
                if let Some(tr) = trail.as_mut() {
                    tr.push(x.clone());
                }
                let s = &samples[idx];
                let slope = problem.kind.slope(s.dot(&x), s.label);
                s.axpy_into(-gamma * slope, &mut x);
                if !slope.is_finite() || s.features.iter().any(|&(k, _)| !x[k as usize].is_finite()) {
                    return Err(Error::NonFiniteIterate {
                        agent: j,
                        epoch: t,
                        inner: i,
                    });
                }
            }
            st.x_inner = x;
            Ok(trail)
        })?;

        // phase 2: multi-step consensus
        let weights = self.cursor.epoch_weights(self.schedule, t, self.steps_mode);
        let locals: Vec<Vec<f64>> = states.iter().map(|s| s.x_inner.clone()).collect();
        for (j, st) in states.iter_mut().enumerate() {
            st.v = weights.matrix().mix_row(j, &locals);
        }

        // phase 3: prox
        let reg = problem.reg;
        map_agents(states, self.parallel, |_, st| {
            st.x.copy_from_slice(&st.v);
            reg.prox_in_place(gamma, &mut st.x)
        })?;

        Ok(record_inner.then(|| {
            let trails: Vec<Vec<Vec<f64>>> = inner.into_iter().map(Option::unwrap).collect();
            (0..n)
                .map(|i| {
                    let mut avg = vec![0.0; d];
                    for tr in &trails {
                        vecops::axpy(1.0, &tr[i], &mut avg);
                    }
                    avg.iter_mut().for_each(|v| *v /= trails.len() as f64);
                    avg
                })
                .collect()
        }))
    }

    /// One distributed subgradient epoch: a single mixing step with the matrix
    /// at the cursor, then a full local subgradient step at the mixed point.
    pub fn run_epoch_dgm(&mut self, states: &mut [AgentState], gamma_t: f64, t: usize) -> Result<()> {
        if !(gamma_t > 0.0) {
            return Err(Error::NonPositiveStep(gamma_t));
        }
        let a = self.cursor.single_step(self.schedule);
        let current: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
        for (j, st) in states.iter_mut().enumerate() {
            st.v = a.mix_row(j, &current);
        }
        let problem = self.problem;
        map_agents(states, self.parallel, |j, st| {
            let mut g = problem.reg.subgradient(&st.v);
            for s in &problem.datasets[j].samples {
                s.axpy_into(problem.kind.slope(s.dot(&st.v), s.label), &mut g);
            }
            st.x.copy_from_slice(&st.v);
            vecops::axpy(-gamma_t, &g, &mut st.x);
            st.x_inner.copy_from_slice(&st.x);
            if !vecops::all_finite(&st.x) {
                return Err(Error::NonFiniteIterate {
                    agent: j,
                    epoch: t,
                    inner: 0,
                });
            }
            Ok(())
        })?;
        Ok(())
    }
}

fn snapshot(
    problem: &Problem,
    schedule: &GraphSchedule,
    config: &RunConfig,
    states: &[AgentState],
    epoch: usize,
    x_hat: &[f64],
    forward_dev: Option<f64>,
) -> Result<EpochRecord> {
    let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let x_bar = vecops::mean(&xs);
    let f_hat = problem.objective(x_hat);
    let metrics = EpochMetrics {
        epoch,
        f_bar: problem.objective(&x_bar),
        f_hat,
        subopt: config.optimum.map(|f| f_hat - f),
        consensus: metrics::consensus_quantity(&xs, &schedule.matrices()[0])?,
        max_consensus_dist: metrics::max_consensus_distance(&xs, &x_bar),
        sigma_star_sq: config.sigma_star_sq,
        forward_dev,
    };
    Ok(EpochRecord {
        metrics,
        x_bar,
        x_hat: x_hat.to_vec(),
        agents: config.keep_agent_iterates.then_some(xs),
    })
}

/// Runs `config.epochs` epochs from a common starting point.
pub fn run(config: &RunConfig, problem: &Problem, schedule: &GraphSchedule) -> Result<RunTrace> {
    config.check_step(problem)?;
    let mut engine = Engine::new(problem, schedule, config.steps_mode)?;
    engine.parallel = config.parallel;

    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; problem.dim]);
    if x0.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: x0.len(),
        });
    }
    let mut states: Vec<AgentState> = (0..problem.agents()).map(|_| AgentState::new(x0.clone())).collect();
    let sampling = config
        .algorithm
        .sampling_mode()
        .map(|mode| SamplingSchedule::new(mode, problem.local_len(), config.seed));
    let gamma = config.base_step();
    let every = config.cadence();

    // x_hat before any epoch is taken to be the starting average
    let mut x_hat = x0.clone();
    let mut x_hat_sum = vec![0.0; problem.dim];
    let mut records = vec![snapshot(problem, schedule, config, &states, 0, &x_hat, None)?];

    for t in 0..config.epochs {
        let inner = match &sampling {
            Some(s) => engine.run_epoch_dpg(&mut states, gamma, s, t, config.record_forward_deviation)?,
            None => {
                engine.run_epoch_dgm(&mut states, gamma / ((t + 1) as f64).sqrt(), t)?;
                None
            }
        };
        let epoch = t + 1;
        let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
        let x_bar = vecops::mean(&xs);
        vecops::axpy(1.0, &x_bar, &mut x_hat_sum);
        x_hat = x_hat_sum.iter().map(|v| v / epoch as f64).collect();

        if epoch % every == 0 || epoch == config.epochs {
            let fdev = inner
                .as_deref()
                .map(|avgs| metrics::forward_deviation(avgs, &x_bar))
                .transpose()?;
            records.push(snapshot(problem, schedule, config, &states, epoch, &x_hat, fdev)?);
        }
    }

    Ok(RunTrace {
        algorithm: config.algorithm,
        gamma,
        records,
        final_iterates: states.into_iter().map(|s| s.x).collect(),
        x_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{complete_edges, rotating_ring_slots, MixingMatrix};
    use crate::objectives::{LocalDataset, Sample, SmoothLossKind};
    use crate::proxops::Regularizer;

    fn toy_problem(samples_per_agent: Vec<Vec<Sample>>, reg: Regularizer, kind: SmoothLossKind) -> Problem {
        let dim = samples_per_agent.iter().flatten().map(Sample::min_dim).max().unwrap();
        let ds = samples_per_agent
            .into_iter()
            .enumerate()
            .map(|(agent, samples)| LocalDataset { agent, samples })
            .collect();
        Problem::new(ds, dim, kind, reg).unwrap()
    }

    fn single_schedule(m: usize) -> GraphSchedule {
        GraphSchedule::from_edge_slots(m, &[complete_edges(m)], 0.5 / m as f64, 1).unwrap()
    }

    #[test]
    fn single_agent_single_step() {
        let p = toy_problem(
            vec![vec![Sample::dense(&[1.0], 1.0)]],
            Regularizer::Zero,
            SmoothLossKind::LeastSquares,
        );
        let s = single_schedule(1);
        for alg in [Algorithm::DpgRr, Algorithm::DpgSg, Algorithm::DpgIg] {
            let tr = run(&RunConfig::new(alg, 1, StepRule::Constant(0.5)), &p, &s).unwrap();
            assert_eq!(tr.final_iterates, vec![vec![0.5]]);
        }
        let tr = run(&RunConfig::new(Algorithm::Dgm, 1, StepRule::Diminishing(0.5)), &p, &s).unwrap();
        assert_eq!(tr.final_iterates, vec![vec![0.5]]);
    }

    #[test]
    fn tiny_step_barely_moves() {
        let ds = crate::dataio::synthesize_classification(3, 4, 3, 2.0, 3).unwrap();
        let p = Problem::new(ds, 3, SmoothLossKind::Logistic, Regularizer::l1(0.1)).unwrap();
        let s = single_schedule(3);
        let mut cfg = RunConfig::new(Algorithm::DpgRr, 3, StepRule::Constant(1e-300));
        cfg.x0 = Some(vec![0.5, -0.25, 1.0]);
        let tr = run(&cfg, &p, &s).unwrap();
        for x in &tr.final_iterates {
            assert!(vecops::dist(x, &[0.5, -0.25, 1.0]) < 1e-290);
        }
        assert!(matches!(
            run(&RunConfig::new(Algorithm::DpgRr, 3, StepRule::Constant(0.0)), &p, &s),
            Err(Error::NonPositiveStep(_))
        ));
    }

    #[test]
    fn symmetric_agents_stay_identical() {
        let sample = Sample::dense(&[0.7, -0.2], 1.0);
        let p = toy_problem(
            vec![vec![sample.clone()], vec![sample]],
            Regularizer::l1(0.01),
            SmoothLossKind::Logistic,
        );
        let s = single_schedule(2);
        let mut cfg = RunConfig::new(Algorithm::DpgRr, 30, StepRule::Constant(0.3));
        cfg.keep_agent_iterates = true;
        let tr = run(&cfg, &p, &s).unwrap();
        for r in &tr.records {
            let a = r.agents.as_ref().unwrap();
            assert_eq!(a[0], a[1]);
        }
    }

    #[test]
    fn one_step_complete_graph_is_averaged_sgd() {
        // m = 2, n = 1, zero regularizer, one communication step with weights 1/2
        let s1 = Sample::dense(&[1.0, 0.5], 2.0);
        let s2 = Sample::dense(&[-0.5, 1.0], -1.0);
        let p = toy_problem(
            vec![vec![s1.clone()], vec![s2.clone()]],
            Regularizer::Zero,
            SmoothLossKind::LeastSquares,
        );
        let s = single_schedule(2);
        let gamma = 0.1;
        let mut cfg = RunConfig::new(Algorithm::DpgRr, 4, StepRule::Constant(gamma));
        cfg.steps_mode = StepsMode::Fixed(1);
        cfg.snapshot_every = Some(1);
        let tr = run(&cfg, &p, &s).unwrap();
        let mut x = vec![0.0, 0.0];
        for r in &tr.records[1..] {
            let step = |s: &Sample, x: &[f64]| -> Vec<f64> {
                let r = s.dot(x) - s.label;
                x.iter().zip(s.to_dense(2)).map(|(xi, ai)| xi - gamma * r * ai).collect()
            };
            let a = step(&s1, &x);
            let b = step(&s2, &x);
            x = vec![(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            for (u, v) in x.iter().zip(&r.x_bar) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_mixing_isolates_dgm_agents() {
        let ds = crate::dataio::synthesize_classification(3, 4, 2, 2.0, 9).unwrap();
        let p = Problem::new(ds.clone(), 2, SmoothLossKind::Logistic, Regularizer::Zero).unwrap();
        let ident = GraphSchedule::new(vec![MixingMatrix::identity(3)], 1, 0.5).unwrap();
        let tr = run(&RunConfig::new(Algorithm::Dgm, 5, StepRule::Diminishing(0.2)), &p, &ident).unwrap();
        for (j, local) in ds.into_iter().enumerate() {
            let alone = Problem::new(vec![local], 2, SmoothLossKind::Logistic, Regularizer::Zero).unwrap();
            let one = run(
                &RunConfig::new(Algorithm::Dgm, 5, StepRule::Diminishing(0.2)),
                &alone,
                &single_schedule(1),
            )
            .unwrap();
            assert_eq!(tr.final_iterates[j], one.final_iterates[0]);
        }
    }

    #[test]
    fn trace_invariants_and_determinism() {
        let ds = crate::dataio::synthesize_classification(5, 6, 4, 2.0, 11).unwrap();
        let p = Problem::new(ds, 4, SmoothLossKind::Logistic, Regularizer::l1(0.01)).unwrap();
        let s = GraphSchedule::from_edge_slots(5, &rotating_ring_slots(5), 0.05, 3).unwrap();
        let mut cfg = RunConfig::new(Algorithm::DpgRr, 25, StepRule::Constant(0.2));
        cfg.keep_agent_iterates = true;
        cfg.record_forward_deviation = true;
        cfg.seed = 77;
        let a = run(&cfg, &p, &s).unwrap();
        let b = run(&cfg, &p, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 26);
        for r in &a.records {
            let xs = r.agents.as_ref().unwrap();
            assert_eq!(vecops::mean(xs), r.x_bar);
            assert_eq!(r.metrics.forward_dev.is_some(), r.metrics.epoch > 0);
        }
        // running average over epochs 1..=T
        let manual = vecops::mean(&a.records[1..].iter().map(|r| r.x_bar.clone()).collect::<Vec<_>>());
        for (u, v) in manual.iter().zip(&a.x_hat) {
            assert!((u - v).abs() < 1e-14);
        }
        let mut par = cfg.clone();
        par.parallel = true;
        assert_eq!(run(&par, &p, &s).unwrap(), a);
    }

    #[test]
    fn zero_epochs_only_initial_record() {
        let ds = crate::dataio::synthesize_classification(2, 3, 2, 2.0, 1).unwrap();
        let p = Problem::new(ds, 2, SmoothLossKind::Logistic, Regularizer::Zero).unwrap();
        let tr = run(&RunConfig::new(Algorithm::DpgRr, 0, StepRule::Constant(0.1)), &p, &single_schedule(2)).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.records[0].metrics.epoch, 0);
    }

    #[test]
    fn step_rule_checks() {
        let ds = crate::dataio::synthesize_classification(2, 3, 2, 2.0, 1).unwrap();
        let p = Problem::new(ds, 2, SmoothLossKind::Logistic, Regularizer::Zero).unwrap();
        let bound = theorem_step_bound(p.lipschitz_constant(), p.local_len());
        assert!(RunConfig::new(Algorithm::DpgRr, 10, StepRule::Theorem(bound)).check_step(&p).is_ok());
        let mut over = RunConfig::new(Algorithm::DpgRr, 10, StepRule::Theorem(2.0 * bound));
        assert!(over.check_step(&p).is_err());
        over.enforce_step_bound = false;
        assert!(over.check_step(&p).is_ok());
        assert!(RunConfig::new(Algorithm::Dgm, 10, StepRule::Constant(0.1)).check_step(&p).is_err());
        assert!(RunConfig::new(Algorithm::DpgIg, 10, StepRule::Diminishing(0.1)).check_step(&p).is_err());
    }

    #[test]
    fn cadence_defaults() {
        let c = RunConfig::new(Algorithm::DpgRr, 2000, StepRule::Constant(0.1));
        assert_eq!(c.cadence(), 1);
        let c = RunConfig::new(Algorithm::DpgRr, 5001, StepRule::Constant(0.1));
        assert_eq!(c.cadence(), 3);
    }

    #[test]
    fn non_finite_iterates_are_reported() {
        let p = toy_problem(
            vec![vec![Sample::dense(&[1e200], 1.0)]],
            Regularizer::Zero,
            SmoothLossKind::LeastSquares,
        );
        let mut cfg = RunConfig::new(Algorithm::DpgRr, 5, StepRule::Constant(1e200));
        cfg.x0 = Some(vec![1.0]);
        match run(&cfg, &p, &single_schedule(1)) {
            Err(Error::NonFiniteIterate { agent: 0, epoch: 0, inner: 0 }) => {}
            other => panic!("{other:?}"),
        }
    }
}
