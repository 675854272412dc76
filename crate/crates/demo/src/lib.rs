//! Browser front end for the simulator. Every entry point takes and returns
//! JSON strings so the page needs no generated bindings beyond the functions.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use dpgrr_sim::dataio::synthesize_with_decay;
use dpgrr_sim::dpgrr::{self, Algorithm, RunConfig, StepRule};
use dpgrr_sim::netgraph::{complete_edges, consensus_weights_for_epoch, rotating_ring_slots, GraphSchedule, StepsMode};
use dpgrr_sim::objectives::{Problem, SmoothLossKind};
use dpgrr_sim::proxops::Regularizer;
use dpgrr_sim::reference::solve_centralized;
use dpgrr_sim::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One edge per slot along a path.
    Path,
    /// Three slots that together form a ring.
    Ring,
    Complete,
}

fn schedule_for(topology: Topology, m: usize, eta: f64) -> Result<GraphSchedule, Error> {
    let slots = match topology {
        Topology::Path => (0..m.saturating_sub(1)).map(|i| vec![(i, i + 1)]).collect(),
        Topology::Ring => rotating_ring_slots(m),
        Topology::Complete => vec![complete_edges(m)],
    };
    let slots = if slots.is_empty() { vec![vec![]] } else { slots };
    let window = slots.len();
    GraphSchedule::from_edge_slots(m, &slots, eta, window)
}

fn steps_mode(fixed: Option<usize>) -> StepsMode {
    match fixed {
        Some(k) => StepsMode::Fixed(k.max(1)),
        None => StepsMode::Growing,
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub separation: f64,
    pub decay: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub seed: u64,
    pub topology: Topology,
    pub fixed_steps: Option<usize>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            m: 5,
            n: 20,
            d: 10,
            separation: 1.0,
            decay: 0.5,
            lambda: 0.1,
            gamma: 0.05,
            epochs: 200,
            seed: 42,
            topology: Topology::Path,
            fixed_steps: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub algorithm: String,
    pub epoch: Vec<usize>,
    pub subopt: Vec<f64>,
    pub consensus: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub f_star: f64,
    pub curves: Vec<Curve>,
}

/// Runs the three sampling variants and the subgradient baseline on a
/// synthetic problem.
pub fn simulate(params: &SimParams) -> Result<Simulation, Error> {
    let p = params;
    let datasets = synthesize_with_decay(p.m, p.n, p.d, p.separation, p.decay, p.seed)?;
    let reg = Regularizer::l1(p.lambda);
    let problem = Problem::new(datasets, p.d, SmoothLossKind::Logistic, reg)?;
    let schedule = schedule_for(p.topology, p.m, 0.5 / p.m as f64)?;
    let f_star = match solve_centralized(&problem, 1e-9, 200_000) {
        Ok(s) => s.value,
        Err(Error::NoConvergence { best }) => best.value,
        Err(e) => return Err(e),
    };
    let mut curves = Vec::new();
    for alg in [Algorithm::DpgRr, Algorithm::DpgSg, Algorithm::DpgIg, Algorithm::Dgm] {
        let step = if alg == Algorithm::Dgm {
            StepRule::Diminishing(p.gamma)
        } else {
            StepRule::Constant(p.gamma)
        };
        let mut rc = RunConfig::new(alg, p.epochs, step);
        rc.seed = p.seed;
        rc.steps_mode = steps_mode(p.fixed_steps);
        rc.optimum = Some(f_star);
        let trace = dpgrr::run(&rc, &problem, &schedule)?;
        curves.push(Curve {
            algorithm: alg.name().to_string(),
            epoch: trace.records.iter().map(|r| r.metrics.epoch).collect(),
            subopt: trace.records.iter().map(|r| r.metrics.subopt.unwrap_or(f64::NAN)).collect(),
            consensus: trace.records.iter().map(|r| r.metrics.max_consensus_dist).collect(),
        });
    }
    Ok(Simulation { f_star, curves })
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub factors: usize,
    pub weights: Vec<Vec<f64>>,
    pub max_deviation: f64,
}

/// Consensus weights used in epoch `t`.
pub fn consensus_heatmap(
    m: usize,
    topology: Topology,
    epoch: usize,
    fixed_steps: Option<usize>,
) -> Result<Heatmap, Error> {
    let s = schedule_for(topology, m, 0.5 / m as f64)?;
    let mode = steps_mode(fixed_steps);
    let phi = consensus_weights_for_epoch(&s, epoch, mode);
    Ok(Heatmap {
        factors: mode.factors(epoch),
        weights: (0..m).map(|j| (0..m).map(|l| phi.get(j, l)).collect()).collect(),
        max_deviation: phi.max_deviation_from_uniform(),
    })
}

#[derive(Debug, Serialize)]
pub struct ProxCurve {
    pub x: Vec<f64>,
    pub prox: Vec<f64>,
}

/// Scalar prox of `kind` ("l1", "squared_l2" or "zero") on `[-range, range]`.
pub fn prox_curve(kind: &str, lambda: f64, gamma: f64, range: f64, points: usize) -> Result<ProxCurve, Error> {
    let reg = match kind {
        "l1" => Regularizer::l1(lambda),
        "squared_l2" => Regularizer::SquaredL2 { lambda },
        "zero" => Regularizer::Zero,
        other => return Err(Error::Config(format!("unknown regularizer {other}"))),
    };
    reg.validate()?;
    let points = points.max(2);
    let x: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect();
    let prox = x
        .iter()
        .map(|&v| reg.prox(gamma, &[v]).map(|p| p[0]))
        .collect::<Result<_, _>>()?;
    Ok(ProxCurve { x, prox })
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(params_json: &str) -> Result<String, JsError> {
    let params: SimParams = serde_json::from_str(params_json).map_err(|e| JsError::new(&e.to_string()))?;
    if params.m == 0 || params.m > 12 || params.epochs > 5000 || params.n > 200 || params.d > 50 {
        return Err(JsError::new("problem too large for the demo"));
    }
    to_js(simulate(&params))
}

#[wasm_bindgen(js_name = consensusHeatmap)]
pub fn consensus_heatmap_js(m: usize, topology: &str, epoch: usize, fixed_steps: i32) -> Result<String, JsError> {
    let topology: Topology =
        serde_json::from_value(serde_json::Value::String(topology.into())).map_err(|e| JsError::new(&e.to_string()))?;
    if m == 0 || m > 16 || epoch > 200 {
        return Err(JsError::new("m must be in 1..=16 and epoch at most 200"));
    }
    let fixed = usize::try_from(fixed_steps).ok().filter(|&k| k > 0);
    to_js(consensus_heatmap(m, topology, epoch, fixed))
}

#[wasm_bindgen(js_name = proxCurve)]
pub fn prox_curve_js(kind: &str, lambda: f64, gamma: f64) -> Result<String, JsError> {
    to_js(prox_curve(kind, lambda, gamma, 3.0, 121))
}
