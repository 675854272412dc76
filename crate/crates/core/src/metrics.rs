//! Measured quantities recorded per epoch.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netgraph::MixingMatrix;
use crate::objectives::Problem;
use crate::vecops;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// `F(x_bar_t)`
    pub f_bar: f64,
    /// `F(x_hat_t)` at the running average of iterates.
    pub f_hat: f64,
    /// `F(x_hat_t) - F*` when the optimum is known.
    pub subopt: Option<f64>,
    /// Consensus quantity `D(x)`.
    pub consensus: f64,
    /// `max_j ||x_j - x_bar||`
    pub max_consensus_dist: f64,
    pub sigma_star_sq: Option<f64>,
    /// Forward per-epoch deviation of the previous epoch, `V_{t-1}`.
    pub forward_dev: Option<f64>,
}

/// `D(x) = sum_i <x_i, sum_j a_ij (x_i - x_j)>`, the Laplacian quadratic form
/// of the agents' estimates. Zero iff all estimates agree (connected support).
pub fn consensus_quantity(xs: &[Vec<f64>], a: &MixingMatrix) -> Result<f64> {
    let m = a.size();
    if xs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: xs.len(),
        });
    }
    let d = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..m {
        let mut acc = vec![0.0; d];
        for j in 0..m {
            let w = a.get(i, j);
            if w != 0.0 && i != j {
                for k in 0..d {
                    acc[k] += w * (xs[i][k] - xs[j][k]);
                }
            }
        }
        total += vecops::dot(&xs[i], &acc);
    }
    Ok(total)
}

/// `max_j ||x_j - mean||`
pub fn max_consensus_distance(xs: &[Vec<f64>], mean: &[f64]) -> f64 {
    xs.iter().map(|x| vecops::dist(x, mean)).fold(0.0, f64::max)
}

/// Shuffling variance at `x_star`: with `g_i = (1/m) sum_j grad f_{j,i}(x_star)`
/// and `g_bar` their mean, returns `(1/n) sum_i ||g_i - g_bar||^2`.
///
/// The agent-averaged loss at index `i` pairs the `i`-th local sample of every
/// agent, so the value is invariant to reordering indices consistently.
pub fn shuffling_variance(problem: &Problem, x_star: &[f64]) -> Result<f64> {
    if x_star.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: x_star.len(),
        });
    }
    let n = problem.local_len();
    let inv_m = 1.0 / problem.agents() as f64;
    let per_index: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut g = vec![0.0; problem.dim];
            for ds in &problem.datasets {
                let s = &ds.samples[i];
                s.axpy_into(inv_m * problem.kind.slope(s.dot(x_star), s.label), &mut g);
            }
            g
        })
        .collect();
    let g_bar = vecops::mean(&per_index);
    Ok(per_index.iter().map(|g| vecops::dist_sq(g, &g_bar)).sum::<f64>() / n as f64)
}

/// `V_t = sum_i ||x_bar_t^i - x_bar_{t+1}||^2` over the recorded inner averages.
pub fn forward_deviation(inner_averages: &[Vec<f64>], next_average: &[f64]) -> Result<f64> {
    if inner_averages.is_empty() {
        return Err(Error::MissingInnerTrace);
    }
    Ok(inner_averages
        .iter()
        .map(|v| vecops::dist_sq(v, next_average))
        .sum())
}
