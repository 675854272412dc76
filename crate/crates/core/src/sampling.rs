//! Per-agent sample orderings for each epoch.
//!
//! Every sequence is drawn from a ChaCha stream keyed by
//! `(seed, agent, epoch)`, so any epoch can be regenerated without replaying
//! the ones before it and agents can run in any order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Fresh uniform permutation every epoch.
    #[serde(rename = "rr")]
    RandomReshuffling,
    /// One random permutation reused for all epochs.
    #[serde(rename = "ig")]
    Incremental,
    /// `n` independent uniform draws with replacement.
    #[serde(rename = "sg")]
    WithReplacement,
}

const IG_EPOCH_KEY: u64 = u64::MAX;

/// Keyed stream for `(seed, agent, epoch)`.
pub fn keyed_rng(seed: u64, agent: u64, epoch: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&agent.to_le_bytes());
    key[16..24].copy_from_slice(&epoch.to_le_bytes());
    key[24..].copy_from_slice(b"dpgrr-ix");
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSchedule {
    pub mode: SamplingMode,
    pub n: usize,
    pub seed: u64,
}

impl SamplingSchedule {
    pub fn new(mode: SamplingMode, n: usize, seed: u64) -> Self {
        SamplingSchedule { mode, n, seed }
    }

    /// Index sequence of length `n` used by `agent` at epoch `t`.
    pub fn epoch_indices(&self, agent: usize, t: usize) -> Vec<usize> {
        match self.mode {
            SamplingMode::RandomReshuffling => {
                permutation(self.n, &mut keyed_rng(self.seed, agent as u64, t as u64))
            }
            SamplingMode::Incremental => {
                permutation(self.n, &mut keyed_rng(self.seed, agent as u64, IG_EPOCH_KEY))
            }
            SamplingMode::WithReplacement => {
                let mut rng = keyed_rng(self.seed, agent as u64, t as u64);
                (0..self.n).map(|_| rng.random_range(0..self.n)).collect()
            }
        }
    }
}

/// Uniform permutation of `0..n` (Fisher-Yates).
fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// How prefix averages are drawn in [`prefix_average_stats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trials {
    /// All `n!/(n-k)!` ordered prefixes.
    Exhaustive,
    MonteCarlo { trials: usize, seed: u64 },
    /// Exhaustive for `n <= 6`, otherwise Monte Carlo with the given budget.
    Auto { trials: usize, seed: u64 },
}

/// Empirical moments of the average of `k` vectors drawn without replacement,
/// next to the closed-form population quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixStats {
    /// Empirical `E[mean of X_pi1..X_pik]`.
    pub mean: Vec<f64>,
    /// Empirical `E[|| prefix mean - population mean ||^2]`.
    pub mean_sq_dev: f64,
    pub population_mean: Vec<f64>,
    /// `(1/n) sum ||X_i - mean||^2`
    pub population_variance: f64,
    /// `(n - k) / (k (n - 1)) * population_variance`
    pub predicted_sq_dev: f64,
    pub draws: usize,
}

pub fn prefix_average_stats(values: &[Vec<f64>], k: usize, trials: Trials) -> Result<PrefixStats> {
    let n = values.len();
    if n < 2 || k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let d = values[0].len();
    let population_mean = vecops::mean(values);
    let population_variance = values
        .iter()
        .map(|v| vecops::dist_sq(v, &population_mean))
        .sum::<f64>()
        / n as f64;
    let predicted_sq_dev = (n - k) as f64 / (k as f64 * (n - 1) as f64) * population_variance;

    let mut sum_mean = vec![0.0; d];
    let mut sum_dev = 0.0;
    let mut draws = 0usize;
    let mut record = |prefix: &[usize]| {
        let mut avg = vec![0.0; d];
        for &i in prefix {
            vecops::axpy(1.0, &values[i], &mut avg);
        }
        avg.iter_mut().for_each(|a| *a /= k as f64);
        vecops::axpy(1.0, &avg, &mut sum_mean);
        sum_dev += vecops::dist_sq(&avg, &population_mean);
        draws += 1;
    };

    let exhaustive = match trials {
        Trials::Exhaustive => true,
        Trials::MonteCarlo { .. } => false,
        Trials::Auto { .. } => n <= 6,
    };
    if exhaustive {
        let mut used = vec![false; n];
        let mut prefix = Vec::with_capacity(k);
        enumerate_prefixes(n, k, &mut used, &mut prefix, &mut record);
    } else {
        let (count, seed) = match trials {
            Trials::MonteCarlo { trials, seed } | Trials::Auto { trials, seed } => (trials, seed),
            Trials::Exhaustive => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..n).collect();
        for _ in 0..count.max(1) {
            let (head, _) = idx.partial_shuffle(&mut rng, k);
            let prefix = head.to_vec();
            record(&prefix);
        }
    }

    let inv = 1.0 / draws as f64;
    sum_mean.iter_mut().for_each(|v| *v *= inv);
    Ok(PrefixStats {
        mean: sum_mean,
        mean_sq_dev: sum_dev * inv,
        population_mean,
        population_variance,
        predicted_sq_dev,
        draws,
    })
}

fn enumerate_prefixes(
    n: usize,
    k: usize,
    used: &mut [bool],
    prefix: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if prefix.len() == k {
        visit(prefix);
        return;
    }
    for i in 0..n {
        if !used[i] {
            used[i] = true;
            prefix.push(i);
            enumerate_prefixes(n, k, used, prefix, visit);
            prefix.pop();
            used[i] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::HashMap;

    const MODES: [SamplingMode; 3] = [
        SamplingMode::RandomReshuffling,
        SamplingMode::Incremental,
        SamplingMode::WithReplacement,
    ];

    #[test]
    fn single_sample() {
        for mode in MODES {
            let s = SamplingSchedule::new(mode, 1, 9);
            assert_eq!(s.epoch_indices(0, 0), vec![0]);
            assert_eq!(s.epoch_indices(3, 17), vec![0]);
        }
    }

    #[test]
    fn incremental_reuses_permutation() {
        let s = SamplingSchedule::new(SamplingMode::Incremental, 4, 5);
        assert_eq!(s.epoch_indices(2, 0), s.epoch_indices(2, 7));
    }

    #[test]
    fn reshuffling_changes_across_epochs() {
        let s = SamplingSchedule::new(SamplingMode::RandomReshuffling, 20, 5);
        assert_ne!(s.epoch_indices(0, 0), s.epoch_indices(0, 1));
        assert_ne!(s.epoch_indices(0, 0), s.epoch_indices(1, 0));
    }

    #[test]
    fn reshuffling_is_uniform_over_permutations() {
        let s = SamplingSchedule::new(SamplingMode::RandomReshuffling, 5, 1234);
        let epochs = 120_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for t in 0..epochs {
            *counts.entry(s.epoch_indices(0, t)).or_default() += 1;
        }
        assert_eq!(counts.len(), 120);
        let expected = epochs as f64 / 120.0;
        for c in counts.values() {
            assert!((*c as f64 - expected).abs() <= 0.15 * expected, "count {c}");
        }
    }

    #[test]
    fn with_replacement_draws_are_uniform() {
        let s = SamplingSchedule::new(SamplingMode::WithReplacement, 4, 3);
        let mut hist = [0usize; 4];
        for t in 0..5000 {
            for i in s.epoch_indices(1, t) {
                hist[i] += 1;
            }
        }
        for h in hist {
            assert!((h as f64 - 5000.0).abs() < 300.0, "{hist:?}");
        }
    }

    #[test]
    fn full_prefix_has_no_deviation() {
        let xs = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![4.0, 4.0]];
        let st = prefix_average_stats(&xs, 3, Trials::Exhaustive).unwrap();
        assert!(st.mean_sq_dev < 1e-28);
        assert_eq!(st.predicted_sq_dev, 0.0);
        for (a, b) in st.mean.iter().zip(&st.population_mean) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn identical_values_have_no_deviation() {
        let xs = vec![vec![2.5]; 5];
        for k in 1..=5 {
            let st = prefix_average_stats(&xs, k, Trials::Exhaustive).unwrap();
            assert_eq!(st.mean_sq_dev, 0.0);
        }
    }

    #[test]
    fn four_scalars_two_at_a_time() {
        // 12 ordered pairs of {0,1,2,3}; pair averages deviate from 1.5 by
        // 1, 0.5, 0, 0, 0.5, 1 (each unordered pair twice) -> mean square 5/12.
        let xs: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let st = prefix_average_stats(&xs, 2, Trials::Exhaustive).unwrap();
        assert_eq!(st.draws, 12);
        assert_abs_diff_eq!(st.population_variance, 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(st.mean_sq_dev, 5.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.predicted_sq_dev, 5.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn bad_k() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(matches!(prefix_average_stats(&xs, 0, Trials::Exhaustive), Err(Error::BadK { .. })));
        assert!(matches!(prefix_average_stats(&xs, 3, Trials::Exhaustive), Err(Error::BadK { .. })));
    }

    #[test]
    fn monte_carlo_approaches_formula() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![(i * i) as f64, i as f64]).collect();
        let st = prefix_average_stats(&xs, 4, Trials::Auto { trials: 200_000, seed: 1 }).unwrap();
        assert!((st.mean_sq_dev - st.predicted_sq_dev).abs() < 0.02 * st.predicted_sq_dev);
    }

    proptest! {
        #[test]
        fn reshuffling_covers_every_index(seed in any::<u64>(), n in 1usize..60, agent in 0usize..8, t in 0usize..1000) {
            let s = SamplingSchedule::new(SamplingMode::RandomReshuffling, n, seed);
            let mut p = s.epoch_indices(agent, t);
            prop_assert_eq!(&p, &s.epoch_indices(agent, t));
            p.sort_unstable();
            prop_assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
    }
}
