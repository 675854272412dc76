//! Per-sample smooth losses and the composite finite-sum objective
//! `F(x) = (1/m) sum_j sum_i f_{j,i}(x) + phi(x)`.
//!
//! The scaling is `1/m`, not `1/(mn)`: every agent contributes the plain sum
//! of its `n` local losses. The reference solver and every metric use the same
//! scaling so suboptimality values are comparable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proxops::Regularizer;

/// One training example with sparse features (0-based indices, ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<(u32, f64)>,
    pub label: f64,
}

impl Sample {
    pub fn new(mut features: Vec<(u32, f64)>, label: f64) -> Self {
        features.sort_by_key(|&(i, _)| i);
        Sample { features, label }
    }

    pub fn dense(values: &[f64], label: f64) -> Self {
        let features = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        Sample { features, label }
    }

    /// Smallest dimension that can hold this sample.
    pub fn min_dim(&self) -> usize {
        self.features.last().map_or(0, |&(i, _)| i as usize + 1)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&(i, v)| v * x[i as usize]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.features.iter().map(|&(_, v)| v * v).sum()
    }

    /// `y += alpha * a`
    pub fn axpy_into(&self, alpha: f64, y: &mut [f64]) {
        for &(i, v) in &self.features {
            y[i as usize] += alpha * v;
        }
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        self.axpy_into(1.0, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothLossKind {
    /// `ln(1 + exp(-l <a, x>))`
    Logistic,
    /// `(<a, x> - l)^2 / 2`
    LeastSquares,
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothLossKind {
    /// Loss value and derivative with respect to the margin `<a, x>`.
    #[inline]
    pub fn value_and_slope(self, margin: f64, label: f64) -> (f64, f64) {
        match self {
            SmoothLossKind::Logistic => {
                let z = -label * margin;
                (softplus(z), -label * sigmoid(z))
            }
            SmoothLossKind::LeastSquares => {
                let r = margin - label;
                (0.5 * r * r, r)
            }
        }
    }

    #[inline]
    pub fn slope(self, margin: f64, label: f64) -> f64 {
        match self {
            SmoothLossKind::Logistic => -label * sigmoid(-label * margin),
            SmoothLossKind::LeastSquares => margin - label,
        }
    }

    #[inline]
    pub fn value(self, margin: f64, label: f64) -> f64 {
        self.value_and_slope(margin, label).0
    }
}

fn check_dim(s: &Sample, x: &[f64]) -> Result<()> {
    if s.min_dim() > x.len() {
        return Err(Error::DimensionMismatch {
            expected: s.min_dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Value and dense gradient of a single per-sample loss.
pub fn sample_value_grad(kind: SmoothLossKind, s: &Sample, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(s, x)?;
    let (value, slope) = kind.value_and_slope(s.dot(x), s.label);
    let mut grad = vec![0.0; x.len()];
    s.axpy_into(slope, &mut grad);
    Ok((value, grad))
}

/// The samples held by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDataset {
    pub agent: usize,
    pub samples: Vec<Sample>,
}

impl LocalDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Everything an algorithm needs to evaluate the composite objective.
#[derive(Debug, Clone)]
pub struct Problem {
    pub datasets: Vec<LocalDataset>,
    pub dim: usize,
    pub kind: SmoothLossKind,
    pub reg: Regularizer,
}

impl Problem {
    /// Checks the equal-split structure and feature bounds.
    pub fn new(
        datasets: Vec<LocalDataset>,
        dim: usize,
        kind: SmoothLossKind,
        reg: Regularizer,
    ) -> Result<Self> {
        let n = datasets.first().ok_or(Error::EmptyData)?.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        for ds in &datasets {
            if ds.len() != n {
                return Err(Error::UnequalSplit(n, ds.len()));
            }
            for s in &ds.samples {
                if s.min_dim() > dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: s.min_dim(),
                    });
                }
                if !s.label.is_finite() || s.features.iter().any(|(_, v)| !v.is_finite()) {
                    return Err(Error::Config("sample contains non-finite values".into()));
                }
            }
        }
        reg.validate()?;
        Ok(Problem {
            datasets,
            dim,
            kind,
            reg,
        })
    }

    pub fn agents(&self) -> usize {
        self.datasets.len()
    }

    pub fn local_len(&self) -> usize {
        self.datasets[0].len()
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.datasets.iter().flat_map(|d| d.samples.iter())
    }

    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .datasets
            .iter()
            .map(|ds| {
                ds.samples
                    .iter()
                    .map(|s| self.kind.value(s.dot(x), s.label))
                    .sum::<f64>()
            })
            .sum();
        total / self.agents() as f64
    }

    /// `F(x) = f(x) + phi(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.reg.value(x)
    }

    /// Gradient of the smooth part `f`, written into `out`.
    pub fn smooth_gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let inv_m = 1.0 / self.agents() as f64;
        for s in self.samples() {
            s.axpy_into(inv_m * self.kind.slope(s.dot(x), s.label), out);
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        lipschitz_constant(&self.datasets, self.kind).expect("problem is nonempty")
    }
}

/// `F(x)` for a set of local datasets.
pub fn full_objective(
    datasets: &[LocalDataset],
    reg: &Regularizer,
    kind: SmoothLossKind,
    x: &[f64],
) -> Result<f64> {
    if datasets.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut total = 0.0;
    for ds in datasets {
        for s in &ds.samples {
            check_dim(s, x)?;
            total += kind.value(s.dot(x), s.label);
        }
    }
    Ok(total / datasets.len() as f64 + reg.value(x))
}

/// Per-sample gradient Lipschitz bound `L`.
pub fn lipschitz_constant(datasets: &[LocalDataset], kind: SmoothLossKind) -> Result<f64> {
    let max_sq = datasets
        .iter()
        .flat_map(|d| d.samples.iter())
        .map(Sample::norm_sq)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(Error::EmptyData)?;
    Ok(match kind {
        SmoothLossKind::Logistic => max_sq / 4.0,
        SmoothLossKind::LeastSquares => max_sq,
    })
}

/// Per-sample gradient norm bound `G_f`. Global for logistic; for least squares
/// it holds on the ball `||x|| <= radius`.
pub fn gradient_bound(datasets: &[LocalDataset], kind: SmoothLossKind, radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::Config(format!("radius must be >= 0, got {radius}")));
    }
    datasets
        .iter()
        .flat_map(|d| d.samples.iter())
        .map(|s| {
            let a = s.norm_sq().sqrt();
            match kind {
                SmoothLossKind::Logistic => a,
                SmoothLossKind::LeastSquares => a * (a * radius + s.label.abs()),
            }
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(Error::EmptyData)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(samples: Vec<Sample>) -> Vec<LocalDataset> {
        vec![LocalDataset { agent: 0, samples }]
    }

    #[test]
    fn logistic_at_origin() {
        let s = Sample::dense(&[1.0], 1.0);
        let (v, g) = sample_value_grad(SmoothLossKind::Logistic, &s, &[0.0]).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn logistic_large_margin_does_not_underflow_to_garbage() {
        let s = Sample::dense(&[1.0], 1.0);
        let (v, g) = sample_value_grad(SmoothLossKind::Logistic, &s, &[40.0]).unwrap();
        // ln(1+e) = e - e^2/2 + ..., sigma(-40) = e/(1+e) = e - e^2 + ...
        let e = (-40.0f64).exp();
        let v_ref = e - e * e / 2.0;
        let g_ref = -(e - e * e);
        assert!(((v - v_ref) / v_ref).abs() < 1e-14, "{v} vs {v_ref}");
        assert!(((g[0] - g_ref) / g_ref).abs() < 1e-14);
        let (v, _) = sample_value_grad(SmoothLossKind::Logistic, &s, &[-800.0]).unwrap();
        assert_eq!(v, 800.0);
    }

    #[test]
    fn least_squares_exact_fit() {
        let s = Sample::dense(&[2.0], 4.0);
        let (v, g) = sample_value_grad(SmoothLossKind::LeastSquares, &s, &[2.0]).unwrap();
        assert_eq!((v, g), (0.0, vec![0.0]));
    }

    #[test]
    fn dimension_mismatch() {
        let s = Sample::new(vec![(3, 1.0)], 1.0);
        assert!(matches!(
            sample_value_grad(SmoothLossKind::Logistic, &s, &[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn objective_at_origin_is_n_ln2() {
        let datasets: Vec<_> = (0..3)
            .map(|j| LocalDataset {
                agent: j,
                samples: (0..4)
                    .map(|i| Sample::dense(&[i as f64, 1.0 - j as f64], 1.0))
                    .collect(),
            })
            .collect();
        let f = full_objective(&datasets, &Regularizer::Zero, SmoothLossKind::Logistic, &[0.0, 0.0])
            .unwrap();
        assert_abs_diff_eq!(f, 4.0 * std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn objective_single_sample_with_l1() {
        let ds = single(vec![Sample::dense(&[1.0], 0.0)]);
        let f = full_objective(&ds, &Regularizer::l1(1.0), SmoothLossKind::LeastSquares, &[2.0])
            .unwrap();
        assert_eq!(f, 4.0);
    }

    #[test]
    fn constants() {
        let ds = single(vec![Sample::dense(&[2.0], 1.0)]);
        assert_eq!(lipschitz_constant(&ds, SmoothLossKind::Logistic).unwrap(), 1.0);
        let ds = single(vec![Sample::dense(&[1.0], 0.0), Sample::dense(&[3.0], 0.0)]);
        assert_eq!(lipschitz_constant(&ds, SmoothLossKind::LeastSquares).unwrap(), 9.0);
        let ds = single(vec![Sample::dense(&[3.0, 4.0], 1.0)]);
        assert_eq!(gradient_bound(&ds, SmoothLossKind::Logistic, 0.0).unwrap(), 5.0);
        let ds = single(vec![Sample::dense(&[1.0], 1.0)]);
        assert_eq!(gradient_bound(&ds, SmoothLossKind::LeastSquares, 0.0).unwrap(), 1.0);
        assert!(matches!(
            lipschitz_constant(&[], SmoothLossKind::Logistic),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn problem_rejects_unequal_split() {
        let ds = vec![
            LocalDataset { agent: 0, samples: vec![Sample::dense(&[1.0], 1.0)] },
            LocalDataset { agent: 1, samples: vec![] },
        ];
        assert!(Problem::new(ds, 1, SmoothLossKind::Logistic, Regularizer::Zero).is_err());
    }

    fn kind() -> impl Strategy<Value = SmoothLossKind> {
        prop_oneof![Just(SmoothLossKind::Logistic), Just(SmoothLossKind::LeastSquares)]
    }

    proptest! {
        #[test]
        fn losses_are_convex(
            kind in kind(),
            a in prop::collection::vec(-2.0..2.0f64, 3),
            x in prop::collection::vec(-5.0..5.0f64, 3),
            y in prop::collection::vec(-5.0..5.0f64, 3),
            t in 0.01..0.99f64,
            pos in any::<bool>(),
        ) {
            let s = Sample::dense(&a, if pos { 1.0 } else { -1.0 });
            let f = |z: &[f64]| sample_value_grad(kind, &s, z).unwrap().0;
            let mid: Vec<f64> = x.iter().zip(&y).map(|(p, q)| t * p + (1.0 - t) * q).collect();
            prop_assert!(f(&mid) <= t * f(&x) + (1.0 - t) * f(&y) + 1e-12);
        }

        #[test]
        fn gradients_are_lipschitz(
            kind in kind(),
            a in prop::collection::vec(-2.0..2.0f64, 3),
            x in prop::collection::vec(-5.0..5.0f64, 3),
            y in prop::collection::vec(-5.0..5.0f64, 3),
        ) {
            let s = Sample::dense(&a, 1.0);
            let ds = single(vec![s.clone()]);
            let l = lipschitz_constant(&ds, kind).unwrap();
            let gx = sample_value_grad(kind, &s, &x).unwrap().1;
            let gy = sample_value_grad(kind, &s, &y).unwrap().1;
            prop_assert!(crate::vecops::dist(&gx, &gy) <= l * crate::vecops::dist(&x, &y) + 1e-12);
        }
    }
}
