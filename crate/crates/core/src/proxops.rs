//! Proximal operators for the non-smooth part of the objective.
//!
//! `prox(x) = argmin_z  phi(z) + ||z - x||^2 / (2 gamma)`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

/// Convex non-smooth regularizer with a closed-form prox.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    Zero,
    /// `lambda * ||x||_1`
    L1 { lambda: f64 },
    /// `(lambda / 2) * ||x||^2`
    SquaredL2 { lambda: f64 },
}

impl Regularizer {
    pub fn l1(lambda: f64) -> Self {
        Regularizer::L1 { lambda }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } | Regularizer::SquaredL2 { lambda } => lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weight();
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!(
                "regularizer weight must be finite and >= 0, got {w}"
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::SquaredL2 { lambda } => 0.5 * lambda * vecops::norm_sq(x),
        }
    }

    /// Bound on the norm of any subgradient. For L1 this is `lambda * sqrt(d)`;
    /// the squared-L2 gradient is unbounded globally so the bound holds on the
    /// ball of the given radius.
    pub fn subgradient_bound(&self, d: usize, radius: f64) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * (d as f64).sqrt(),
            Regularizer::SquaredL2 { lambda } => lambda * radius,
        }
    }

    pub fn prox(&self, gamma: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.prox_in_place(gamma, &mut out)?;
        Ok(out)
    }

    pub fn prox_in_place(&self, gamma: f64, x: &mut [f64]) -> Result<()> {
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveStep(gamma));
        }
        match *self {
            Regularizer::Zero => {}
            Regularizer::L1 { lambda } => {
                let thr = gamma * lambda;
                x.iter_mut().for_each(|v| *v = soft_threshold(*v, thr));
            }
            Regularizer::SquaredL2 { lambda } => {
                let s = 1.0 / (1.0 + gamma * lambda);
                x.iter_mut().for_each(|v| *v *= s);
            }
        }
        Ok(())
    }

    /// One element of the subdifferential; 0 is chosen at the L1 kink.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Regularizer::Zero => vec![0.0; x.len()],
            Regularizer::L1 { lambda } => x
                .iter()
                .map(|&v| {
                    if v > 0.0 {
                        lambda
                    } else if v < 0.0 {
                        -lambda
                    } else {
                        0.0
                    }
                })
                .collect(),
            Regularizer::SquaredL2 { lambda } => x.iter().map(|v| lambda * v).collect(),
        }
    }
}

pub fn soft_threshold(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

/// Prox objective `phi(z) + ||z - x||^2 / (2 gamma)`.
pub fn prox_objective(reg: &Regularizer, gamma: f64, x: &[f64], z: &[f64]) -> f64 {
    reg.value(z) + vecops::dist_sq(z, x) / (2.0 * gamma)
}

/// Suboptimality of `candidate` in the prox subproblem at `x`. A candidate with
/// error `eps` belongs to the `eps`-inexact prox set.
pub fn inexact_prox_error(
    reg: &Regularizer,
    gamma: f64,
    x: &[f64],
    candidate: &[f64],
) -> Result<f64> {
    if x.len() != candidate.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: candidate.len(),
        });
    }
    let exact = reg.prox(gamma, x)?;
    let eps = prox_objective(reg, gamma, x, candidate) - prox_objective(reg, gamma, x, &exact);
    if eps < 0.0 && eps > -1e-14 {
        return Ok(0.0);
    }
    Ok(eps.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Minimizer of `lambda |z| + (z - x)^2 / (2 gamma)` by bisection on its
    /// nondecreasing right derivative.
    fn bisect_min(lambda: f64, gamma: f64, x: f64) -> f64 {
        let slope = |z: f64| lambda * if z >= 0.0 { 1.0 } else { -1.0 } + (z - x) / gamma;
        let (mut lo, mut hi) = (-x.abs() - 1.0, x.abs() + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    #[test]
    fn zero_prox_is_identity() {
        let out = Regularizer::Zero.prox(7.0, &[3.0, -1.0]).unwrap();
        assert_eq!(out, vec![3.0, -1.0]);
    }

    #[test]
    fn l1_prox_matches_numeric_minimizer() {
        let x = [2.0, -0.5, 0.0];
        let out = Regularizer::l1(1.0).prox(1.0, &x).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.0]);
        for (xi, oi) in x.iter().zip(&out) {
            let z = bisect_min(1.0, 1.0, *xi);
            assert_abs_diff_eq!(z, oi, epsilon = 1e-8);
        }
    }

    #[test]
    fn l1_prox_at_origin() {
        let out = Regularizer::l1(5e-4).prox(0.3, &[0.0]).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn squared_l2_prox_shrinks() {
        let out = Regularizer::SquaredL2 { lambda: 2.0 }
            .prox(0.5, &[4.0])
            .unwrap();
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_positive_step() {
        assert!(matches!(
            Regularizer::l1(1.0).prox(0.0, &[1.0]),
            Err(Error::NonPositiveStep(_))
        ));
        assert!(matches!(
            inexact_prox_error(&Regularizer::Zero, -1.0, &[1.0], &[1.0]),
            Err(Error::NonPositiveStep(_))
        ));
    }

    #[test]
    fn inexact_error_examples() {
        let e = inexact_prox_error(&Regularizer::Zero, 1.0, &[0.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-15);
        let e = inexact_prox_error(&Regularizer::l1(1.0), 1.0, &[2.0], &[0.9]).unwrap();
        assert_abs_diff_eq!(e, 0.005, epsilon = 1e-12);
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(Regularizer::Zero.subgradient(&[1.0, -2.0]), vec![0.0, 0.0]);
        assert_eq!(
            Regularizer::l1(2.0).subgradient(&[3.0, 0.0, -1.0]),
            vec![2.0, 0.0, -2.0]
        );
        let d = 7;
        let g = Regularizer::l1(1.0).subgradient(&vec![0.0; d]);
        assert_eq!(vecops::norm(&g), 0.0);
        assert_abs_diff_eq!(
            Regularizer::l1(1.0).subgradient_bound(d, 0.0),
            (d as f64).sqrt()
        );
    }

    fn any_reg() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            Just(Regularizer::Zero),
            (0.0..3.0f64).prop_map(|lambda| Regularizer::L1 { lambda }),
            (0.0..3.0f64).prop_map(|lambda| Regularizer::SquaredL2 { lambda }),
        ]
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(
            reg in any_reg(),
            gamma in 1e-3..5.0f64,
            x in prop::collection::vec(-10.0..10.0f64, 4),
            y in prop::collection::vec(-10.0..10.0f64, 4),
        ) {
            let px = reg.prox(gamma, &x).unwrap();
            let py = reg.prox(gamma, &y).unwrap();
            prop_assert!(vecops::dist(&px, &py) <= vecops::dist(&x, &y) + 1e-12);
        }

        #[test]
        fn exact_prox_has_zero_error(
            reg in any_reg(),
            gamma in 1e-3..5.0f64,
            x in prop::collection::vec(-10.0..10.0f64, 5),
        ) {
            let p = reg.prox(gamma, &x).unwrap();
            prop_assert_eq!(inexact_prox_error(&reg, gamma, &x, &p).unwrap(), 0.0);
        }

        #[test]
        fn l1_optimality_inclusion(
            lambda in 0.0..3.0f64,
            gamma in 1e-3..5.0f64,
            x in prop::collection::vec(-10.0..10.0f64, 5),
        ) {
            let p = Regularizer::l1(lambda).prox(gamma, &x).unwrap();
            for (xi, pi) in x.iter().zip(&p) {
                let g = (xi - pi) / gamma;
                if *pi != 0.0 {
                    prop_assert!((g - lambda * pi.signum()).abs() <= 1e-9 * (1.0 + lambda));
                } else {
                    prop_assert!(g.abs() <= lambda + 1e-12);
                }
            }
        }
    }
}
