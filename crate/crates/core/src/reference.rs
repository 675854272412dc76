//! Centralized oracles used to certify distributed runs.
//!
//! Nothing here touches the distributed epoch engine; only the loss and prox
//! primitives are shared.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::objectives::{Problem, Sample, SmoothLossKind};
use crate::proxops::Regularizer;
use crate::sampling::{SamplingMode, SamplingSchedule};
use crate::vecops;

/// Certified approximate minimizer of the composite objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Gradient-mapping norm at `x`.
    pub mapping_norm: f64,
    pub iterations: usize,
}

/// Full-batch proximal gradient with step `1 / (n L)` until the gradient
/// mapping `||(x - prox(x - step * grad f(x))) / step||` falls to `tol`.
///
/// On hitting `max_iters` the best iterate seen is returned inside
/// [`Error::NoConvergence`].
pub fn solve_centralized(problem: &Problem, tol: f64, max_iters: usize) -> Result<ReferenceSolution> {
    solve_centralized_from(problem, &vec![0.0; problem.dim], tol, max_iters)
}

pub fn solve_centralized_from(
    problem: &Problem,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be > 0, got {tol}")));
    }
    if x0.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: x0.len(),
        });
    }
    let lip = problem.local_len() as f64 * problem.lipschitz_constant();
    let step = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    let mut x = x0.to_vec();
    let mut grad = vec![0.0; problem.dim];
    let mut next = vec![0.0; problem.dim];
    let mut best: Option<ReferenceSolution> = None;
    for iter in 0..=max_iters {
        problem.smooth_gradient_into(&x, &mut grad);
        next.copy_from_slice(&x);
        vecops::axpy(-step, &grad, &mut next);
        problem.reg.prox_in_place(step, &mut next)?;
        let mapping_norm = vecops::dist(&x, &next) / step;
        if best.as_ref().is_none_or(|b| mapping_norm < b.mapping_norm) {
            best = Some(ReferenceSolution {
                x: x.clone(),
                value: f64::NAN,
                mapping_norm,
                iterations: iter,
            });
        }
        if mapping_norm <= tol {
            break;
        }
        if iter == max_iters {
            let mut b = best.take().expect("at least one iterate");
            b.value = problem.objective(&b.x);
            return Err(Error::NoConvergence { best: Box::new(b) });
        }
        std::mem::swap(&mut x, &mut next);
    }
    let mut sol = best.expect("at least one iterate");
    sol.value = problem.objective(&sol.x);
    Ok(sol)
}

/// Centralized proximal gradient with random reshuffling: each epoch makes
/// one pass of single-sample gradient steps in a fresh random order, then
/// applies one prox. Returns `x_0, x_1, ..., x_T`.
///
/// Orders come from the RR schedule for agent 0 and `seed`, the same keying a
/// one-agent distributed run uses.
pub fn centralized_prox_rr(
    samples: &[Sample],
    kind: SmoothLossKind,
    reg: &Regularizer,
    gamma: f64,
    epochs: usize,
    seed: u64,
    x0: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let sched = SamplingSchedule::new(SamplingMode::RandomReshuffling, samples.len(), seed);
    centralized_prox_rr_with(samples, kind, reg, gamma, epochs, x0, |t| sched.epoch_indices(0, t))
}

/// As [`centralized_prox_rr`] with caller-supplied per-epoch orders.
pub fn centralized_prox_rr_with(
    samples: &[Sample],
    kind: SmoothLossKind,
    reg: &Regularizer,
    gamma: f64,
    epochs: usize,
    x0: &[f64],
    mut order: impl FnMut(usize) -> Vec<usize>,
) -> Result<Vec<Vec<f64>>> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveStep(gamma));
    }
    let mut x = x0.to_vec();
    let mut trace = Vec::with_capacity(epochs + 1);
    trace.push(x.clone());
    for t in 0..epochs {
        for (inner, i) in order(t).into_iter().enumerate() {
            let s = &samples[i];
            let slope = kind.slope(s.dot(&x), s.label);
            for &(k, v) in &s.features {
                x[k as usize] -= gamma * slope * v;
            }
            if !vecops::all_finite(&x) {
                return Err(Error::NonFiniteIterate {
                    agent: 0,
                    epoch: t,
                    inner,
                });
            }
        }
        reg.prox_in_place(gamma, &mut x)?;
        trace.push(x.clone());
    }
    Ok(trace)
}

/// One stored optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub value: f64,
    pub tol: f64,
    pub mapping_norm: f64,
    pub iterations: usize,
    /// File holding `x*`, one coordinate per line, relative to the store.
    pub x_file: String,
}

/// Plain-text store mapping a problem hash to its certified optimum.
///
/// ```text
/// # key value tol mapping_norm iterations x_file
/// 3f2a... 61.23 1e-10 8.1e-11 5321 3f2a....xstar
/// ```
#[derive(Debug, Clone)]
pub struct FixtureStore {
    path: PathBuf,
    entries: BTreeMap<String, Fixture>,
}

const STORE_HEADER: &str = "# dpgrr optimum fixtures v1\n# key value tol mapping_norm iterations x_file\n";

impl FixtureStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            for (i, line) in fs::read_to_string(&path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let f: Vec<&str> = line.split_whitespace().collect();
                let bad = || Error::Parse {
                    line: i + 1,
                    msg: format!("malformed fixture line in {}", path.display()),
                };
                if f.len() != 6 {
                    return Err(bad());
                }
                entries.insert(
                    f[0].to_string(),
                    Fixture {
                        value: f[1].parse().map_err(|_| bad())?,
                        tol: f[2].parse().map_err(|_| bad())?,
                        mapping_norm: f[3].parse().map_err(|_| bad())?,
                        iterations: f[4].parse().map_err(|_| bad())?,
                        x_file: f[5].to_string(),
                    },
                );
            }
        }
        Ok(FixtureStore { path, entries })
    }

    pub fn get(&self, key: &str) -> Option<&Fixture> {
        self.entries.get(key)
    }

    fn dir(&self) -> &Path {
        self.path.parent().unwrap_or_else(|| Path::new("."))
    }

    pub fn read_x(&self, fixture: &Fixture) -> Result<Vec<f64>> {
        let text = fs::read_to_string(self.dir().join(&fixture.x_file))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad coordinate in {}", fixture.x_file),
                })
            })
            .collect()
    }

    /// Records a solution and rewrites the store and the `x*` file.
    pub fn insert(&mut self, key: &str, tol: f64, sol: &ReferenceSolution) -> Result<()> {
        let x_file = format!("{key}.xstar");
        fs::create_dir_all(self.dir())?;
        let mut xf = fs::File::create(self.dir().join(&x_file))?;
        for v in &sol.x {
            writeln!(xf, "{v:e}")?;
        }
        self.entries.insert(
            key.to_string(),
            Fixture {
                value: sol.value,
                tol,
                mapping_norm: sol.mapping_norm,
                iterations: sol.iterations,
                x_file,
            },
        );
        self.save()
    }

    fn save(&self) -> Result<()> {
        let mut out = String::from(STORE_HEADER);
        for (k, f) in &self.entries {
            out.push_str(&format!(
                "{k} {:e} {:e} {:e} {} {}\n",
                f.value, f.tol, f.mapping_norm, f.iterations, f.x_file
            ));
        }
        fs::write(&self.path, out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::LocalDataset;
    use approx::assert_abs_diff_eq;

    fn toy(label: f64, reg: Regularizer) -> Problem {
        let ds = vec![LocalDataset {
            agent: 0,
            samples: vec![Sample::dense(&[1.0], label)],
        }];
        Problem::new(ds, 1, SmoothLossKind::LeastSquares, reg).unwrap()
    }

    #[test]
    fn exact_fit() {
        let sol = solve_centralized(&toy(3.0, Regularizer::Zero), 1e-12, 1000).unwrap();
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-12);
        assert!(sol.value.abs() < 1e-14);
    }

    #[test]
    fn l1_shifts_optimum() {
        // (x - 2) + sign(x) = 0 -> x = 1, F = 1/2 + 1
        let sol = solve_centralized(&toy(2.0, Regularizer::l1(1.0)), 1e-12, 1000).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.value, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn reports_no_convergence() {
        let ds = crate::dataio::synthesize_classification(2, 5, 3, 2.0, 1).unwrap();
        let p = Problem::new(ds, 3, SmoothLossKind::Logistic, Regularizer::l1(1e-3)).unwrap();
        match solve_centralized(&p, 1e-14, 3) {
            Err(Error::NoConvergence { best }) => {
                assert!(best.value.is_finite());
                assert!(best.iterations <= 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prox_rr_single_step() {
        let s = vec![Sample::dense(&[1.0], 1.0)];
        let tr = centralized_prox_rr(&s, SmoothLossKind::LeastSquares, &Regularizer::Zero, 0.5, 1, 0, &[0.0])
            .unwrap();
        assert_eq!(tr[1], vec![0.5]);
    }

    #[test]
    fn prox_rr_small_step_decreases_quadratic() {
        let samples: Vec<Sample> = (0..6)
            .map(|i| Sample::dense(&[1.0, (i as f64) / 3.0], i as f64 - 2.0))
            .collect();
        let tr = centralized_prox_rr(
            &samples,
            SmoothLossKind::LeastSquares,
            &Regularizer::Zero,
            1e-3,
            50,
            4,
            &[5.0, -5.0],
        )
        .unwrap();
        let f = |x: &[f64]| -> f64 {
            samples
                .iter()
                .map(|s| SmoothLossKind::LeastSquares.value(s.dot(x), s.label))
                .sum()
        };
        for w in tr.windows(2) {
            assert!(f(&w[1]) < f(&w[0]));
        }
    }

    #[test]
    fn fixture_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx").join("optima.txt");
        let mut store = FixtureStore::open(&path).unwrap();
        let sol = ReferenceSolution {
            x: vec![0.1, -3.25e-9, 0.0],
            value: 12.345678901234567,
            mapping_norm: 3e-11,
            iterations: 77,
        };
        store.insert("abc", 1e-10, &sol).unwrap();
        let again = FixtureStore::open(&path).unwrap();
        let fx = again.get("abc").unwrap();
        assert_eq!(fx.value, sol.value);
        assert_eq!(again.read_x(fx).unwrap(), sol.x);
    }
}
