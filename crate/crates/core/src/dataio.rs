//! LIBSVM text ingestion, equal-split partitioning across agents, and a
//! seeded synthetic classification generator.
//!
//! ```text
//! +1 1:0.5 3:2      # indices are 1-based in the file, 0-based in memory
//! -1 2:1.25
//! ```

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{LocalDataset, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels must be -1 or +1.
    Classification,
    /// Any finite real target.
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedData {
    pub samples: Vec<Sample>,
    /// Largest feature index seen (1-based), i.e. the inferred dimension.
    pub dim: usize,
}

fn parse_label(tok: &str, line: usize, mode: LabelMode) -> Result<f64> {
    match mode {
        LabelMode::Classification => match tok {
            "+1" | "1" | "1.0" | "+1.0" => Ok(1.0),
            "-1" | "-1.0" => Ok(-1.0),
            _ => Err(Error::Label {
                line,
                label: tok.to_string(),
            }),
        },
        LabelMode::Regression => tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("bad target `{tok}`"),
            }),
    }
}

/// Parses LIBSVM lines. Blank lines and `#` comments are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, mode: LabelMode) -> Result<ParsedData> {
    let mut samples = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let label = parse_label(toks.next().expect("nonempty line"), line_no, mode)?;
        let mut features = Vec::new();
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: u32 = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad feature index `{idx}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("bad feature value `{val}`"),
                })?;
            dim = dim.max(idx as usize);
            features.push((idx - 1, val));
        }
        let sample = Sample::new(features, label);
        if sample.features.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse {
                line: line_no,
                msg: "duplicate feature index".into(),
            });
        }
        samples.push(sample);
    }
    Ok(ParsedData { samples, dim })
}

/// Writes samples back in LIBSVM form with shortest round-trip float formatting.
pub fn write_libsvm<W: Write>(mut w: W, samples: &[Sample]) -> Result<()> {
    for s in samples {
        if s.label == 1.0 {
            write!(w, "+1")?;
        } else {
            write!(w, "{}", s.label)?;
        }
        for &(i, v) in &s.features {
            write!(w, " {}:{}", i + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionStrategy {
    /// Sample `i` goes to agent `i mod m`.
    RoundRobin,
    /// Agent `j` gets the `j`-th block of `n` consecutive samples.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub m: usize,
    pub n: usize,
    pub strategy: PartitionStrategy,
    pub dropped: usize,
}

/// Splits samples into `m` local datasets of exactly `floor(N / m)` samples,
/// optionally after a seeded shuffle. The remainder is dropped and reported.
pub fn partition(
    samples: &[Sample],
    m: usize,
    strategy: PartitionStrategy,
    shuffle_seed: Option<u64>,
) -> Result<(Vec<LocalDataset>, Partition)> {
    if m == 0 {
        return Err(Error::Config("agent count must be >= 1".into()));
    }
    if samples.len() < m {
        return Err(Error::TooFewSamples {
            needed: m,
            found: samples.len(),
        });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let n = samples.len() / m;
    let kept = &order[..m * n];
    let mut datasets: Vec<LocalDataset> = (0..m)
        .map(|agent| LocalDataset {
            agent,
            samples: Vec::with_capacity(n),
        })
        .collect();
    for (pos, &i) in kept.iter().enumerate() {
        let agent = match strategy {
            PartitionStrategy::RoundRobin => pos % m,
            PartitionStrategy::Contiguous => pos / n,
        };
        datasets[agent].samples.push(samples[i].clone());
    }
    let dropped = samples.len() - m * n;
    if dropped > 0 {
        log::warn!("partition dropped {dropped} of {} samples to keep an equal split", samples.len());
    }
    Ok((
        datasets,
        Partition {
            m,
            n,
            strategy,
            dropped,
        },
    ))
}

/// Seeded linearly-generated classification data, `m` agents with `n`
/// samples each in `d` dimensions, isotropic features.
///
/// Features are standard normal scaled by `1/sqrt(d)` and clipped to the unit
/// ball; a hidden weight `w ~ N(0, I)` labels each sample by
/// `sign(<a, w> + noise)` with noise standard deviation `1 / separation`
/// (an infinite separation gives noiseless, linearly separable data).
pub fn synthesize_classification(
    m: usize,
    n: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<LocalDataset>> {
    synthesize_with_decay(m, n, d, separation, 1.0, seed)
}

/// As [`synthesize_classification`] but coordinate `k` has standard deviation
/// proportional to `decay^k`, normalized so `E||a||^2 = 1` before clipping.
/// `decay = 1` is the isotropic case.
pub fn synthesize_with_decay(
    m: usize,
    n: usize,
    d: usize,
    separation: f64,
    decay: f64,
    seed: u64,
) -> Result<Vec<LocalDataset>> {
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(Error::Config(format!("feature decay must be in (0, 1], got {decay}")));
    }
    if m == 0 || n == 0 || d == 0 {
        return Err(Error::Config("synthetic counts must be >= 1".into()));
    }
    if !(separation > 0.0) {
        return Err(Error::Config(format!("separation must be > 0, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let noise_sd = if separation.is_infinite() { 0.0 } else { 1.0 / separation };
    let total: f64 = (0..d).map(|k| decay.powi(2 * k as i32)).sum();
    let scale: Vec<f64> = (0..d).map(|k| decay.powi(k as i32) / total.sqrt()).collect();
    let datasets = (0..m)
        .map(|agent| {
            let samples = (0..n)
                .map(|_| {
                    let mut a: Vec<f64> = scale
                        .iter()
                        .map(|sk| sk * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let norm = crate::vecops::norm(&a);
                    if norm > 1.0 {
                        a.iter_mut().for_each(|v| *v /= norm);
                    }
                    let noise: f64 = rng.sample(StandardNormal);
                    let score = crate::vecops::dot(&a, &w) + noise_sd * noise;
                    Sample::dense(&a, if score >= 0.0 { 1.0 } else { -1.0 })
                })
                .collect();
            LocalDataset { agent, samples }
        })
        .collect();
    Ok(datasets)
}
