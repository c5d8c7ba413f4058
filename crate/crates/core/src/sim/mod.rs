//! Synthetic streams under a per-element frequency model, and multi-trial
//! Monte-Carlo runs of the estimators over them.
//!
//! The raw stream `X` is never materialized: each element's sampled
//! occurrence count is drawn as `Binomial(f_i, P)`, which is exactly the law
//! of Bernoulli thinning, and the resulting positions are shuffled.

pub mod tables;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{unseen_moments, PoissonMode, UnseenMoments};
use crate::error::{Error, Result};
use crate::estimators::{Algorithm, Pipeline, PipelineConfig};
use crate::sketch::{hash_u64, registers_for};

/// Points in the deterministic quantile grid used for analytic moments.
pub const QUANTILE_GRID_POINTS: usize = 10_000;

// Pareto draws beyond this are clamped; reaching it needs U < ~1e-19 at the
// shapes of interest.
const MAX_FREQUENCY: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrequencyModel {
    /// Integer frequencies uniform on `[lo, hi]`.
    Uniform { lo: u64, hi: u64 },
    /// `f = ceil(s U^{-1/alpha})`, so `f >= ceil(s)`.
    Pareto { alpha: f64, scale: f64 },
}

impl FrequencyModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrequencyModel::Uniform { lo, hi } if lo >= 1 && lo <= hi => Ok(()),
            FrequencyModel::Pareto { alpha, scale }
                if alpha > 0.0 && scale > 0.0 && alpha.is_finite() && scale.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "invalid frequency model {self}"
            ))),
        }
    }

    fn pareto_frequency(alpha: f64, scale: f64, tail: f64) -> u64 {
        let f = (scale * tail.powf(-1.0 / alpha)).ceil();
        if f >= MAX_FREQUENCY as f64 {
            MAX_FREQUENCY
        } else {
            f as u64
        }
    }

    /// `n` independent frequencies.
    pub fn draw_frequencies(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            FrequencyModel::Uniform { lo, hi } => {
                (0..n).map(|_| rng.random_range(lo..=hi)).collect()
            }
            FrequencyModel::Pareto { alpha, scale } => (0..n)
                .map(|_| {
                    // 1 - [0, 1) keeps the uniform draw away from zero
                    let tail = 1.0 - rng.random::<f64>();
                    Self::pareto_frequency(alpha, scale, tail)
                })
                .collect(),
        }
    }

    /// Frequencies at the mid-point quantiles `(k + 1/2) / points`.
    pub fn quantile_grid(&self, points: usize) -> Vec<u64> {
        let k = points as f64;
        (0..points)
            .map(|i| {
                let q = (i as f64 + 0.5) / k;
                match *self {
                    FrequencyModel::Uniform { lo, hi } => {
                        let width = (hi - lo + 1) as f64;
                        lo + ((q * width).floor() as u64).min(hi - lo)
                    }
                    FrequencyModel::Pareto { alpha, scale } => {
                        Self::pareto_frequency(alpha, scale, 1.0 - q)
                    }
                }
            })
            .collect()
    }

    /// `E[P0]`, `E[P1]` averaged over the quantile grid; seed-free.
    pub fn moments(&self, rate: f64, mode: PoissonMode) -> UnseenMoments {
        unseen_moments(&self.quantile_grid(QUANTILE_GRID_POINTS), rate, mode)
    }

    /// Mean frequency over the quantile grid.
    pub fn grid_mean(&self) -> f64 {
        let grid = self.quantile_grid(QUANTILE_GRID_POINTS);
        grid.iter().map(|&f| f as f64).sum::<f64>() / grid.len() as f64
    }
}

impl fmt::Display for FrequencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyModel::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            FrequencyModel::Pareto { alpha, scale } => write!(f, "pareto:{alpha}:{scale}"),
        }
    }
}

impl FromStr for FrequencyModel {
    type Err = Error;

    /// Parses `uniform:LO:HI` or `pareto:ALPHA:SCALE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse frequency model {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let model = match parts.as_slice() {
            ["uniform", lo, hi] => FrequencyModel::Uniform {
                lo: lo.parse().map_err(|_| bad())?,
                hi: hi.parse().map_err(|_| bad())?,
            },
            ["pareto", alpha, scale] => FrequencyModel::Pareto {
                alpha: alpha.parse().map_err(|_| bad())?,
                scale: scale.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Per-element sampled occurrence counts, `Binomial(f_i, rate)`.
pub fn sampled_counts(freqs: &[u64], rate: f64, rng: &mut impl Rng) -> Result<Vec<u64>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling rate must lie in (0, 1], got {rate}"
        )));
    }
    if rate == 1.0 {
        return Ok(freqs.to_vec());
    }
    freqs
        .iter()
        .map(|&f| {
            Binomial::new(f, rate)
                .map(|b| b.sample(rng))
                .map_err(|e| Error::InvalidParameter(e.to_string()))
        })
        .collect()
}

/// The sampled stream `Y` as element indices: element `i` occurs
/// `Binomial(f_i, rate)` times. Positions are shuffled unless `shuffle` is
/// false, in which case each element's occurrences are contiguous.
pub fn simulate_sampled_stream(
    freqs: &[u64],
    rate: f64,
    seed: u64,
    shuffle: bool,
) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = sampled_counts(freqs, rate, &mut rng)?;
    let total: u64 = counts.iter().sum();
    let mut stream = Vec::with_capacity(total as usize);
    for (id, &c) in counts.iter().enumerate() {
        stream.extend(std::iter::repeat_n(id as u64, c as usize));
    }
    if shuffle {
        stream.shuffle(&mut rng);
    }
    Ok(stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub model: FrequencyModel,
    pub rate: f64,
    /// Requested sketch size; run at the nearest power of two.
    pub m: usize,
    pub u: usize,
    pub algorithm: Algorithm,
    pub trials: u32,
    pub base_seed: u64,
    pub shuffle: bool,
}

impl TrialConfig {
    pub fn new(n: usize, model: FrequencyModel, rate: f64, algorithm: Algorithm, m: usize) -> Self {
        Self {
            n,
            model,
            rate,
            m,
            u: 0,
            algorithm,
            trials: 200,
            base_seed: 0,
            shuffle: true,
        }
    }

    pub fn with_u(mut self, u: usize) -> Self {
        self.u = u;
        self
    }

    pub fn with_trials(mut self, trials: u32) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_shuffle(mut self, shuffle: bool) -> Self {
        self.shuffle = shuffle;
        self
    }

    pub fn registers(&self) -> usize {
        registers_for(self.m)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n == 0 {
            return Err(Error::InvalidParameter(
                "need n >= 1 and trials >= 1".into(),
            ));
        }
        self.model.validate()?;
        self.pipeline_config(0).validate()
    }

    fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig::new(self.algorithm, self.registers(), self.u, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub n: usize,
    pub trials: u32,
    pub successful: u32,
    pub degenerate_count: u32,
    pub mean_n_hat: f64,
    /// `|mean(n_hat)/n - 1|`.
    pub bias: f64,
    /// Unbiased sample variance of `n_hat / n`; absent with fewer than two
    /// successful trials.
    pub rel_variance: Option<f64>,
    /// `n_hat` of each successful trial, in trial order.
    pub per_trial: Vec<f64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One trial: fresh frequencies, fresh sampled stream, fresh hash and
/// reservoir seeds, all derived from `seed`.
pub fn run_single_trial(config: &TrialConfig, seed: u64) -> Result<f64> {
    let freq_seed = splitmix64(seed);
    let stream_seed = splitmix64(freq_seed);
    let hash_seed = splitmix64(stream_seed);
    let freqs = config.model.draw_frequencies(config.n, freq_seed);
    let stream = simulate_sampled_stream(&freqs, config.rate, stream_seed, config.shuffle)?;
    let mut pipeline = Pipeline::new(&config.pipeline_config(hash_seed))?;
    for &id in &stream {
        pipeline.offer(hash_u64(id, hash_seed));
    }
    pipeline.finish().map(|r| r.n_hat)
}

/// Runs `config.trials` independent trials with seeds `base_seed + t` in
/// parallel and aggregates them in trial order.
pub fn run_trials(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    let outcomes: Vec<Result<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_single_trial(config, config.base_seed.wrapping_add(u64::from(t))))
        .collect();

    let mut per_trial = Vec::with_capacity(outcomes.len());
    let mut degenerate_count = 0;
    for outcome in outcomes {
        match outcome {
            Ok(n_hat) => per_trial.push(n_hat),
            Err(Error::DegenerateSample { .. }) => degenerate_count += 1,
            Err(e) => return Err(e),
        }
    }
    if per_trial.is_empty() {
        return Err(Error::AllTrialsDegenerate(config.trials));
    }

    let n = config.n as f64;
    let k = per_trial.len() as f64;
    let mean_n_hat = per_trial.iter().sum::<f64>() / k;
    let rel_variance = (per_trial.len() >= 2).then(|| {
        let mean = mean_n_hat / n;
        per_trial
            .iter()
            .map(|&x| (x / n - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0)
    });
    Ok(TrialResult {
        n: config.n,
        trials: config.trials,
        successful: per_trial.len() as u32,
        degenerate_count,
        mean_n_hat,
        bias: (mean_n_hat / n - 1.0).abs(),
        rel_variance,
        per_trial,
    })
}
