//! End-to-end estimation pipelines over a sampled stream `Y`.
//!
//! Each pipeline is single-pass: elements are hashed once, fed to the
//! HyperLogLog sketch, and fed either to an exact singleton tally
//! ([`Algorithm1`]) or to a bottom-u reservoir ([`Algorithm2`]). The
//! corrected estimate is `n_s_hat / (1 - P0_hat)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::goodturing::SampleSummary;
use crate::sampling::ReservoirSubsample;
use crate::sketch::{hash_element, ElementHash, HllSketch};

/// Smallest reservoir accepted by the subsampled pipeline.
pub const MIN_RESERVOIR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Exact singleton count over the whole sample.
    Alg1,
    /// Singleton fraction estimated from a uniform reservoir of positions.
    Alg2,
    /// Sketch estimate of the sample, uncorrected.
    Naive,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Naive => "naive",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            "naive" => Ok(Algorithm::Naive),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub algorithm: Algorithm,
    /// HyperLogLog registers; a power of two.
    pub m: usize,
    /// Reservoir capacity, used by [`Algorithm::Alg2`] only.
    pub u: usize,
    pub hash_seed: u64,
    pub reservoir_seed: u64,
}

impl PipelineConfig {
    pub fn new(algorithm: Algorithm, m: usize, u: usize, seed: u64) -> Self {
        Self {
            algorithm,
            m,
            u,
            hash_seed: seed,
            reservoir_seed: seed ^ 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        HllSketch::new(self.m)?;
        if self.algorithm == Algorithm::Alg2 && self.u < MIN_RESERVOIR {
            return Err(Error::InvalidParameter(format!(
                "reservoir capacity must be at least {MIN_RESERVOIR}, got {}",
                self.u
            )));
        }
        Ok(())
    }
}

/// Storage accounting: sketch registers plus either the sample length `l`
/// (exact tally) or the reservoir capacity `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageUnits {
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub algorithm: Algorithm,
    /// Sketch estimate of the number of distinct elements in the sample.
    pub n_s_hat: f64,
    /// Good-Turing unseen-mass estimate.
    pub p0_hat: f64,
    /// `1 / (1 - p0_hat)`.
    pub correction: f64,
    pub n_hat: f64,
    /// Sample length `l`.
    pub sample_len: u64,
    /// Positions the singleton count was taken over: `l` or `min(u, l)`.
    pub observed: u64,
    /// `|E1|` for the exact tally. For the subsample, the signed tally
    /// `sum_j ([later_j = 0] - [later_j = 1])` over retained positions, whose
    /// expectation is `observed |E1| / l`.
    pub singletons: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_rel_variance: Option<f64>,
    pub storage: StorageUnits,
}

impl EstimateReport {
    fn corrected(
        algorithm: Algorithm,
        n_s_hat: f64,
        sample_len: u64,
        observed: u64,
        singletons: i64,
        storage: StorageUnits,
    ) -> Result<Self> {
        if sample_len == 0 || observed == 0 {
            return Err(Error::EmptySample);
        }
        if singletons >= observed as i64 {
            return Err(Error::DegenerateSample {
                observed,
                singletons: singletons as u64,
            });
        }
        let p0_hat = singletons as f64 / observed as f64;
        let correction = 1.0 / (1.0 - p0_hat);
        Ok(Self {
            algorithm,
            n_s_hat,
            p0_hat,
            correction,
            n_hat: n_s_hat * correction,
            sample_len,
            observed,
            singletons,
            predicted_rel_variance: None,
            storage,
        })
    }
}

/// Sketch plus exact capped-count tally.
#[derive(Debug, Clone)]
pub struct Algorithm1 {
    sketch: HllSketch,
    summary: SampleSummary,
}

impl Algorithm1 {
    pub fn new(m: usize) -> Result<Self> {
        Ok(Self {
            sketch: HllSketch::new(m)?,
            summary: SampleSummary::new(),
        })
    }

    #[inline]
    pub fn offer(&mut self, h: ElementHash) {
        self.sketch.insert(h);
        self.summary.offer(h);
    }

    pub fn sketch(&self) -> &HllSketch {
        &self.sketch
    }

    pub fn summary(&self) -> &SampleSummary {
        &self.summary
    }

    pub fn finish(&self) -> Result<EstimateReport> {
        let l = self.summary.len();
        EstimateReport::corrected(
            Algorithm::Alg1,
            self.sketch.estimate(),
            l,
            l,
            self.summary.singletons() as i64,
            StorageUnits {
                m: self.sketch.m(),
                u: None,
                l: Some(l),
            },
        )
    }
}

/// Sketch plus bottom-u reservoir over sample positions. The unseen mass is
/// estimated from how often each retained position's element recurs later in
/// the sample; see [`ReservoirSubsample`].
#[derive(Debug, Clone)]
pub struct Algorithm2 {
    sketch: HllSketch,
    reservoir: ReservoirSubsample,
}

impl Algorithm2 {
    pub fn new(m: usize, u: usize, reservoir_seed: u64) -> Result<Self> {
        if u < MIN_RESERVOIR {
            return Err(Error::InvalidParameter(format!(
                "reservoir capacity must be at least {MIN_RESERVOIR}, got {u}"
            )));
        }
        Ok(Self {
            sketch: HllSketch::new(m)?,
            reservoir: ReservoirSubsample::new(u, reservoir_seed)?,
        })
    }

    #[inline]
    pub fn offer(&mut self, h: ElementHash) {
        self.sketch.insert(h);
        self.reservoir.offer(h);
    }

    pub fn sketch(&self) -> &HllSketch {
        &self.sketch
    }

    pub fn reservoir(&self) -> &ReservoirSubsample {
        &self.reservoir
    }

    pub fn finish(&self) -> Result<EstimateReport> {
        EstimateReport::corrected(
            Algorithm::Alg2,
            self.sketch.estimate(),
            self.reservoir.offered(),
            self.reservoir.len() as u64,
            self.reservoir.singleton_tally(),
            StorageUnits {
                m: self.sketch.m(),
                u: Some(self.reservoir.capacity()),
                l: None,
            },
        )
    }
}

/// Sketch only; reports the sample cardinality as the stream cardinality.
#[derive(Debug, Clone)]
pub struct NaiveEstimator {
    sketch: HllSketch,
    len: u64,
}

impl NaiveEstimator {
    pub fn new(m: usize) -> Result<Self> {
        Ok(Self {
            sketch: HllSketch::new(m)?,
            len: 0,
        })
    }

    #[inline]
    pub fn offer(&mut self, h: ElementHash) {
        self.sketch.insert(h);
        self.len += 1;
    }

    pub fn finish(&self) -> Result<EstimateReport> {
        if self.len == 0 {
            return Err(Error::EmptySample);
        }
        let n_s_hat = self.sketch.estimate();
        Ok(EstimateReport {
            algorithm: Algorithm::Naive,
            n_s_hat,
            p0_hat: 0.0,
            correction: 1.0,
            n_hat: n_s_hat,
            sample_len: self.len,
            observed: 0,
            singletons: 0,
            predicted_rel_variance: None,
            storage: StorageUnits {
                m: self.sketch.m(),
                u: None,
                l: None,
            },
        })
    }
}

/// Any of the three pipelines behind one streaming interface.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Pipeline {
    Alg1(Algorithm1),
    Alg2(Algorithm2),
    Naive(NaiveEstimator),
}

impl Pipeline {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(match config.algorithm {
            Algorithm::Alg1 => Pipeline::Alg1(Algorithm1::new(config.m)?),
            Algorithm::Alg2 => {
                Pipeline::Alg2(Algorithm2::new(config.m, config.u, config.reservoir_seed)?)
            }
            Algorithm::Naive => Pipeline::Naive(NaiveEstimator::new(config.m)?),
        })
    }

    #[inline]
    pub fn offer(&mut self, h: ElementHash) {
        match self {
            Pipeline::Alg1(p) => p.offer(h),
            Pipeline::Alg2(p) => p.offer(h),
            Pipeline::Naive(p) => p.offer(h),
        }
    }

    pub fn finish(&self) -> Result<EstimateReport> {
        match self {
            Pipeline::Alg1(p) => p.finish(),
            Pipeline::Alg2(p) => p.finish(),
            Pipeline::Naive(p) => p.finish(),
        }
    }

    /// Plug-in Good-Turing estimates `(P0_hat, P1_hat) = (|E1|/l, 2|E2|/l)`,
    /// from the reservoir tallies for the subsampled pipeline. `None` for the
    /// naive pipeline or an empty sample.
    pub fn plugin_moments(&self) -> Option<(f64, f64)> {
        let (ones, twos, observed) = match self {
            Pipeline::Alg1(p) => {
                let s = p.summary();
                (s.singletons() as f64, 2.0 * s.doubletons() as f64, s.len())
            }
            Pipeline::Alg2(p) => {
                let r = p.reservoir();
                (
                    r.singleton_tally() as f64,
                    r.doubleton_tally() as f64,
                    r.len() as u64,
                )
            }
            Pipeline::Naive(_) => return None,
        };
        if observed == 0 {
            return None;
        }
        let l = observed as f64;
        Some((ones / l, twos / l))
    }
}

/// Hashes and feeds a stream of raw elements through the configured pipeline.
pub fn estimate_bytes<I, B>(config: &PipelineConfig, stream: I) -> Result<EstimateReport>
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut pipeline = Pipeline::new(config)?;
    for element in stream {
        pipeline.offer(hash_element(element.as_ref(), config.hash_seed));
    }
    pipeline.finish()
}

pub fn algorithm1<I>(sample: I, m: usize) -> Result<EstimateReport>
where
    I: IntoIterator<Item = ElementHash>,
{
    let mut alg = Algorithm1::new(m)?;
    sample.into_iter().for_each(|h| alg.offer(h));
    alg.finish()
}

pub fn algorithm2<I>(sample: I, m: usize, u: usize, reservoir_seed: u64) -> Result<EstimateReport>
where
    I: IntoIterator<Item = ElementHash>,
{
    let mut alg = Algorithm2::new(m, u, reservoir_seed)?;
    sample.into_iter().for_each(|h| alg.offer(h));
    alg.finish()
}

pub fn naive_estimate<I>(sample: I, m: usize) -> Result<f64>
where
    I: IntoIterator<Item = ElementHash>,
{
    let mut alg = NaiveEstimator::new(m)?;
    sample.into_iter().for_each(|h| alg.offer(h));
    alg.finish().map(|r| r.n_hat)
}
