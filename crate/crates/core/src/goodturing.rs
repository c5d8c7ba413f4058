//! Good-Turing tallies over a sample and the unseen-mass estimate.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use crate::error::{Error, Result};
use crate::sketch::ElementHash;

/// Element hashes are already uniform, so the table uses them directly.
#[derive(Default, Clone, Copy)]
pub(crate) struct PassThroughHasher(u64);

impl Hasher for PassThroughHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = n;
    }
}

pub(crate) type HashTable<V> = HashMap<ElementHash, V, BuildHasherDefault<PassThroughHasher>>;

const CAP: u32 = 3;

/// Exact `l`, `|E1|` and `|E2|` over a sample.
///
/// By default per-element counts saturate at 3, which is enough to tell
/// singletons and doubletons apart. [`SampleSummary::uncapped`] keeps full
/// multiplicities for the higher Good-Turing frequencies.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    len: u64,
    e1: u64,
    e2: u64,
    capped: bool,
    counts: HashTable<u32>,
}

impl Default for SampleSummary {
    fn default() -> Self {
        Self::new()
    }
}

impl SampleSummary {
    pub fn new() -> Self {
        Self {
            len: 0,
            e1: 0,
            e2: 0,
            capped: true,
            counts: HashTable::default(),
        }
    }

    pub fn uncapped() -> Self {
        Self {
            capped: false,
            ..Self::new()
        }
    }

    pub fn is_capped(&self) -> bool {
        self.capped
    }

    #[inline]
    pub fn offer(&mut self, element: ElementHash) {
        self.len += 1;
        let count = self.counts.entry(element).or_insert(0);
        if self.capped && *count >= CAP {
            return;
        }
        *count += 1;
        match *count {
            1 => self.e1 += 1,
            2 => {
                self.e1 -= 1;
                self.e2 += 1;
            }
            3 => self.e2 -= 1,
            _ => {}
        }
    }

    /// Sample length `l`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `|E1|`.
    pub fn singletons(&self) -> u64 {
        self.e1
    }

    /// `|E2|`.
    pub fn doubletons(&self) -> u64 {
        self.e2
    }

    /// Number of distinct identifiers seen (`n_s`, exactly).
    pub fn distinct(&self) -> u64 {
        self.counts.len() as u64
    }

    /// `|E_i|` for every observed multiplicity `i`, sorted by `i`. In capped
    /// mode the last bucket (3) means "three or more".
    pub fn histogram(&self) -> Vec<(u32, u64)> {
        let mut hist: HashMap<u32, u64> = HashMap::new();
        for &c in self.counts.values() {
            *hist.entry(c).or_insert(0) += 1;
        }
        let mut out: Vec<_> = hist.into_iter().collect();
        out.sort_unstable();
        out
    }

    fn nonempty_len(&self) -> Result<f64> {
        if self.len == 0 {
            Err(Error::EmptySample)
        } else {
            Ok(self.len as f64)
        }
    }

    /// `P0_hat = |E1| / l`.
    pub fn p0_hat(&self) -> Result<f64> {
        Ok(self.e1 as f64 / self.nonempty_len()?)
    }

    /// `P_i_hat = (i + 1) |E_{i+1}| / l`. Indices `i >= 2` need uncapped counts.
    pub fn gt_frequency(&self, i: u32) -> Result<f64> {
        let l = self.nonempty_len()?;
        let next = match i {
            0 => self.e1,
            1 => self.e2,
            _ if self.capped => return Err(Error::CountsCapped(i)),
            _ => self.counts.values().filter(|&&c| c == i + 1).count() as u64,
        };
        Ok(f64::from(i + 1) * next as f64 / l)
    }

    /// Variance of `P0_hat` from the coverage normal limit:
    /// `(1/l) * ((|E1| + 2|E2|)/l - (|E1|/l)^2)`.
    pub fn p0_empirical_variance(&self) -> Result<f64> {
        let l = self.nonempty_len()?;
        let p0 = self.e1 as f64 / l;
        let first_two = (self.e1 + 2 * self.e2) as f64 / l;
        Ok(((first_two - p0 * p0) / l).max(0.0))
    }
}
