//! Element hashing and the HyperLogLog sketch.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::error::{Error, Result};

pub const MIN_REGISTERS: usize = 16;
pub const MAX_REGISTERS: usize = 1 << 16;

/// 64-bit hash of a stream element. Equal elements hash equally for a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementHash(pub u64);

/// Hashes an opaque element with seeded XXH64.
#[inline]
pub fn hash_element(element: &[u8], seed: u64) -> ElementHash {
    ElementHash(xxh64(element, seed))
}

/// Hashes a 64-bit identifier through its little-endian bytes, so a `u64`
/// record and the same eight bytes read from a file hash identically.
#[inline]
pub fn hash_u64(value: u64, seed: u64) -> ElementHash {
    hash_element(&value.to_le_bytes(), seed)
}

/// Maps a requested storage size onto the nearest admissible register count:
/// the power of two closest in absolute distance (ties go up), clamped to
/// `[16, 65536]`.
pub fn registers_for(requested: usize) -> usize {
    if requested <= MIN_REGISTERS {
        return MIN_REGISTERS;
    }
    if requested >= MAX_REGISTERS {
        return MAX_REGISTERS;
    }
    let upper = requested.next_power_of_two();
    if upper == requested {
        return upper;
    }
    let lower = upper >> 1;
    if requested - lower < upper - requested {
        lower
    } else {
        upper
    }
}

/// HyperLogLog with `m = 2^p` registers, the original Flajolet et al.
/// estimator and small-range linear counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HllSketch {
    registers: Vec<u8>,
    index_bits: u32,
}

impl HllSketch {
    pub fn new(m: usize) -> Result<Self> {
        if !m.is_power_of_two() || !(MIN_REGISTERS..=MAX_REGISTERS).contains(&m) {
            return Err(Error::InvalidRegisterCount(m));
        }
        Ok(Self {
            registers: vec![0; m],
            index_bits: m.trailing_zeros(),
        })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.registers.len()
    }

    #[inline]
    pub fn index_bits(&self) -> u32 {
        self.index_bits
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    /// Splits a hash into (register index, rank). The index is the top
    /// `p` bits; the rank is one plus the leading zeros of the rest.
    #[inline]
    pub fn locate(&self, h: ElementHash) -> (usize, u8) {
        let p = self.index_bits;
        let index = (h.0 >> (64 - p)) as usize;
        let rest = h.0 << p;
        let rank = rest.leading_zeros().min(64 - p) + 1;
        (index, rank as u8)
    }

    #[inline]
    pub fn insert(&mut self, h: ElementHash) {
        let (index, rank) = self.locate(h);
        let slot = &mut self.registers[index];
        if rank > *slot {
            *slot = rank;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.registers.iter().all(|&r| r == 0)
    }

    fn alpha(m: usize) -> f64 {
        match m {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m as f64),
        }
    }

    /// The harmonic-mean estimate `alpha_m * m^2 / sum 2^-M[j]` before any
    /// range correction.
    pub fn raw_estimate(&self) -> f64 {
        let m = self.m() as f64;
        let sum: f64 = self
            .registers
            .iter()
            .map(|&r| 2f64.powi(-i32::from(r)))
            .sum();
        Self::alpha(self.m()) * m * m / sum
    }

    pub fn estimate(&self) -> f64 {
        let m = self.m() as f64;
        let raw = self.raw_estimate();
        if raw <= 2.5 * m {
            let zeros = self.registers.iter().filter(|&&r| r == 0).count();
            if zeros > 0 {
                return m * (m / zeros as f64).ln();
            }
        }
        raw
    }
}
