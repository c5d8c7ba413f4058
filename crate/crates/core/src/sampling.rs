//! Bernoulli thinning of the raw stream and bottom-u reservoir subsampling of
//! the sampled stream.

use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::goodturing::HashTable;
use crate::sketch::ElementHash;

/// Keeps each offered position independently with probability `rate`.
#[derive(Debug, Clone)]
pub struct BernoulliSampler {
    rate: f64,
    rng: ChaCha8Rng,
    kept: u64,
}

impl BernoulliSampler {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling rate must lie in (0, 1], got {rate}"
            )));
        }
        Ok(Self {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
            kept: 0,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of positions kept so far (`l`).
    pub fn kept(&self) -> u64 {
        self.kept
    }

    /// Draws the keep decision for one position. The element itself does not
    /// influence the decision.
    #[inline]
    pub fn offer(&mut self) -> bool {
        let keep = self.rng.random::<f64>() < self.rate;
        self.kept += keep as u64;
        keep
    }

    /// Thins an iterator lazily.
    pub fn thin<'a, I>(&'a mut self, stream: I) -> impl Iterator<Item = I::Item> + 'a
    where
        I: IntoIterator,
        I::IntoIter: 'a,
    {
        stream.into_iter().filter(move |_| self.offer())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct HeapKey {
    tag: u64,
    position: u64,
    slot: u32,
}

const NO_SLOT: u32 = u32::MAX;
/// Later-occurrence counts saturate here.
pub const LATER_CAP: u8 = 3;

#[derive(Debug, Clone, Copy)]
struct Slot {
    position: u64,
    element: ElementHash,
    /// Occurrences of `element` in the stream after `position`, saturating.
    later: u8,
    /// Next slot holding the same element.
    next: u32,
}

/// Uniform `u`-subset of stream positions, kept as the `u` positions with the
/// smallest random tags. Every position gets its own tag, so repeated
/// occurrences of one element are subsampled independently.
///
/// Each retained position also records how often its element recurs later in
/// the stream. A uniformly chosen occurrence of an element seen `c` times is
/// followed by `0..c` later occurrences with equal probability, so
/// `[later = 0] - [later = 1]` has expectation `|E1| / l` over the full
/// stream and `2[later = 1] - 2[later = 2]` has expectation `2|E2| / l`.
#[derive(Debug, Clone)]
pub struct ReservoirSubsample {
    capacity: usize,
    slots: Vec<Slot>,
    // max-heap on (tag, position): the root is the next entry to evict
    heap: BinaryHeap<HeapKey>,
    // element -> first slot of its chain
    chains: HashTable<u32>,
    rng: ChaCha8Rng,
    offered: u64,
}

impl ReservoirSubsample {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 || capacity >= NO_SLOT as usize {
            return Err(Error::InvalidParameter(format!(
                "reservoir capacity must lie in [1, {NO_SLOT}), got {capacity}"
            )));
        }
        Ok(Self {
            capacity,
            slots: Vec::with_capacity(capacity.min(1 << 20)),
            heap: BinaryHeap::with_capacity(capacity.min(1 << 20)),
            chains: HashTable::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            offered: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Positions offered so far.
    pub fn offered(&self) -> u64 {
        self.offered
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn offer(&mut self, element: ElementHash) {
        if let Some(&head) = self.chains.get(&element) {
            self.bump_chain(element, head);
        }

        let tag: u64 = self.rng.random();
        let position = self.offered;
        self.offered += 1;
        if self.slots.len() < self.capacity {
            let slot = self.slots.len() as u32;
            self.slots.push(Slot {
                position,
                element,
                later: 0,
                next: NO_SLOT,
            });
            self.link(slot);
            self.heap.push(HeapKey {
                tag,
                position,
                slot,
            });
            return;
        }
        let Some(top) = self.heap.peek() else { return };
        // strict comparison on the tag: on a tie the earlier position stays
        if tag >= top.tag {
            return;
        }
        let slot = top.slot;
        self.unlink(slot);
        self.slots[slot as usize] = Slot {
            position,
            element,
            later: 0,
            next: NO_SLOT,
        };
        self.link(slot);
        if let Some(mut top) = self.heap.peek_mut() {
            *top = HeapKey {
                tag,
                position,
                slot,
            };
        }
    }

    /// Counts one more occurrence for every unsaturated slot holding
    /// `element`. Saturated slots leave the chain, so a chain never holds
    /// more than `LATER_CAP` slots.
    fn bump_chain(&mut self, element: ElementHash, head: u32) {
        let mut new_head = NO_SLOT;
        let mut tail = NO_SLOT;
        let mut i = head;
        while i != NO_SLOT {
            let slot = &mut self.slots[i as usize];
            let next = slot.next;
            slot.later += 1;
            if slot.later < LATER_CAP {
                slot.next = NO_SLOT;
                if tail == NO_SLOT {
                    new_head = i;
                } else {
                    self.slots[tail as usize].next = i;
                }
                tail = i;
            } else {
                slot.next = NO_SLOT;
            }
            i = next;
        }
        if new_head == NO_SLOT {
            self.chains.remove(&element);
        } else if new_head != head {
            self.chains.insert(element, new_head);
        }
    }

    fn link(&mut self, slot: u32) {
        let element = self.slots[slot as usize].element;
        let head = self.chains.entry(element).or_insert(NO_SLOT);
        self.slots[slot as usize].next = *head;
        *head = slot;
    }

    fn unlink(&mut self, slot: u32) {
        let Slot {
            element,
            next,
            later,
            ..
        } = self.slots[slot as usize];
        if later >= LATER_CAP {
            return;
        }
        let head = self.chains[&element];
        if head == slot {
            if next == NO_SLOT {
                self.chains.remove(&element);
            } else {
                self.chains.insert(element, next);
            }
            return;
        }
        let mut i = head;
        while self.slots[i as usize].next != slot {
            i = self.slots[i as usize].next;
        }
        self.slots[i as usize].next = next;
    }

    /// Retained `(position, element)` pairs in stream order.
    pub fn entries(&self) -> Vec<(u64, ElementHash)> {
        let mut out: Vec<_> = self.slots.iter().map(|s| (s.position, s.element)).collect();
        out.sort_unstable_by_key(|&(p, _)| p);
        out
    }

    fn multiplicities(&self) -> HashTable<u32> {
        let mut counts = HashTable::default();
        for s in &self.slots {
            *counts.entry(s.element).or_insert(0) += 1;
        }
        counts
    }

    /// `|U1|`: elements occurring exactly once among the retained positions.
    pub fn count_singletons(&self) -> u64 {
        self.multiplicities().values().filter(|&&c| c == 1).count() as u64
    }

    /// `(|U1|, |U2|)`.
    pub fn singletons_and_doubletons(&self) -> (u64, u64) {
        self.multiplicities()
            .values()
            .fold((0, 0), |(one, two), &c| match c {
                1 => (one + 1, two),
                2 => (one, two + 1),
                _ => (one, two),
            })
    }

    /// Retained positions by later-occurrence count `0, 1, 2, >= 3`.
    pub fn later_histogram(&self) -> [u64; LATER_CAP as usize + 1] {
        let mut hist = [0; LATER_CAP as usize + 1];
        for s in &self.slots {
            hist[s.later as usize] += 1;
        }
        hist
    }

    /// `sum_j ([later_j = 0] - [later_j = 1])`. Equals `|E1|` when every
    /// position is retained; otherwise `len() |E1| / l` in expectation.
    pub fn singleton_tally(&self) -> i64 {
        let h = self.later_histogram();
        h[0] as i64 - h[1] as i64
    }

    /// `sum_j (2[later_j = 1] - 2[later_j = 2])`, the analogue for `2|E2|`.
    pub fn doubleton_tally(&self) -> i64 {
        let h = self.later_histogram();
        2 * (h[1] as i64 - h[2] as i64)
    }
}
