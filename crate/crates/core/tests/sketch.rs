mod common;

use proptest::prelude::*;
use sampled_card_core::{hash_element, hash_u64, HllSketch};

use common::{chi_square_critical, chi_square_uniform, mean, variance};

fn estimate_distinct(n: u64, m: usize, seed: u64) -> f64 {
    let mut sketch = HllSketch::new(m).unwrap();
    for i in 0..n {
        sketch.insert(hash_u64(i, seed));
    }
    sketch.estimate()
}

fn relative_estimates(n: u64, m: usize, runs: u64) -> Vec<f64> {
    (0..runs)
        .map(|seed| estimate_distinct(n, m, seed) / n as f64)
        .collect()
}

#[test]
fn hash_buckets_are_uniform() {
    let mut buckets = [0u64; 256];
    for i in 0..1_000_000u32 {
        let h = hash_element(format!("element-{i}").as_bytes(), 0);
        buckets[(h.0 >> 56) as usize] += 1;
    }
    let stat = chi_square_uniform(&buckets);
    assert!(stat < chi_square_critical(255, 0.001), "chi2 = {stat}");
}

#[test]
fn hash_low_bits_are_uniform() {
    let mut buckets = [0u64; 256];
    for i in 0..1_000_000u64 {
        buckets[(hash_u64(i, 42).0 & 0xff) as usize] += 1;
    }
    let stat = chi_square_uniform(&buckets);
    assert!(stat < chi_square_critical(255, 0.001), "chi2 = {stat}");
}

#[test]
fn hash_is_seed_sensitive() {
    assert_eq!(hash_element(b"a", 0), hash_element(b"a", 0));
    assert_ne!(hash_element(b"a", 0), hash_element(b"a", 1));
}

#[test]
fn ten_percent_accuracy_at_1024() {
    let within = relative_estimates(10_000, 1024, 100)
        .iter()
        .filter(|r| (*r - 1.0).abs() <= 0.10)
        .count();
    assert!(within >= 95, "{within}/100 runs within 10%");
}

#[test]
fn relative_variance_matches_1_08_over_m() {
    for m in [256, 1024] {
        let v = variance(&relative_estimates(10_000, m, 200));
        let ratio = v / (1.08 / m as f64);
        assert!(
            (0.5..=2.0).contains(&ratio),
            "m={m}: variance {v}, ratio {ratio}"
        );
    }
}

#[test]
fn mean_is_close_to_truth_for_200_requested_registers() {
    let m = sampled_card_core::sketch::registers_for(200);
    let mu = mean(&relative_estimates(10_000, m, 200));
    assert!((mu - 1.0).abs() <= 0.03, "mean relative estimate {mu}");
}

#[test]
fn registers_never_decrease() {
    let mut sketch = HllSketch::new(64).unwrap();
    let mut previous = sketch.registers().to_vec();
    for i in 0..5_000u64 {
        sketch.insert(hash_u64(i, 9));
        let now = sketch.registers();
        assert!(now.iter().zip(&previous).all(|(a, b)| a >= b));
        assert!(now.iter().all(|&r| r <= 64));
        previous = now.to_vec();
    }
}

proptest! {
    #[test]
    fn permutation_invariance(mut values in prop::collection::vec(any::<u64>(), 0..400), seed in any::<u64>()) {
        let mut a = HllSketch::new(32).unwrap();
        for &v in &values {
            a.insert(hash_u64(v, seed));
        }
        values.sort_unstable();
        let mut b = HllSketch::new(32).unwrap();
        for &v in values.iter().rev() {
            b.insert(hash_u64(v, seed));
        }
        prop_assert_eq!(a.registers(), b.registers());
    }

    #[test]
    fn duplicate_invariance(values in prop::collection::vec(0u64..50, 1..300)) {
        let mut with_dups = HllSketch::new(16).unwrap();
        for &v in &values {
            with_dups.insert(hash_u64(v, 1));
        }
        let mut distinct = values.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let mut once = HllSketch::new(16).unwrap();
        for &v in &distinct {
            once.insert(hash_u64(v, 1));
        }
        prop_assert_eq!(with_dups.registers(), once.registers());
        prop_assert_eq!(with_dups.estimate(), once.estimate());
    }
}
