//! Closed-form unseen/singleton probabilities, asymptotic relative variance
//! of both pipelines, and the sketch/reservoir budget split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic relative efficiency of HyperLogLog, so that `1/ARE = 1.08`.
pub const HLL_ARE: f64 = 1.0 / 1.08;

/// How the per-element probability of `k` sampled occurrences is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoissonMode {
    /// Small-rate limit: `e^{-P f}` and `P f e^{-P f}`.
    #[default]
    Limit,
    /// Binomial at the given rate: `(1-P)^f` and `f P (1-P)^{f-1}`.
    Exact,
}

/// Expected fractions of distinct elements seen zero times and exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnseenMoments {
    pub p0: f64,
    pub p1: f64,
}

/// `E[P0] = (1/n) sum_i e^{-P f_i}`.
pub fn expected_p0(freqs: &[u64], rate: f64) -> f64 {
    unseen_moments(freqs, rate, PoissonMode::Limit).p0
}

/// `E[P1] = (P/n) sum_i f_i e^{-P f_i}`.
pub fn expected_p1(freqs: &[u64], rate: f64) -> f64 {
    unseen_moments(freqs, rate, PoissonMode::Limit).p1
}

pub fn unseen_moments(freqs: &[u64], rate: f64, mode: PoissonMode) -> UnseenMoments {
    assert!(!freqs.is_empty(), "frequency list must be nonempty");
    let (mut p0, mut p1) = (0.0, 0.0);
    match mode {
        PoissonMode::Limit => {
            for &f in freqs {
                let f = f as f64;
                let e = (-rate * f).exp();
                p0 += e;
                p1 += rate * f * e;
            }
        }
        PoissonMode::Exact => {
            let log_keep = (-rate).ln_1p();
            for &f in freqs {
                let f = f as f64;
                p0 += (f * log_keep).exp();
                p1 += f * rate * ((f - 1.0) * log_keep).exp();
            }
        }
    }
    let n = freqs.len() as f64;
    UnseenMoments {
        p0: p0 / n,
        p1: p1 / n,
    }
}

/// `(P0(1-P0) + P1) / (1-P0)^2`: the per-position variance cost of the exact
/// singleton tally.
pub fn exact_tally_cost(p0: f64, p1: f64) -> f64 {
    (p0 * (1.0 - p0) + p1) / ((1.0 - p0) * (1.0 - p0))
}

/// `(2 P0(1-P0) + P1) / (1-P0)^2`: the per-slot variance cost of the
/// reservoir singleton count.
pub fn subsample_cost(p0: f64, p1: f64) -> f64 {
    (2.0 * p0 * (1.0 - p0) + p1) / ((1.0 - p0) * (1.0 - p0))
}

/// Relative variance of the exact-tally pipeline,
/// `(1/l) (P0(1-P0)+P1)/(1-P0)^2 + 1/m`.
pub fn rel_variance_alg1(p0: f64, p1: f64, l: f64, m: f64) -> f64 {
    exact_tally_cost(p0, p1) / l + 1.0 / m
}

/// Relative variance of the subsampled pipeline,
/// `(1/u) (2P0(1-P0)+P1)/(1-P0)^2 + (1/ARE)(1/m)`.
pub fn rel_variance_alg2(p0: f64, p1: f64, u: f64, m: f64, are: f64) -> f64 {
    subsample_cost(p0, p1) / u + 1.0 / (are * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub budget: u64,
    pub m: u64,
    pub u: u64,
    pub predicted_rel_variance: f64,
}

/// Splits `budget` storage units between sketch registers `m` and reservoir
/// slots `u` to minimize [`rel_variance_alg2`].
///
/// The continuous optimum is `u* = B sqrt(C) / (1 + sqrt(C))` with
/// `C = ARE (2P0(1-P0)+P1)/(1-P0)^2`; both integer neighbours are scored and
/// the cheaper wins, ties going to the larger `m`.
pub fn optimal_split(budget: u64, p0: f64, p1: f64, are: f64) -> Result<BudgetSplit> {
    if budget < 2 {
        return Err(Error::InfeasibleBudget(budget));
    }
    if !(0.0..1.0).contains(&p0) || p1 < 0.0 || are <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= p0 < 1, p1 >= 0, are > 0 (got p0={p0}, p1={p1}, are={are})"
        )));
    }
    let b = budget as f64;
    let root = (are * subsample_cost(p0, p1)).sqrt();
    let u_star = b * root / (1.0 + root);
    let score = |u: u64| rel_variance_alg2(p0, p1, u as f64, (budget - u) as f64, are);

    let lo = (u_star.floor() as u64).clamp(1, budget - 1);
    let hi = (u_star.ceil() as u64).clamp(1, budget - 1);
    // smaller u first so an exact tie keeps the larger m
    let u = if score(hi) < score(lo) { hi } else { lo };
    Ok(BudgetSplit {
        budget,
        m: budget - u,
        u,
        predicted_rel_variance: score(u),
    })
}
