use serde::{Deserialize, Serialize};

use super::{run_chunked, MCEstimate};
use crate::error::{Error, Result};
use crate::rule::{RuleKind, ShuffleRule};
use crate::stats::Moments;

/// Which hand counts as selecting a card for the never-selected count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    RightHand,
    EitherHand,
}

impl Selection {
    /// Right hand for top-to-random (the left hand only ever reaches a card
    /// the right hand has already moved), either hand otherwise.
    pub fn for_rule(kind: RuleKind) -> Self {
        match kind {
            RuleKind::TopToRandom => Selection::RightHand,
            _ => Selection::EitherHand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// `|P(fixed > C) - P_uniform(fixed > C)|`.
    pub lower_bound: MCEstimate,
    pub p_statistic: f64,
    pub p_uniform: f64,
    pub selection: Selection,
    /// Mean of X_t, the number of special cards never selected.
    pub x_mean: MCEstimate,
    pub x_variance: f64,
    pub x_variance_se: f64,
    /// Exact `E(X_t)` when it has a closed form for this rule and selection.
    pub x_mean_exact: Option<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(n-m)!/n!`.
fn inv_falling(n: usize, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc / (n - i) as f64)
}

/// Probability that a uniform permutation of `n` fixes more than `c` of `k`
/// given points, by inclusion-exclusion.
pub fn prob_more_than_fixed(n: usize, k: usize, c: usize) -> f64 {
    let exactly = |j: usize| {
        let s: f64 = (0..=k - j)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(k - j, i) * inv_falling(n, j + i)
            })
            .sum();
        binomial(k, j) * s
    };
    ((c + 1)..=k).map(exactly).sum::<f64>().clamp(0.0, 1.0)
}

/// TV lower bound from the event "more than `threshold` special cards sit at
/// their starting positions", together with moments of X_t.
pub fn tv_lower_bound_fixed_cards(
    rule: &ShuffleRule,
    start: &[usize],
    t: u64,
    threshold: usize,
    selection: Selection,
    samples: u64,
    seed: u64,
) -> Result<LowerBoundReport> {
    let n = rule.n();
    let k = start.len();
    super::validate_positions(n, start)?;
    if threshold == 0 {
        return Err(Error::param("threshold must be at least 1"));
    }
    if samples == 0 {
        return Err(Error::param("samples must be at least 1"));
    }
    let chunks = run_chunked(samples, seed, |rng, m| {
        let mut x = Moments::default();
        let mut above = 0u64;
        let mut pos = start.to_vec();
        let mut untouched = vec![true; k];
        for _ in 0..m {
            pos.copy_from_slice(start);
            untouched.iter_mut().for_each(|u| *u = true);
            for s in 1..=t {
                let l = rule.sample_left(s, rng);
                let r = rng.position(n);
                for (p, u) in pos.iter_mut().zip(untouched.iter_mut()) {
                    let hit_r = *p == r;
                    let hit_l = *p == l;
                    if hit_r || (hit_l && selection == Selection::EitherHand) {
                        *u = false;
                    }
                    if hit_l {
                        *p = r;
                    } else if hit_r {
                        *p = l;
                    }
                }
            }
            let fixed = pos.iter().zip(start).filter(|(a, b)| a == b).count();
            above += (fixed > threshold) as u64;
            x.push(untouched.iter().filter(|&&u| u).count() as f64);
        }
        (x, above)
    });
    let mut x = Moments::default();
    let mut above = 0;
    for (m, a) in &chunks {
        x.merge(m);
        above += a;
    }
    let p_stat = above as f64 / samples as f64;
    let p_unif = prob_more_than_fixed(n, k, threshold);
    let q = 1.0 - 1.0 / n as f64;
    let x_mean_exact = match (selection, rule.kind()) {
        (Selection::RightHand, _) => Some(k as f64 * q.powf(t as f64)),
        (Selection::EitherHand, RuleKind::RandomToRandom) => Some(k as f64 * q.powf(2.0 * t as f64)),
        _ => None,
    };
    Ok(LowerBoundReport {
        lower_bound: MCEstimate {
            value: (p_stat - p_unif).abs(),
            std_error: (p_stat * (1.0 - p_stat) / samples as f64).sqrt(),
            samples,
            seed,
        },
        p_statistic: p_stat,
        p_uniform: p_unif,
        selection,
        x_mean: MCEstimate {
            value: x.mean(),
            std_error: x.std_error(),
            samples,
            seed,
        },
        x_variance: x.variance(),
        x_variance_se: x.variance_std_error(),
        x_mean_exact,
    })
}
