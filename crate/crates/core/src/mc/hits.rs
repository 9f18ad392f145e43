use serde::{Deserialize, Serialize};

use super::{move_tracked, run_chunked, BoundFit, MCEstimate};
use crate::error::{Error, Result};
use crate::rule::ShuffleRule;
use crate::stats::Moments;

/// Mean number of left-hand selections of special cards up to each time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitCurve {
    pub times: Vec<u64>,
    pub estimates: Vec<MCEstimate>,
    /// Constant against `k (t/n + ln t)`.
    pub fit: BoundFit,
}

impl HitCurve {
    /// `mean / (k (t/n + ln t))` at each time.
    pub fn ratios(&self, n: usize, k: usize) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.estimates)
            .map(|(&t, e)| e.value / hit_shape(n, k, t))
            .collect()
    }
}

fn hit_shape(n: usize, k: usize, t: u64) -> f64 {
    k as f64 * (t as f64 / n as f64 + (t as f64).ln())
}

/// Counts steps at which the left hand lands on one of the special cards,
/// which start at positions `start`.
pub fn left_hand_hit_count(
    rule: &ShuffleRule,
    start: &[usize],
    times: &[u64],
    trials: u64,
    seed: u64,
) -> Result<HitCurve> {
    let n = rule.n();
    let k = start.len();
    super::validate_positions(n, start)?;
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    if times.is_empty() || times[0] == 0 {
        return Err(Error::param("times must be non-empty and start at 1 or later"));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NonIncreasingTimes(w[1]));
        }
    }
    let t_max = *times.last().unwrap();
    let chunks = run_chunked(trials, seed, |rng, m| {
        let mut moments = vec![Moments::default(); times.len()];
        let mut pos = start.to_vec();
        for _ in 0..m {
            pos.copy_from_slice(start);
            let mut hits = 0u64;
            let mut next = 0;
            for t in 1..=t_max {
                let l = rule.sample_left(t, rng);
                let r = rng.position(n);
                hits += pos.iter().filter(|&&p| p == l).count() as u64;
                move_tracked(&mut pos, l, r);
                if t == times[next] {
                    moments[next].push(hits as f64);
                    next += 1;
                }
            }
        }
        moments
    });
    let mut totals = vec![Moments::default(); times.len()];
    for c in &chunks {
        for (a, b) in totals.iter_mut().zip(c) {
            a.merge(b);
        }
    }
    let estimates: Vec<MCEstimate> = totals
        .iter()
        .map(|m| MCEstimate {
            value: m.mean(),
            std_error: m.std_error(),
            samples: trials,
            seed,
        })
        .collect();
    let shape: Vec<f64> = times.iter().map(|&t| hit_shape(n, k, t)).collect();
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    Ok(HitCurve {
        times: times.to_vec(),
        estimates,
        fit: BoundFit::fit("k*(t/n + ln(t))", &shape, &values),
    })
}
