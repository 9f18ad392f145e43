//! Monte Carlo estimators and the coupling constructions behind the one-card
//! and k-card bounds, run as simulations.
//!
//! All simulators split their trials into fixed-size chunks. Chunk `c` draws
//! from stream `c` of the master seed and results are reduced in chunk order,
//! so outputs depend only on the seed and parameters, never on the number of
//! worker threads.

mod coupling;
mod hits;
mod kdeck;
mod lower_bound;
mod plugin;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;

pub use coupling::{couple_one_card, couple_two_hands_random, CouplingRun, HandTally, OneCardStart};
pub use hits::{left_hand_hit_count, HitCurve};
pub use kdeck::{couple_k_decks, KDeckCouplingParams, KDeckRun, Situation, SITUATIONS};
pub use lower_bound::{prob_more_than_fixed, tv_lower_bound_fixed_cards, LowerBoundReport, Selection};
pub use plugin::{mc_tv_plugin, plugin_tv, PluginTv, DEFAULT_TABLE_CAP};

/// Trials per chunk. Fixed so that stream assignment is thread-independent.
pub const CHUNK_TRIALS: u64 = 1024;

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// `|value - target|` in units of the standard error (infinite when the
    /// error is zero and the values differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error
    }
}

/// Smallest constant `c` with `value_i <= c * shape_i` at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub constant: f64,
    pub shape: String,
    /// `c * shape_i - value_i` per point.
    pub residuals: Vec<f64>,
}

impl BoundFit {
    pub fn fit(shape: impl Into<String>, shape_values: &[f64], values: &[f64]) -> Self {
        assert_eq!(shape_values.len(), values.len());
        let constant = shape_values
            .iter()
            .zip(values)
            .map(|(s, v)| v / s)
            .fold(0.0, f64::max)
            // Keeps the binding residual from rounding below zero.
            * (1.0 + 4.0 * f64::EPSILON);
        let residuals = shape_values.iter().zip(values).map(|(s, v)| constant * s - v).collect();
        Self {
            constant,
            shape: shape.into(),
            residuals,
        }
    }

    pub fn certifies(&self) -> bool {
        self.residuals.iter().all(|&r| r >= 0.0)
    }
}

/// Serializable summary of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub op: String,
    pub params: serde_json::Value,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub fitted_constants: BTreeMap<String, f64>,
    pub tallies: serde_json::Value,
}

/// Runs `f(rng, trials_in_chunk)` over consecutive chunks in parallel and
/// returns the per-chunk results in chunk order.
pub(crate) fn run_chunked<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream, u64) -> T + Sync,
{
    run_chunks_from(0, trials, seed, f)
}

/// As [`run_chunked`], with chunk numbering (and so stream ids) starting at
/// `first_chunk`.
pub(crate) fn run_chunks_from<T, F>(first_chunk: u64, trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream, u64) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let m = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut rng = RandomStream::new(seed, first_chunk + c);
            f(&mut rng, m)
        })
        .collect()
}

/// Checks that `positions` are distinct and lie in `1..=n`.
pub(crate) fn validate_positions(n: usize, positions: &[usize]) -> crate::error::Result<()> {
    if positions.is_empty() {
        return Err(crate::error::Error::param("at least one tracked card is required"));
    }
    if positions.len() > n {
        return Err(crate::error::Error::param(format!("k exceeds n ({} > {n})", positions.len())));
    }
    for (i, &p) in positions.iter().enumerate() {
        if p == 0 || p > n {
            return Err(crate::error::Error::param(format!("position {p} outside 1..={n}")));
        }
        if positions[..i].contains(&p) {
            return Err(crate::error::Error::param(format!("position {p} repeated")));
        }
    }
    Ok(())
}

/// Applies the transposition of positions `l` and `r` to tracked positions.
#[inline]
pub(crate) fn move_tracked(positions: &mut [usize], l: usize, r: usize) {
    for p in positions.iter_mut() {
        if *p == l {
            *p = r;
        } else if *p == r {
            *p = l;
        }
    }
}
