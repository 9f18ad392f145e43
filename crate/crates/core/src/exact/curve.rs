use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{KTupleDistribution, LumpedEvolver};
use super::indexer::{KTupleIndexer, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::RandomStream;
use crate::rule::{RuleKind, ShuffleRule};

/// Start sets up to this size are scanned exhaustively for rules without a
/// symmetry reduction. Each start costs a full evolution, so the scan is
/// quadratic in the state count.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 1_000;

/// Random starts added to the structured set when a scan is not exhaustive.
pub const DEFAULT_SAMPLED_STARTS: usize = 48;

/// Tuning knobs shared by the exact-evolution operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOptions {
    pub cap: usize,
    /// Time index of the first step (1 unless phase-shifted).
    pub start_time: u64,
    /// Maximum time for threshold scans; `None` uses [`default_horizon`].
    pub horizon: Option<u64>,
    pub exhaustive_limit: usize,
    pub sampled_starts: usize,
    pub seed: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_STATE_CAP,
            start_time: 1,
            horizon: None,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
            sampled_starts: DEFAULT_SAMPLED_STARTS,
            seed: 0,
        }
    }
}

/// Default scan horizon: `ceil(20 n (ln n + 1))`.
pub fn default_horizon(n: usize) -> u64 {
    let n = n as f64;
    (20.0 * n * (n.ln() + 1.0)).ceil() as u64
}

/// Where the tracked cards start.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// 1-based positions of the tracked cards.
    Tuple(Vec<usize>),
    /// A full deck and the labels of the tracked cards.
    Deck { deck: Permutation, cards: Vec<usize> },
}

impl Start {
    pub fn tuple(&self) -> Vec<usize> {
        match self {
            Start::Tuple(t) => t.clone(),
            Start::Deck { deck, cards } => deck.positions_of(cards),
        }
    }
}

/// How the maximum over starting decks was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extremum {
    /// One given start; no maximisation.
    SingleStart,
    /// The true maximum (symmetry reduction or exhaustive scan).
    Exact,
    /// Maximum over the scanned starts only: a lower bound on the true one.
    ScannedLowerBound,
}

/// Which starting tuples to maximise over.
#[derive(Debug, Clone, PartialEq)]
pub enum StartStrategy {
    /// Symmetry reduction where available, else exhaustive or sampled by size.
    Auto,
    /// Every tuple.
    Exhaustive,
    /// Exactly these tuples.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub rule: RuleKind,
    pub n: usize,
    pub k: usize,
    pub start: String,
    pub start_time: u64,
    pub extremum: Extremum,
    pub starts_scanned: usize,
    pub cap: usize,
    pub version: String,
}

/// Sampled map from time to total-variation distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVCurve {
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

impl TVCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn value_at(&self, t: u64) -> Option<f64> {
        self.times.iter().position(|&s| s == t).map(|i| self.values[i])
    }

    /// CSV with header `t,tv`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }

    /// Parses the `t,tv` CSV layout back into times and values.
    pub fn parse_csv(text: &str) -> Result<(Vec<u64>, Vec<f64>)> {
        let mut lines = text.lines();
        if lines.next() != Some("t,tv") {
            return Err(Error::param("missing `t,tv` header"));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::param(format!("malformed row '{line}'")))?;
            times.push(t.parse().map_err(|_| Error::param(format!("bad time '{t}'")))?);
            values.push(v.parse().map_err(|_| Error::param(format!("bad value '{v}'")))?);
        }
        Ok((times, values))
    }

    /// The JSON metadata sidecar.
    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata serializes")
    }

    /// Flags consecutive sample points where the curve increases by more
    /// than `tol`.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<u64> {
        self.values
            .windows(2)
            .zip(self.times.windows(2))
            .filter(|(v, _)| v[1] > v[0] + tol)
            .map(|(_, t)| t[1])
            .collect()
    }
}

fn check_times(times: &[u64]) -> Result<()> {
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NonIncreasingTimes(w[1]));
        }
    }
    Ok(())
}

fn describe(tuple: &[usize]) -> String {
    let parts: Vec<String> = tuple.iter().map(|p| p.to_string()).collect();
    format!("positions {}", parts.join(","))
}

fn meta(rule: &ShuffleRule, k: usize, start: String, extremum: Extremum, scanned: usize, opts: &ExactOptions) -> CurveMeta {
    CurveMeta {
        rule: rule.kind(),
        n: rule.n(),
        k,
        start,
        start_time: opts.start_time,
        extremum,
        starts_scanned: scanned,
        cap: opts.cap,
        version: crate::VERSION.to_string(),
    }
}

/// Exact TV curve to the uniform k-card marginal from one start.
pub fn exact_tv_curve(rule: &ShuffleRule, start: &Start, times: &[u64], opts: &ExactOptions) -> Result<TVCurve> {
    check_times(times)?;
    let tuple = start.tuple();
    let k = tuple.len();
    let indexer = KTupleIndexer::with_cap(rule.n(), k, opts.cap)?;
    let dist = KTupleDistribution::point_mass(indexer, &tuple)?;
    let mut ev = LumpedEvolver::new(rule.clone(), dist, opts.start_time)?;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        while ev.steps_taken() < t {
            ev.advance()?;
        }
        values.push(ev.tv_to_uniform());
    }
    Ok(TVCurve {
        times: times.to_vec(),
        values,
        meta: meta(rule, k, describe(&tuple), Extremum::SingleStart, 1, opts),
    })
}

/// Starting tuples that realise the maximum over all decks, plus how good
/// that maximum is.
pub fn worst_case_starts(
    rule: &ShuffleRule,
    k: usize,
    strategy: &StartStrategy,
    opts: &ExactOptions,
) -> Result<(Vec<Vec<usize>>, Extremum)> {
    let n = rule.n();
    let indexer = KTupleIndexer::with_cap(n, k, opts.cap)?;
    let all = |ix: &KTupleIndexer| (0..ix.count()).map(|i| ix.decode(i)).collect::<Vec<_>>();
    match strategy {
        StartStrategy::Explicit(list) => {
            for t in list {
                indexer.validate(t)?;
            }
            Ok((list.clone(), Extremum::ScannedLowerBound))
        }
        StartStrategy::Exhaustive => Ok((all(&indexer), Extremum::Exact)),
        StartStrategy::Auto => match rule.kind() {
            // Positions 2..n are interchangeable; a start is characterised by
            // which card (if any) sits on top.
            RuleKind::TopToRandom => {
                let mut reps = Vec::new();
                if k < n {
                    reps.push((2..=k + 1).collect());
                }
                for i in 0..k {
                    let mut t: Vec<usize> = (2..=k).collect();
                    t.insert(i, 1);
                    reps.push(t);
                }
                Ok((reps, Extremum::Exact))
            }
            // Every position is interchangeable.
            RuleKind::RandomToRandom => Ok((vec![(1..=k).collect()], Extremum::Exact)),
            RuleKind::CyclicToRandom | RuleKind::CustomSequence => {
                if indexer.count() <= opts.exhaustive_limit {
                    Ok((all(&indexer), Extremum::Exact))
                } else {
                    Ok((scanned_starts(n, k, opts), Extremum::ScannedLowerBound))
                }
            }
        },
    }
}

/// Structured starts (consecutive blocks at every offset, both orders, and
/// blocks spread evenly around the deck) plus uniformly random tuples.
fn scanned_starts(n: usize, k: usize, opts: &ExactOptions) -> Vec<Vec<usize>> {
    let mut set = BTreeSet::new();
    for s in 0..n {
        let up: Vec<usize> = (0..k).map(|i| (s + i) % n + 1).collect();
        let mut down = up.clone();
        down.reverse();
        let spread: Vec<usize> = (0..k).map(|i| (s + i * n / k) % n + 1).collect();
        set.insert(up);
        set.insert(down);
        if spread.iter().collect::<BTreeSet<_>>().len() == k {
            set.insert(spread);
        }
    }
    let mut rng = RandomStream::new(opts.seed, 0x5ca1);
    let mut added = 0;
    while added < opts.sampled_starts {
        let mut t = Vec::with_capacity(k);
        while t.len() < k {
            let p = rng.position(n);
            if !t.contains(&p) {
                t.push(p);
            }
        }
        if set.insert(t) {
            added += 1;
        }
    }
    set.into_iter().collect()
}

/// Lock-step evolution of several starts, reporting the maximum TV.
pub struct WorstCaseTracker {
    evolvers: Vec<LumpedEvolver>,
    extremum: Extremum,
    steps: u64,
}

impl WorstCaseTracker {
    pub fn new(rule: &ShuffleRule, k: usize, strategy: &StartStrategy, opts: &ExactOptions) -> Result<Self> {
        let (starts, extremum) = worst_case_starts(rule, k, strategy, opts)?;
        let indexer = KTupleIndexer::with_cap(rule.n(), k, opts.cap)?;
        let evolvers = starts
            .iter()
            .map(|t| {
                let d = KTupleDistribution::point_mass(indexer.clone(), t)?;
                LumpedEvolver::new(rule.clone(), d, opts.start_time)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            evolvers,
            extremum,
            steps: 0,
        })
    }

    pub fn extremum(&self) -> Extremum {
        self.extremum
    }

    pub fn starts(&self) -> usize {
        self.evolvers.len()
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn max_tv(&self) -> f64 {
        self.evolvers.iter().map(|e| e.tv_to_uniform()).fold(0.0, f64::max)
    }

    /// TV of each start, in start order.
    pub fn tvs(&self) -> Vec<f64> {
        self.evolvers.iter().map(|e| e.tv_to_uniform()).collect()
    }

    pub fn advance(&mut self) -> Result<()> {
        self.evolvers.par_iter_mut().try_for_each(|e| e.advance())?;
        self.steps += 1;
        Ok(())
    }
}

/// Worst-case (over starting decks) TV curve.
pub fn worst_case_curve(
    rule: &ShuffleRule,
    k: usize,
    times: &[u64],
    strategy: &StartStrategy,
    opts: &ExactOptions,
) -> Result<TVCurve> {
    check_times(times)?;
    let mut tracker = WorstCaseTracker::new(rule, k, strategy, opts)?;
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        while tracker.steps_taken() < t {
            tracker.advance()?;
        }
        values.push(tracker.max_tv());
    }
    let label = match tracker.extremum {
        Extremum::ScannedLowerBound => "max over scanned starts",
        _ => "max over all starts",
    };
    Ok(TVCurve {
        times: times.to_vec(),
        values,
        meta: meta(rule, k, label.to_string(), tracker.extremum, tracker.starts(), opts),
    })
}

/// Result of a partial-mixing-time scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingTime {
    pub t: u64,
    /// Worst-case TV at `t` (below the level).
    pub tv: f64,
    pub extremum: Extremum,
}

/// Smallest `t` whose worst-case k-card TV is below `epsilon`.
///
/// No monotonicity is assumed: the scan stops at the first time the
/// threshold holds.
pub fn partial_mixing_time(
    rule: &ShuffleRule,
    k: usize,
    epsilon: f64,
    strategy: &StartStrategy,
    opts: &ExactOptions,
) -> Result<MixingTime> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("level must lie in (0, 1), got {epsilon}")));
    }
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(rule.n()));
    let mut tracker = WorstCaseTracker::new(rule, k, strategy, opts)?;
    loop {
        let tv = tracker.max_tv();
        if tv < epsilon {
            return Ok(MixingTime {
                t: tracker.steps_taken(),
                tv,
                extremum: tracker.extremum(),
            });
        }
        if tracker.steps_taken() >= horizon {
            return Err(Error::Horizon { horizon, last_value: tv });
        }
        tracker.advance()?;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub alpha: f64,
    pub t: u64,
    pub tv: f64,
    /// `e^{-alpha}`, or `e^{-2 alpha}` for random-to-random.
    pub bound: f64,
}

/// Centre of the cutoff window: `0.5 n ln k` for random-to-random, `n ln k`
/// otherwise.
pub fn cutoff_center(kind: RuleKind, n: usize, k: usize) -> f64 {
    let base = n as f64 * (k as f64).ln();
    match kind {
        RuleKind::RandomToRandom => 0.5 * base,
        _ => base,
    }
}

/// Worst-case TV at times `floor(center + alpha n)`.
pub fn cutoff_profile(
    rule: &ShuffleRule,
    k: usize,
    alphas: &[f64],
    strategy: &StartStrategy,
    opts: &ExactOptions,
) -> Result<Vec<CutoffRow>> {
    let n = rule.n();
    let center = cutoff_center(rule.kind(), n, k);
    let rate = if rule.kind() == RuleKind::RandomToRandom { 2.0 } else { 1.0 };
    let mut times = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let t = (center + a * n as f64).floor();
        if !(t >= 0.0) {
            return Err(Error::param(format!("alpha {a} gives negative time {t}")));
        }
        times.push(t as u64);
    }
    let grid: Vec<u64> = times.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let curve = worst_case_curve(rule, k, &grid, strategy, opts)?;
    Ok(alphas
        .iter()
        .zip(&times)
        .map(|(&alpha, &t)| CutoffRow {
            alpha,
            t,
            tv: curve.value_at(t).expect("time on grid"),
            bound: (-rate * alpha).exp(),
        })
        .collect())
}

/// Measured gap between the worst-case k-card distance and k times the
/// worst-case one-card distance at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackRow {
    pub t: u64,
    pub d_k: f64,
    pub d_1: f64,
    /// `d_k - k * d_1`; positive values are the slack the asymptotic term absorbs.
    pub slack: f64,
}

pub fn reduction_slack(rule: &ShuffleRule, k: usize, times: &[u64], opts: &ExactOptions) -> Result<Vec<SlackRow>> {
    let dk = worst_case_curve(rule, k, times, &StartStrategy::Auto, opts)?;
    let d1 = worst_case_curve(rule, 1, times, &StartStrategy::Auto, opts)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| SlackRow {
            t,
            d_k: dk.values[i],
            d_1: d1.values[i],
            slack: dk.values[i] - k as f64 * d1.values[i],
        })
        .collect())
}
