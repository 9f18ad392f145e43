use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{run_chunked, MCEstimate};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::rule::ShuffleRule;
use crate::stats::{chi_square_uniform, ChiSquareTest};

/// Starting positions of the coupled card in the two decks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneCardStart {
    /// Position in the deck started from an arbitrary arrangement.
    pub sigma: usize,
    /// Position in the other deck; `None` draws it uniformly per trial, as
    /// for a uniformly random starting deck.
    pub pi: Option<usize>,
}

/// Counts of the positions chosen by one hand in one deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandTally {
    pub name: String,
    pub counts: Vec<u64>,
}

impl HandTally {
    fn new(name: &str, n: usize) -> Self {
        Self {
            name: name.to_string(),
            counts: vec![0; n],
        }
    }

    pub fn chi_square(&self) -> ChiSquareTest {
        chi_square_uniform(&self.counts)
    }

    fn merge(&mut self, other: &HandTally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Per-trial coupling times of a two-deck coupling. `None` marks a trial
/// censored at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRun {
    pub n: usize,
    pub trials: u64,
    pub horizon: u64,
    pub seed: u64,
    /// First time the card occupies the same position in both decks.
    pub match_times: Vec<Option<u64>>,
    /// First time the right hand selects the card in the uniformly started
    /// deck, matched or not (one-card coupling only; equal to `match_times`
    /// otherwise).
    pub select_times: Vec<Option<u64>>,
    /// Hand choices in each deck over every simulated step.
    pub tallies: Vec<HandTally>,
    /// Position of the card in each deck at the horizon.
    pub final_positions: Vec<HandTally>,
}

fn survivors(times: &[Option<u64>], t: u64) -> u64 {
    times.iter().filter(|x| x.is_none_or(|s| s > t)).count() as u64
}

impl CouplingRun {
    pub fn censored(&self) -> u64 {
        self.select_times.iter().filter(|x| x.is_none()).count() as u64
    }

    /// Trials whose selection time exceeds `t`.
    pub fn survivors(&self, t: u64) -> u64 {
        survivors(&self.select_times, t)
    }

    /// Trials still unmatched at `t`.
    pub fn unmatched(&self, t: u64) -> u64 {
        survivors(&self.match_times, t)
    }

    /// Empirical `P(T > t)` for the selection time, with its binomial error.
    pub fn survival(&self, t: u64) -> MCEstimate {
        proportion(self.survivors(t), self.trials, self.seed)
    }

    pub fn unmatched_fraction(&self, t: u64) -> MCEstimate {
        proportion(self.unmatched(t), self.trials, self.seed)
    }

    /// Mean selection time, counting censored trials at the horizon.
    pub fn mean_time(&self) -> MCEstimate {
        mean_of(&self.select_times, self.horizon, self.seed)
    }

    pub fn mean_match_time(&self) -> MCEstimate {
        mean_of(&self.match_times, self.horizon, self.seed)
    }

    /// CSV `t,survivors,trials` for the selection time.
    pub fn survival_csv(&self, times: &[u64]) -> String {
        let mut out = String::from("t,survivors,trials\n");
        for &t in times {
            let _ = writeln!(out, "{t},{},{}", self.survivors(t), self.trials);
        }
        out
    }
}

fn proportion(hits: u64, trials: u64, seed: u64) -> MCEstimate {
    let p = hits as f64 / trials as f64;
    MCEstimate {
        value: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        samples: trials,
        seed,
    }
}

fn mean_of(times: &[Option<u64>], horizon: u64, seed: u64) -> MCEstimate {
    let mut m = crate::stats::Moments::default();
    for t in times {
        m.push(t.unwrap_or(horizon) as f64);
    }
    MCEstimate {
        value: m.mean(),
        std_error: m.std_error(),
        samples: times.len() as u64,
        seed,
    }
}

fn check(n: usize, start: &OneCardStart, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    for p in std::iter::once(start.sigma).chain(start.pi) {
        if p == 0 || p > n {
            return Err(Error::param(format!("start position {p} outside 1..={n}")));
        }
    }
    Ok(())
}

#[inline]
fn mv(p: usize, l: usize, r: usize) -> usize {
    if p == l {
        r
    } else if p == r {
        l
    } else {
        p
    }
}

struct ChunkOut {
    matched: Vec<Option<u64>>,
    selected: Vec<Option<u64>>,
    tallies: Vec<HandTally>,
    finals: Vec<HandTally>,
}

fn final_tallies(n: usize) -> Vec<HandTally> {
    vec![HandTally::new("final-sigma", n), HandTally::new("final-pi", n)]
}

fn assemble(n: usize, trials: u64, horizon: u64, seed: u64, chunks: Vec<ChunkOut>, names: &[&str]) -> CouplingRun {
    let mut tallies: Vec<HandTally> = names.iter().map(|s| HandTally::new(s, n)).collect();
    let mut final_positions = final_tallies(n);
    let mut match_times = Vec::with_capacity(trials as usize);
    let mut select_times = Vec::with_capacity(trials as usize);
    for c in chunks {
        match_times.extend(c.matched);
        select_times.extend(c.selected);
        for (a, b) in tallies.iter_mut().zip(&c.tallies) {
            a.merge(b);
        }
        for (a, b) in final_positions.iter_mut().zip(&c.finals) {
            a.merge(b);
        }
    }
    CouplingRun {
        n,
        trials,
        horizon,
        seed,
        match_times,
        select_times,
        tallies,
        final_positions,
    }
}

/// Right-hand coupling of two decks tracking one card.
///
/// Both decks share the left hand. A uniform `R` is used in both decks unless
/// it hits the card in either deck: `R` on the card in the first deck selects
/// the card's position in neither deck (the positions are exchanged), `R` on
/// the card in the second deck selects it in both. Each deck's right hand is
/// uniform, and once the second deck's card is selected the positions agree
/// forever. Every trial runs to the horizon so the hand tallies cover a fixed
/// number of steps.
pub fn couple_one_card(rule: &ShuffleRule, start: OneCardStart, horizon: u64, trials: u64, seed: u64) -> Result<CouplingRun> {
    let n = rule.n();
    check(n, &start, trials)?;
    let chunks = run_chunked(trials, seed, |rng, m| {
        let mut out = ChunkOut {
            matched: Vec::with_capacity(m as usize),
            selected: Vec::with_capacity(m as usize),
            tallies: vec![HandTally::new("right-sigma", n), HandTally::new("right-pi", n)],
            finals: final_tallies(n),
        };
        for _ in 0..m {
            let mut a = start.sigma;
            let mut b = start.pi.unwrap_or_else(|| rng.position(n));
            let mut matched = (a == b).then_some(0);
            let mut selected = None;
            for t in 1..=horizon {
                let l = rule.sample_left(t, rng);
                let r = rng.position(n);
                let (r_sigma, r_pi) = if r == a {
                    (b, a)
                } else if r == b {
                    (a, b)
                } else {
                    (r, r)
                };
                if r == b && selected.is_none() {
                    selected = Some(t);
                }
                out.tallies[0].counts[r_sigma - 1] += 1;
                out.tallies[1].counts[r_pi - 1] += 1;
                a = mv(a, l, r_sigma);
                b = mv(b, l, r_pi);
                if a == b && matched.is_none() {
                    matched = Some(t);
                }
            }
            out.finals[0].counts[a - 1] += 1;
            out.finals[1].counts[b - 1] += 1;
            out.matched.push(matched);
            out.selected.push(selected);
        }
        out
    });
    Ok(assemble(n, trials, horizon, seed, chunks, &["right-sigma", "right-pi"]))
}

/// Two-hand coupling for random-to-random.
///
/// The second deck uses uniform `(L, R)`; the first uses `(phi(L), phi(R))`
/// where `phi` exchanges the card's two positions. The card matches the first
/// time one hand hits it in the second deck while the other hand avoids both
/// positions, which has probability `2(n-2)/n^2` per step.
pub fn couple_two_hands_random(n: usize, start: OneCardStart, horizon: u64, trials: u64, seed: u64) -> Result<CouplingRun> {
    if n < 2 {
        return Err(Error::param("deck needs at least 2 cards"));
    }
    check(n, &start, trials)?;
    let names = ["left-sigma", "right-sigma", "left-pi", "right-pi"];
    let chunks = run_chunked(trials, seed, |rng: &mut RandomStream, m| {
        let mut out = ChunkOut {
            matched: Vec::with_capacity(m as usize),
            selected: Vec::new(),
            tallies: names.iter().map(|s| HandTally::new(s, n)).collect(),
            finals: final_tallies(n),
        };
        for _ in 0..m {
            let mut a = start.sigma;
            let mut b = start.pi.unwrap_or_else(|| rng.position(n));
            let mut matched = (a == b).then_some(0);
            for t in 1..=horizon {
                let l = rng.position(n);
                let r = rng.position(n);
                let phi = |x: usize| {
                    if x == a {
                        b
                    } else if x == b {
                        a
                    } else {
                        x
                    }
                };
                let (ls, rs) = (phi(l), phi(r));
                for (i, x) in [ls, rs, l, r].into_iter().enumerate() {
                    out.tallies[i].counts[x - 1] += 1;
                }
                a = mv(a, ls, rs);
                b = mv(b, l, r);
                if a == b && matched.is_none() {
                    matched = Some(t);
                }
            }
            out.finals[0].counts[a - 1] += 1;
            out.finals[1].counts[b - 1] += 1;
            out.matched.push(matched);
        }
        out.selected = out.matched.clone();
        out
    });
    Ok(assemble(n, trials, horizon, seed, chunks, &names))
}
