use serde::{Deserialize, Serialize};

use super::coupling::HandTally;
use super::{move_tracked, run_chunked, BoundFit, MCEstimate};
use crate::error::{Error, Result};
use crate::rule::ShuffleRule;
use crate::stats::Moments;

/// Sizes and coin probability of the (k+1)-deck coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KDeckCouplingParams {
    pub n: usize,
    pub k: usize,
    /// `1 / (k/n + (1 - 1/n)^k)`.
    pub coin_p: f64,
    pub horizon: u64,
}

impl KDeckCouplingParams {
    pub fn new(n: usize, k: usize, horizon: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if k >= n {
            return Err(Error::param(format!("k must be below n to leave a non-special card ({k} >= {n})")));
        }
        let (nf, kf) = (n as f64, k as f64);
        let coin_p = 1.0 / (kf / nf + (1.0 - 1.0 / nf).powi(k as i32));
        if !(coin_p > 0.0 && coin_p <= 1.0 + 1e-15) {
            return Err(Error::param(format!("coin probability {coin_p} outside (0, 1]")));
        }
        Ok(Self {
            n,
            k,
            coin_p: coin_p.min(1.0),
            horizon,
        })
    }

    /// The constant `c` for which `coin_p = 1 - c k^2 / n^2`.
    pub fn tail_constant(&self) -> f64 {
        (1.0 - self.coin_p) * (self.n * self.n) as f64 / (self.k * self.k) as f64
    }

    /// True when `k^2 log(horizon)` is not small next to `n`, where the
    /// bound says little.
    pub fn weak_regime(&self) -> bool {
        (self.k * self.k) as f64 * (self.horizon.max(2) as f64).ln() >= self.n as f64
    }

    /// Per-step probability that two or more auxiliary decks select their
    /// own special card: `1 - (1-1/n)^k - (k/n)(1-1/n)^(k-1)`.
    pub fn multi_hit_probability(&self) -> f64 {
        let q = 1.0 - 1.0 / self.n as f64;
        1.0 - q.powi(self.k as i32) - (self.k as f64 / self.n as f64) * q.powi(self.k as i32 - 1)
    }
}

/// Which branch of the construction chose the main deck's right hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Situation {
    /// The left hand is on a special card.
    LeftOnSpecial = 0,
    /// Non-special left hand, coin tails.
    Tails = 1,
    /// Non-special left hand, coin heads, `U` on a special card.
    HeadsSpecial = 2,
    /// Non-special left hand, coin heads, `U` on a non-special card.
    HeadsNonSpecial = 3,
}

pub const SITUATIONS: [Situation; 4] = [
    Situation::LeftOnSpecial,
    Situation::Tails,
    Situation::HeadsSpecial,
    Situation::HeadsNonSpecial,
];

/// Outcome of a (k+1)-deck coupling simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDeckRun {
    pub params: KDeckCouplingParams,
    pub trials: u64,
    pub seed: u64,
    pub diagnostic: bool,
    /// First time some special card sits at different positions in the main
    /// deck and its auxiliary deck.
    pub first_mismatch: Vec<Option<u64>>,
    /// Trials whose first mismatch happened in each situation.
    pub first_cause: [u64; 4],
    /// Steps spent in each situation.
    pub occurrences: [u64; 4],
    /// Steps in each situation whose draws can produce a mismatch.
    pub triggers: [u64; 4],
    /// Per-trial mean and spread of the trigger counts.
    pub trigger_moments: [Moments; 4],
    /// Mismatches at steps with no trigger; zero when the trigger
    /// conditions are complete.
    pub unexplained: u64,
    /// Main-deck right-hand positions on steps that start matched.
    pub main_right: HandTally,
    /// Right-hand positions of the first auxiliary deck over all steps.
    pub aux_right: HandTally,
    /// Main-deck right-hand hits on the probe card, over matched steps.
    pub probe_hits: u64,
    pub probe_steps: u64,
    /// First time the first auxiliary deck selects its special card with
    /// the right hand.
    pub aux_select_times: Vec<Option<u64>>,
}

impl KDeckRun {
    /// Empirical probability that the coupling has failed by time `t`.
    pub fn failure_probability(&self, t: u64) -> MCEstimate {
        let fails = self
            .first_mismatch
            .iter()
            .filter(|m| m.is_some_and(|s| s <= t))
            .count();
        let p = fails as f64 / self.trials as f64;
        MCEstimate {
            value: p,
            std_error: (p * (1.0 - p) / self.trials as f64).sqrt(),
            samples: self.trials,
            seed: self.seed,
        }
    }

    /// Fits `P(fail by t) <= c (t k^2/n^2 + k^2 log t / n)` over `times`.
    pub fn bound_fit(&self, times: &[u64]) -> BoundFit {
        let (n, k) = (self.params.n as f64, self.params.k as f64);
        let shape: Vec<f64> = times
            .iter()
            .map(|&t| t as f64 * k * k / (n * n) + k * k * (t as f64).ln() / n)
            .collect();
        let values: Vec<f64> = times.iter().map(|&t| self.failure_probability(t).value).collect();
        BoundFit::fit("t*k^2/n^2 + k^2*ln(t)/n", &shape, &values)
    }

    /// Rate at which the main deck's right hand lands on the probe card.
    pub fn probe_rate(&self) -> MCEstimate {
        let p = self.probe_hits as f64 / self.probe_steps as f64;
        MCEstimate {
            value: p,
            std_error: (p * (1.0 - p) / self.probe_steps as f64).sqrt(),
            samples: self.probe_steps,
            seed: self.seed,
        }
    }

    /// Mean number of trigger steps per trial in a situation.
    pub fn trigger_mean(&self, s: Situation) -> MCEstimate {
        let m = &self.trigger_moments[s as usize];
        MCEstimate {
            value: m.mean(),
            std_error: m.std_error(),
            samples: self.trials,
            seed: self.seed,
        }
    }

    /// Empirical `P(T > t)` for the first auxiliary deck's selection time.
    pub fn aux_survival(&self, t: u64) -> MCEstimate {
        let s = self.aux_select_times.iter().filter(|x| x.is_none_or(|v| v > t)).count();
        let p = s as f64 / self.trials as f64;
        MCEstimate {
            value: p,
            std_error: (p * (1.0 - p) / self.trials as f64).sqrt(),
            samples: self.trials,
            seed: self.seed,
        }
    }
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
    first_mismatch: Vec<Option<u64>>,
    aux_select: Vec<Option<u64>>,
    first_cause: [u64; 4],
    occurrences: [u64; 4],
    triggers: [u64; 4],
    trigger_moments: [Moments; 4],
    unexplained: u64,
    main_right: Vec<u64>,
    aux_right: Vec<u64>,
    probe_hits: u64,
    probe_steps: u64,
}

/// Simulates the main deck and k independent auxiliary decks under the
/// coupling that keeps each special card `c_i` at the same position in the
/// main deck and in auxiliary deck `i`.
///
/// All decks share the left hand `L`. Auxiliary right hands `R^i` are
/// independent and uniform. The main right hand `R^0` is:
/// - `R^i` if `L` is on special card `c_i` in the main deck;
/// - otherwise, with probability `1 - coin_p`, a uniform choice among the
///   main deck's special positions;
/// - otherwise draw `U` uniform: `R^i` if `U` is on `c_i`; `U` if no
///   auxiliary deck selects its special card; else `R^i` for a uniform `i`
///   among those that do.
///
/// `specials` are the starting positions of `c_1..c_k` (shared by all decks)
/// and `probe` the starting position of a non-special card followed in the
/// main deck. Trials stop at the first mismatch unless `diagnostic` is set,
/// in which case they run to the horizon and keep counting triggers.
pub fn couple_k_decks(
    rule: &ShuffleRule,
    params: &KDeckCouplingParams,
    specials: &[usize],
    probe: usize,
    trials: u64,
    seed: u64,
    diagnostic: bool,
) -> Result<KDeckRun> {
    let n = rule.n();
    let k = params.k;
    if params.n != n {
        return Err(Error::Config(format!("coupling is for {} cards but the rule is for {n}", params.n)));
    }
    if specials.len() != k {
        return Err(Error::LengthMismatch {
            left: specials.len(),
            right: k,
        });
    }
    super::validate_positions(n, specials)?;
    if probe == 0 || probe > n || specials.contains(&probe) {
        return Err(Error::param(format!("probe position {probe} must be a non-special position in 1..={n}")));
    }
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let coin_p = params.coin_p;
    let horizon = params.horizon;

    let chunks = run_chunked(trials, seed, |rng, m| {
        let mut out = ChunkOut {
            first_mismatch: Vec::with_capacity(m as usize),
            aux_select: Vec::with_capacity(m as usize),
            first_cause: [0; 4],
            occurrences: [0; 4],
            triggers: [0; 4],
            trigger_moments: Default::default(),
            unexplained: 0,
            main_right: vec![0; n],
            aux_right: vec![0; n],
            probe_hits: 0,
            probe_steps: 0,
        };
        let mut main = vec![0usize; k];
        let mut aux = vec![0usize; k];
        let mut rs = vec![0usize; k];
        let mut hits = Vec::with_capacity(k);
        for _ in 0..m {
            main.copy_from_slice(specials);
            aux.copy_from_slice(specials);
            let mut probe_pos = probe;
            let mut matched = true;
            let mut mismatch = None;
            let mut aux_select = None;
            let mut counts = [0u64; 4];
            for t in 1..=horizon {
                let l = rule.sample_left(t, rng);
                for r in rs.iter_mut() {
                    *r = rng.position(n);
                }
                // Another auxiliary deck (not `i`) selecting its own card.
                let other_self_hit = |i: usize, rs: &[usize], aux: &[usize]| (0..k).any(|j| j != i && rs[j] == aux[j]);
                let (situation, r0, trigger) = if let Some(i) = main.iter().position(|&p| p == l) {
                    let r0 = rs[i];
                    let trig = main.iter().enumerate().any(|(j, &p)| j != i && p == r0) || other_self_hit(i, &rs, &aux);
                    (Situation::LeftOnSpecial, r0, trig)
                } else if !rng.bernoulli(coin_p) {
                    let i = rng.below(k);
                    let trig = rs[i] != aux[i] || other_self_hit(i, &rs, &aux);
                    (Situation::Tails, main[i], trig)
                } else {
                    let u = rng.position(n);
                    if let Some(i) = main.iter().position(|&p| p == u) {
                        let r0 = rs[i];
                        let trig =
                            main.iter().enumerate().any(|(j, &p)| j != i && p == r0) || other_self_hit(i, &rs, &aux);
                        (Situation::HeadsSpecial, r0, trig)
                    } else {
                        hits.clear();
                        hits.extend((0..k).filter(|&j| rs[j] == aux[j]));
                        let r0 = match hits.len() {
                            0 => u,
                            1 => rs[hits[0]],
                            h => rs[hits[rng.below(h)]],
                        };
                        (Situation::HeadsNonSpecial, r0, hits.len() > 1)
                    }
                };
                let s = situation as usize;
                out.occurrences[s] += 1;
                if trigger {
                    out.triggers[s] += 1;
                    counts[s] += 1;
                }
                if matched {
                    out.main_right[r0 - 1] += 1;
                    out.probe_steps += 1;
                    out.probe_hits += (r0 == probe_pos) as u64;
                }
                out.aux_right[rs[0] - 1] += 1;
                if aux_select.is_none() && rs[0] == aux[0] {
                    aux_select = Some(t);
                }

                move_tracked(&mut main, l, r0);
                probe_pos = mv(probe_pos, l, r0);
                for (a, &r) in aux.iter_mut().zip(&rs) {
                    *a = mv(*a, l, r);
                }
                if matched && main != aux {
                    matched = false;
                    mismatch = Some(t);
                    out.first_cause[s] += 1;
                    if !trigger {
                        out.unexplained += 1;
                    }
                    if !diagnostic {
                        break;
                    }
                }
            }
            out.first_mismatch.push(mismatch);
            out.aux_select.push(aux_select);
            for (mo, &c) in out.trigger_moments.iter_mut().zip(&counts) {
                mo.push(c as f64);
            }
        }
        out
    });

    let mut run = KDeckRun {
        params: *params,
        trials,
        seed,
        diagnostic,
        first_mismatch: Vec::with_capacity(trials as usize),
        first_cause: [0; 4],
        occurrences: [0; 4],
        triggers: [0; 4],
        trigger_moments: Default::default(),
        unexplained: 0,
        main_right: HandTally {
            name: "right-main".into(),
            counts: vec![0; n],
        },
        aux_right: HandTally {
            name: "right-aux-1".into(),
            counts: vec![0; n],
        },
        probe_hits: 0,
        probe_steps: 0,
        aux_select_times: Vec::with_capacity(trials as usize),
    };
    for c in chunks {
        run.first_mismatch.extend(c.first_mismatch);
        run.aux_select_times.extend(c.aux_select);
        for j in 0..4 {
            run.first_cause[j] += c.first_cause[j];
            run.occurrences[j] += c.occurrences[j];
            run.triggers[j] += c.triggers[j];
            run.trigger_moments[j].merge(&c.trigger_moments[j]);
        }
        run.unexplained += c.unexplained;
        for (a, b) in run.main_right.counts.iter_mut().zip(&c.main_right) {
            *a += b;
        }
        for (a, b) in run.aux_right.counts.iter_mut().zip(&c.aux_right) {
            *a += b;
        }
        run.probe_hits += c.probe_hits;
        run.probe_steps += c.probe_steps;
    }
    Ok(run)
}
