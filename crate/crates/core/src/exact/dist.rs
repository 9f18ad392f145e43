use rayon::prelude::*;

use super::indexer::KTupleIndexer;
use crate::error::{Error, Result};
use crate::rule::{LeftHand, ShuffleRule};

/// Allowed drift of total probability mass after an evolution step.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Negative round-off smaller than this is flushed to zero.
const NEGATIVE_FLUSH: f64 = 1e-14;

const CHUNK: usize = 4096;

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// Joint law of the positions of k labelled cards.
#[derive(Debug, Clone, PartialEq)]
pub struct KTupleDistribution {
    indexer: KTupleIndexer,
    probs: Vec<f64>,
}

/// The k-card marginal of a uniform permutation: uniform over all ordered
/// tuples of distinct positions.
pub fn uniform_k_marginal(n: usize, k: usize) -> Result<KTupleDistribution> {
    let indexer = KTupleIndexer::new(n, k)?;
    let p = 1.0 / indexer.count() as f64;
    Ok(KTupleDistribution {
        probs: vec![p; indexer.count()],
        indexer,
    })
}

impl KTupleDistribution {
    /// All mass on one tuple of 1-based positions.
    pub fn point_mass(indexer: KTupleIndexer, tuple: &[usize]) -> Result<Self> {
        let idx = indexer.encode(tuple)?;
        let mut probs = vec![0.0; indexer.count()];
        probs[idx] = 1.0;
        Ok(Self { indexer, probs })
    }

    pub fn from_probs(indexer: KTupleIndexer, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != indexer.count() {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: indexer.count(),
            });
        }
        if probs.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::param("probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::param(format!("probabilities sum to {total}")));
        }
        Ok(Self { indexer, probs })
    }

    pub fn indexer(&self) -> &KTupleIndexer {
        &self.indexer
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of a 1-based tuple.
    pub fn prob_of(&self, tuple: &[usize]) -> Result<f64> {
        Ok(self.probs[self.indexer.encode(tuple)?])
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total variation distance to the uniform k-card marginal.
    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        let s: f64 = self.probs.iter().map(|&p| (p - u).abs()).sum();
        (0.5 * s).clamp(0.0, 1.0)
    }
}

/// Exact one-step pushforward of the k tracked positions at time `t`.
pub fn lumped_step(dist: &KTupleDistribution, rule: &ShuffleRule, t: u64) -> Result<KTupleDistribution> {
    let mut ev = LumpedEvolver::new(rule.clone(), dist.clone(), t)?;
    ev.advance()?;
    Ok(ev.into_distribution())
}

/// Repeatedly applies the lumped k-card kernel, reusing its buffers.
///
/// Every transposition is an involution, so the one-step kernel on tuples is
/// symmetric and the new mass at a tuple is a pull over the same
/// transpositions applied to it. Sums over "replace card i by any free
/// position" are shared between tuples that agree off coordinate i, and are
/// tabulated once per step over the (k-1)-tuples.
#[derive(Debug, Clone)]
pub struct LumpedEvolver {
    rule: ShuffleRule,
    indexer: KTupleIndexer,
    sub: KTupleIndexer,
    probs: Vec<f64>,
    next: Vec<f64>,
    /// Sum of mass over every free value of one coordinate, `[q * k + i]`.
    free_sum: Vec<f64>,
    /// Same sum weighted by the left-hand law at the free value.
    free_weighted: Vec<f64>,
    next_time: u64,
    steps: u64,
}

struct StepCtx<'a> {
    n: usize,
    k: usize,
    ix: &'a KTupleIndexer,
    sub: &'a KTupleIndexer,
    old: &'a [f64],
    free_sum: &'a [f64],
    free_weighted: &'a [f64],
    weights: &'a [f64],
    fixed: Option<usize>,
}

impl StepCtx<'_> {
    #[inline]
    fn sub_index(&self, p: &[usize], skip: usize, buf: &mut [usize]) -> usize {
        let mut j = 0;
        for (i, &x) in p.iter().enumerate() {
            if i != skip {
                buf[j] = x;
                j += 1;
            }
        }
        self.sub.encode0(&buf[..self.k - 1])
    }

    #[inline]
    fn pull(&self, idx: usize, p: &[usize], tuple_buf: &mut [usize], sub_buf: &mut [usize]) -> f64 {
        let (n, k) = (self.n, self.k);
        let here = self.old[idx];
        let w_here: f64 = p.iter().map(|&x| self.weights[x]).sum();
        // Left hand misses every tracked card and so does the right hand.
        let mut acc = (n - k) as f64 * (1.0 - w_here) * here - w_here * here;
        // Left hand on a free position, right hand on tracked card j.
        for j in 0..k {
            match self.fixed {
                Some(left) => {
                    if !p.iter().enumerate().any(|(i, &x)| i != j && x == left) {
                        tuple_buf.copy_from_slice(p);
                        tuple_buf[j] = left;
                        acc += self.old[self.ix.encode0(tuple_buf)];
                    }
                }
                None => {
                    let q = self.sub_index(p, j, sub_buf);
                    acc += self.free_weighted[q * k + j];
                }
            }
        }
        // Left hand on tracked card i.
        for i in 0..k {
            let wi = self.weights[p[i]];
            if wi == 0.0 {
                continue;
            }
            let q = self.sub_index(p, i, sub_buf);
            let mut s = self.free_sum[q * k + i];
            for j in 0..k {
                if j != i {
                    tuple_buf.copy_from_slice(p);
                    tuple_buf.swap(i, j);
                    s += self.old[self.ix.encode0(tuple_buf)];
                }
            }
            acc += wi * s;
        }
        acc / n as f64
    }
}

impl LumpedEvolver {
    /// Starts from `dist`; the first `advance` applies the step at `start_time`.
    pub fn new(rule: ShuffleRule, dist: KTupleDistribution, start_time: u64) -> Result<Self> {
        if start_time == 0 {
            return Err(Error::param("step times start at 1"));
        }
        let indexer = dist.indexer.clone();
        if indexer.n() != rule.n() {
            return Err(Error::Config(format!(
                "distribution is over {} positions but the rule is for {}",
                indexer.n(),
                rule.n()
            )));
        }
        let sub = KTupleIndexer::allow_empty(indexer.n(), indexer.k() - 1)?;
        let table = sub.count() * indexer.k();
        Ok(Self {
            next: vec![0.0; indexer.count()],
            free_sum: vec![0.0; table],
            free_weighted: vec![0.0; table],
            probs: dist.probs,
            rule,
            indexer,
            sub,
            next_time: start_time,
            steps: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        let s: f64 = self.probs.iter().map(|&p| (p - u).abs()).sum();
        (0.5 * s).clamp(0.0, 1.0)
    }

    pub fn distribution(&self) -> KTupleDistribution {
        KTupleDistribution {
            indexer: self.indexer.clone(),
            probs: self.probs.clone(),
        }
    }

    pub fn into_distribution(self) -> KTupleDistribution {
        KTupleDistribution {
            indexer: self.indexer,
            probs: self.probs,
        }
    }

    fn fill_tables(&mut self, weights: &[f64], need_weighted: bool) {
        let (n, k) = (self.indexer.n(), self.indexer.k());
        let ix = &self.indexer;
        let sub = &self.sub;
        let old = &self.probs;
        self.free_sum
            .par_chunks_mut(k)
            .zip(self.free_weighted.par_chunks_mut(k))
            .enumerate()
            .for_each_init(
                || (vec![0usize; k.saturating_sub(1)], vec![0usize; k], vec![false; n]),
                |(qbuf, tbuf, used), (q, (sums, wsums))| {
                    sub.decode0(q, qbuf);
                    used.iter_mut().for_each(|u| *u = false);
                    for &x in qbuf.iter() {
                        used[x] = true;
                    }
                    for slot in 0..k {
                        tbuf[..slot].copy_from_slice(&qbuf[..slot]);
                        tbuf[slot + 1..].copy_from_slice(&qbuf[slot..]);
                        let (mut s, mut ws) = (0.0, 0.0);
                        for u in 0..n {
                            if used[u] {
                                continue;
                            }
                            tbuf[slot] = u;
                            let mass = old[ix.encode0(tbuf)];
                            s += mass;
                            if need_weighted {
                                ws += weights[u] * mass;
                            }
                        }
                        sums[slot] = s;
                        wsums[slot] = ws;
                    }
                },
            );
    }

    /// Applies one step of the shuffle to the tracked positions.
    pub fn advance(&mut self) -> Result<()> {
        let n = self.indexer.n();
        let k = self.indexer.k();
        let t = self.next_time;
        let left = self.rule.left_hand(t);
        let fixed = match left {
            LeftHand::Fixed(p) => Some(p - 1),
            _ => None,
        };
        let weights = left.weights(n);
        self.fill_tables(&weights, fixed.is_none());

        let ctx = StepCtx {
            n,
            k,
            ix: &self.indexer,
            sub: &self.sub,
            old: &self.probs,
            free_sum: &self.free_sum,
            free_weighted: &self.free_weighted,
            weights: &weights,
            fixed,
        };
        self.next.par_chunks_mut(CHUNK).enumerate().for_each_init(
            || (vec![0usize; k], vec![0usize; k], vec![0usize; k.saturating_sub(1)]),
            |(p, tbuf, sbuf), (chunk, out)| {
                let base = chunk * CHUNK;
                for (off, slot) in out.iter_mut().enumerate() {
                    let idx = base + off;
                    ctx.ix.decode0(idx, p);
                    *slot = ctx.pull(idx, p, tbuf, sbuf);
                }
            },
        );

        let mut total = 0.0;
        for x in self.next.iter_mut() {
            if *x < 0.0 {
                if *x < -NEGATIVE_FLUSH {
                    return Err(Error::NumericalIntegrity {
                        t,
                        detail: format!("negative probability {x}"),
                    });
                }
                *x = 0.0;
            }
            total += *x;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NumericalIntegrity {
                t,
                detail: format!("total mass {total}"),
            });
        }
        std::mem::swap(&mut self.probs, &mut self.next);
        self.next_time += 1;
        self.steps += 1;
        Ok(())
    }
}
