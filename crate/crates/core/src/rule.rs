use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Which left-hand rule a shuffle uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    TopToRandom,
    RandomToRandom,
    CyclicToRandom,
    CustomSequence,
}

impl RuleKind {
    pub fn short_name(self) -> &'static str {
        match self {
            RuleKind::TopToRandom => "top",
            RuleKind::RandomToRandom => "random",
            RuleKind::CyclicToRandom => "cyclic",
            RuleKind::CustomSequence => "custom",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" | "top-to-random" => Ok(RuleKind::TopToRandom),
            "random" | "random-to-random" => Ok(RuleKind::RandomToRandom),
            "cyclic" | "cyclic-to-random" => Ok(RuleKind::CyclicToRandom),
            "custom" | "custom-sequence" => Ok(RuleKind::CustomSequence),
            other => Err(Error::param(format!("unknown shuffle rule '{other}'"))),
        }
    }
}

/// The law of the left hand at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeftHand<'a> {
    /// Always the given 1-based position.
    Fixed(usize),
    /// Uniform over all positions.
    Uniform,
    /// Explicit weights over positions `1..=n` (index 0 is position 1).
    Weighted(&'a [f64]),
}

impl LeftHand<'_> {
    /// Dense weight vector indexed by 0-based position.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match *self {
            LeftHand::Fixed(p) => {
                let mut w = vec![0.0; n];
                w[p - 1] = 1.0;
                w
            }
            LeftHand::Uniform => vec![1.0 / n as f64; n],
            LeftHand::Weighted(w) => w.to_vec(),
        }
    }
}

/// A semi-random transposition shuffle: the left hand follows `kind`, the
/// right hand is always uniform.
///
/// Cyclic-to-random visits position `((t - 1) mod n) + 1` at time `t`, so
/// each round of `n` steps sweeps positions `1..=n` in order. A custom
/// sequence of length `m` uses entry `(t - 1) mod m` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleRule {
    kind: RuleKind,
    n: usize,
    custom: Option<Arc<Vec<Vec<f64>>>>,
}

impl ShuffleRule {
    fn simple(kind: RuleKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("deck size must be at least 2, got {n}")));
        }
        Ok(Self { kind, n, custom: None })
    }

    pub fn top_to_random(n: usize) -> Result<Self> {
        Self::simple(RuleKind::TopToRandom, n)
    }

    pub fn random_to_random(n: usize) -> Result<Self> {
        Self::simple(RuleKind::RandomToRandom, n)
    }

    pub fn cyclic_to_random(n: usize) -> Result<Self> {
        Self::simple(RuleKind::CyclicToRandom, n)
    }

    /// A left hand that follows an explicit, periodically repeated sequence
    /// of distributions over positions.
    pub fn custom(n: usize, sequence: Vec<Vec<f64>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("deck size must be at least 2, got {n}")));
        }
        if sequence.is_empty() {
            return Err(Error::param("custom sequence must contain at least one distribution"));
        }
        for (i, dist) in sequence.iter().enumerate() {
            if dist.len() != n {
                return Err(Error::LengthMismatch {
                    left: dist.len(),
                    right: n,
                });
            }
            if dist.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::param(format!("custom distribution {i} has a negative or non-finite weight")));
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::param(format!("custom distribution {i} sums to {total}, not 1")));
            }
        }
        Ok(Self {
            kind: RuleKind::CustomSequence,
            n,
            custom: Some(Arc::new(sequence)),
        })
    }

    /// Builds one of the three named rules from its kind.
    pub fn from_kind(kind: RuleKind, n: usize) -> Result<Self> {
        match kind {
            RuleKind::CustomSequence => Err(Error::param("custom rules need an explicit sequence")),
            k => Self::simple(k, n),
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when the step law does not depend on `t`.
    pub fn is_time_homogeneous(&self) -> bool {
        match self.kind {
            RuleKind::TopToRandom | RuleKind::RandomToRandom => true,
            RuleKind::CyclicToRandom => false,
            RuleKind::CustomSequence => self.custom.as_ref().is_some_and(|s| s.len() == 1),
        }
    }

    /// Law of the left hand at time `t >= 1`.
    pub fn left_hand(&self, t: u64) -> LeftHand<'_> {
        debug_assert!(t >= 1, "time starts at 1");
        match self.kind {
            RuleKind::TopToRandom => LeftHand::Fixed(1),
            RuleKind::RandomToRandom => LeftHand::Uniform,
            RuleKind::CyclicToRandom => LeftHand::Fixed(((t.max(1) - 1) % self.n as u64) as usize + 1),
            RuleKind::CustomSequence => {
                let seq = self.custom.as_ref().expect("custom rule carries a sequence");
                let idx = ((t.max(1) - 1) % seq.len() as u64) as usize;
                LeftHand::Weighted(&seq[idx])
            }
        }
    }

    /// Draws the left-hand position `L_t` (1-based).
    #[inline]
    pub fn sample_left(&self, t: u64, rng: &mut RandomStream) -> usize {
        match self.left_hand(t) {
            LeftHand::Fixed(p) => p,
            LeftHand::Uniform => rng.position(self.n),
            LeftHand::Weighted(w) => {
                let u = rng.unit();
                let mut acc = 0.0;
                for (i, &wi) in w.iter().enumerate() {
                    acc += wi;
                    if u < acc {
                        return i + 1;
                    }
                }
                // Rounding left a sliver above the last cumulative sum.
                w.iter().rposition(|&wi| wi > 0.0).unwrap_or(self.n - 1) + 1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_is_always_position_one() {
        let rule = ShuffleRule::top_to_random(4).unwrap();
        let mut rng = RandomStream::new(1, 0);
        for t in 1..50 {
            assert_eq!(rule.sample_left(t, &mut rng), 1);
        }
    }

    #[test]
    fn cyclic_sweeps_in_order() {
        let rule = ShuffleRule::cyclic_to_random(5).unwrap();
        let lefts: Vec<usize> = (1..=11)
            .map(|t| match rule.left_hand(t) {
                LeftHand::Fixed(p) => p,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(lefts, vec![1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 1]);
    }

    #[test]
    fn custom_validation() {
        assert!(ShuffleRule::custom(3, vec![vec![0.5, 0.5, 0.0]]).is_ok());
        assert!(ShuffleRule::custom(3, vec![vec![0.5, 0.4, 0.0]]).is_err());
        assert!(ShuffleRule::custom(3, vec![vec![0.5, 0.5]]).is_err());
        assert!(ShuffleRule::custom(3, vec![vec![1.5, -0.5, 0.0]]).is_err());
        assert!(ShuffleRule::custom(3, vec![]).is_err());
    }

    #[test]
    fn custom_sampling_respects_support() {
        let rule = ShuffleRule::custom(4, vec![vec![0.0, 0.25, 0.0, 0.75], vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let mut rng = RandomStream::new(3, 0);
        for t in 1..200u64 {
            let l = rule.sample_left(t, &mut rng);
            if t % 2 == 1 {
                assert!(l == 2 || l == 4);
            } else {
                assert_eq!(l, 1);
            }
        }
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("top".parse::<RuleKind>().unwrap(), RuleKind::TopToRandom);
        assert_eq!("cyclic-to-random".parse::<RuleKind>().unwrap(), RuleKind::CyclicToRandom);
        assert!("riffle".parse::<RuleKind>().is_err());
    }
}
