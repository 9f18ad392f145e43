use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of ordered k-tuples held in a dense vector.
pub const DEFAULT_STATE_CAP: usize = 10_000_000;

/// Dense bijective indexing of ordered k-tuples of distinct positions.
///
/// The encoding is mixed radix with falling-factorial radices
/// `n, n-1, ..., n-k+1`: digit `i` is the rank of the `i`-th position among
/// the positions not used by the earlier entries, and the first digit is the
/// most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KTupleIndexer {
    n: usize,
    k: usize,
    count: usize,
    weights: Vec<usize>,
}

/// Number of ordered k-tuples of distinct elements of an n-set.
pub fn falling_factorial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128))
}

impl KTupleIndexer {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_cap(n, k, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(n: usize, k: usize, cap: usize) -> Result<Self> {
        if k > n {
            return Err(Error::param(format!("k exceeds n ({k} > {n})")));
        }
        Self::unchecked_k(n, k, cap, 1)
    }

    /// Also accepts k = 0 (a single empty tuple); used for marginal tables.
    pub(crate) fn allow_empty(n: usize, k: usize) -> Result<Self> {
        Self::unchecked_k(n, k, usize::MAX, 0)
    }

    fn unchecked_k(n: usize, k: usize, cap: usize, min_k: usize) -> Result<Self> {
        if k < min_k {
            return Err(Error::param("k must be at least 1"));
        }
        if k > n {
            return Err(Error::param(format!("k exceeds n ({k} > {n})")));
        }
        let count = falling_factorial(n, k);
        if count > cap as u128 {
            return Err(Error::CapExceeded { count, cap });
        }
        let mut weights = vec![1usize; k];
        for i in (0..k.saturating_sub(1)).rev() {
            weights[i] = weights[i + 1] * (n - i - 1);
        }
        Ok(Self {
            n,
            k,
            count: count as usize,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Encodes 0-based positions.
    #[inline]
    pub(crate) fn encode0(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.k);
        let mut idx = 0;
        for i in 0..tuple.len() {
            let p = tuple[i];
            let smaller = tuple[..i].iter().filter(|&&q| q < p).count();
            idx += (p - smaller) * self.weights[i];
        }
        idx
    }

    /// Decodes into 0-based positions.
    #[inline]
    pub(crate) fn decode0(&self, mut idx: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.k);
        for i in 0..self.k {
            let mut digit = idx / self.weights[i];
            idx %= self.weights[i];
            // The digit-th smallest position not used by out[..i].
            let mut p = 0;
            loop {
                if !out[..i].contains(&p) {
                    if digit == 0 {
                        break;
                    }
                    digit -= 1;
                }
                p += 1;
            }
            out[i] = p;
        }
    }

    /// Encodes a tuple of distinct 1-based positions.
    pub fn encode(&self, tuple: &[usize]) -> Result<usize> {
        self.validate(tuple)?;
        let zero: Vec<usize> = tuple.iter().map(|&p| p - 1).collect();
        Ok(self.encode0(&zero))
    }

    /// Decodes an index into 1-based positions.
    pub fn decode(&self, idx: usize) -> Vec<usize> {
        assert!(idx < self.count, "index {idx} out of range");
        let mut out = vec![0; self.k];
        self.decode0(idx, &mut out);
        out.iter_mut().for_each(|p| *p += 1);
        out
    }

    /// Checks that a 1-based tuple has length k and distinct in-range entries.
    pub fn validate(&self, tuple: &[usize]) -> Result<()> {
        if tuple.len() != self.k {
            return Err(Error::LengthMismatch {
                left: tuple.len(),
                right: self.k,
            });
        }
        for (i, &p) in tuple.iter().enumerate() {
            if p == 0 || p > self.n {
                return Err(Error::param(format!("position {p} outside 1..={}", self.n)));
            }
            if tuple[..i].contains(&p) {
                return Err(Error::param(format!("position {p} repeated in tuple")));
            }
        }
        Ok(())
    }
}
