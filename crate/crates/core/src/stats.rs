//! Small statistics helpers shared by the simulators and their tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of observed counts against expected probabilities.
///
/// Cells with zero expected probability are skipped (and must be empty).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            debug_assert_eq!(o, 0, "observation in a zero-probability cell");
            continue;
        }
        let e = total * p;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    ChiSquareTest {
        statistic: stat,
        dof,
        p_value,
    }
}

/// Chi-square test of observed counts against the uniform law.
pub fn chi_square_uniform(observed: &[u64]) -> ChiSquareTest {
    let p = 1.0 / observed.len() as f64;
    chi_square(observed, &vec![p; observed.len()])
}

/// Running first four moments, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub sum_cube: f64,
    pub sum_quad: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.count += 1;
        self.sum += x;
        self.sum_sq += x2;
        self.sum_cube += x2 * x;
        self.sum_quad += x2 * x2;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_cube += other.sum_cube;
        self.sum_quad += other.sum_quad;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.count as f64;
        if m < 2.0 {
            return 0.0;
        }
        ((self.sum_sq - self.sum * self.sum / m) / (m - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Fourth central moment (plug-in).
    pub fn fourth_central(&self) -> f64 {
        let m = self.count as f64;
        let mu = self.mean();
        let e1 = self.sum / m;
        let e2 = self.sum_sq / m;
        let e3 = self.sum_cube / m;
        let e4 = self.sum_quad / m;
        (e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 4.0 * mu.powi(3) * e1 + mu.powi(4)).max(0.0)
    }

    /// Large-sample standard error of the sample variance.
    pub fn variance_std_error(&self) -> f64 {
        let s2 = self.variance();
        ((self.fourth_central() - s2 * s2).max(0.0) / self.count as f64).sqrt()
    }
}

/// Standard error of a binomial proportion estimate.
pub fn proportion_std_error(p_hat: f64, samples: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / samples as f64).max(0.0).sqrt()
}
