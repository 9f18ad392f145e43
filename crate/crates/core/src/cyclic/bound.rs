use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{worst_case_curve, ExactOptions, StartStrategy};
use crate::rule::ShuffleRule;

/// Deck size used for the default fit of the constant.
pub const DEFAULT_FIT_N: usize = 60;

/// Parameters of `c e^{-t/n} (lambda^{floor(rate t / n)} + 1/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicBoundParams {
    pub lambda: f64,
    /// 0.693 = 1/1.442: phase steps of length `(1 + eps) n` at eps = 0.442.
    pub rate: f64,
    pub c: f64,
    pub provenance: String,
}

impl CyclicBoundParams {
    pub fn new(c: f64, provenance: impl Into<String>) -> Result<Self> {
        Self::with_shape(0.237, 0.693, c, provenance)
    }

    pub fn with_shape(lambda: f64, rate: f64, c: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param(format!("lambda must lie in (0, 1) (got {lambda})")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param(format!("rate must be positive (got {rate})")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param(format!("c must be positive (got {c})")));
        }
        Ok(Self {
            lambda,
            rate,
            c,
            provenance: provenance.into(),
        })
    }

    /// `floor(rate t / n)`, in integer arithmetic when `rate` has at most
    /// six decimals.
    pub fn phases(&self, t: u64, n: usize) -> u64 {
        let scaled = self.rate * 1e6;
        if (scaled - scaled.round()).abs() < 1e-6 {
            let num = scaled.round() as u128 * t as u128;
            (num / (1_000_000u128 * n as u128)) as u64
        } else {
            (self.rate * t as f64 / n as f64).floor() as u64
        }
    }

    /// The bound divided by `c`.
    pub fn shape(&self, t: u64, n: usize) -> f64 {
        let nf = n as f64;
        (-(t as f64) / nf).exp() * (self.lambda.powf(self.phases(t, n) as f64) + 1.0 / nf)
    }

    /// Decay exponent per `t/n` of the smooth envelope: `1 + rate ln(1/lambda)`.
    pub fn envelope_exponent(&self) -> f64 {
        1.0 + self.rate * (1.0 / self.lambda).ln()
    }

    /// `1 / envelope_exponent`, about 0.5006 at the default shape.
    pub fn envelope_coefficient(&self) -> f64 {
        1.0 / self.envelope_exponent()
    }
}

/// `c e^{-t/n} (lambda^{floor(rate t/n)} + 1/n)`.
pub fn cyclic_one_card_bound(t: u64, n: usize, params: &CyclicBoundParams) -> f64 {
    params.c * params.shape(t, n)
}

/// Smallest constant for which the bound covers the exact worst-case
/// one-card TV of the cyclic-to-random shuffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicFit {
    pub params: CyclicBoundParams,
    pub n: usize,
    pub t_max: u64,
    /// Time at which the ratio TV / shape peaks.
    pub binding_t: u64,
    /// Smallest `bound - tv` over the fitted range.
    pub min_slack: f64,
}

/// Fits `c` against the exact worst-case cyclic one-card TV for
/// `t in 1..=t_max`, rounding up so every residual is non-negative.
pub fn fit_cyclic_constant(n: usize, t_max: u64) -> Result<CyclicFit> {
    if t_max == 0 {
        return Err(Error::param("t_max must be at least 1"));
    }
    let rule = ShuffleRule::cyclic_to_random(n)?;
    let times: Vec<u64> = (1..=t_max).collect();
    let curve = worst_case_curve(&rule, 1, &times, &StartStrategy::Auto, &ExactOptions::default())?;
    let unit = CyclicBoundParams::new(1.0, "")?;
    let (mut c, mut binding_t) = (0.0, 1);
    for (&t, &v) in times.iter().zip(&curve.values) {
        let r = v / unit.shape(t, n);
        if r > c {
            c = r;
            binding_t = t;
        }
    }
    c *= 1.0 + 1e-12;
    let params = CyclicBoundParams::new(
        c,
        format!("fitted to exact worst-case cyclic one-card TV, n={n}, t in [1, {t_max}]"),
    )?;
    let min_slack = times
        .iter()
        .zip(&curve.values)
        .map(|(&t, &v)| cyclic_one_card_bound(t, n, &params) - v)
        .fold(f64::INFINITY, f64::min);
    Ok(CyclicFit {
        params,
        n,
        t_max,
        binding_t,
        min_slack,
    })
}

/// Default fit at `n = 60`, `t in [1, 600]`.
pub fn default_cyclic_fit() -> Result<CyclicFit> {
    fit_cyclic_constant(DEFAULT_FIT_N, 10 * DEFAULT_FIT_N as u64)
}

/// Smallest `t` with `bound(t) <= e^{-3/2}/k`, plus the coefficients it
/// implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicMixingReport {
    pub n: usize,
    pub k: usize,
    pub c: f64,
    pub t: u64,
    /// `t / (n ln k)`.
    pub coefficient: f64,
    /// `-ln(e^{-3/2}/c - 1)`, defined only for `c < e^{-3/2}`.
    pub offset_constant: Option<f64>,
    /// `t / (n (ln k + offset_constant))`.
    pub offset_coefficient: Option<f64>,
    /// `ln c + 3/2`: the constant of the smooth envelope.
    pub envelope_constant: f64,
    /// `1 / (1 + rate ln(1/lambda))`.
    pub envelope_coefficient: f64,
    /// `t / (n (ln k + envelope_constant))`.
    pub coefficient_vs_envelope: f64,
    /// Smallest `t` for the floor-free bound with constant `c`.
    pub smooth_lower: u64,
    /// Smallest `t` for the floor-free bound with constant `c / lambda`.
    pub smooth_upper: u64,
    /// `n (ln k + 3/2)`.
    pub generic_bound: f64,
}

fn smooth_time(c: f64, n: usize, k: usize, params: &CyclicBoundParams) -> u64 {
    let target = (-1.5f64).exp() / k as f64;
    let nf = n as f64;
    let ok = |t: u64| {
        let x = t as f64 / nf;
        c * (-x).exp() * (params.lambda.powf(params.rate * x) + 1.0 / nf) <= target
    };
    let mut t = 0;
    while !ok(t) {
        t += 1;
    }
    t
}

/// Scans `t` up to `10 n ln n` for the first time the one-card bound drops
/// below `e^{-3/2}/k`.
pub fn cyclic_mixing_upper(n: usize, k: usize, params: &CyclicBoundParams) -> Result<CyclicMixingReport> {
    if k < 2 {
        return Err(Error::param(format!("k must be at least 2 (got {k})")));
    }
    if n < 2 {
        return Err(Error::param(format!("n must be at least 2 (got {n})")));
    }
    let nf = n as f64;
    let horizon = (10.0 * nf * nf.ln()).ceil() as u64;
    let target = (-1.5f64).exp() / k as f64;
    let mut t = 0;
    let mut value = cyclic_one_card_bound(0, n, params);
    while value > target {
        if t >= horizon {
            return Err(Error::Horizon {
                horizon,
                last_value: value,
            });
        }
        t += 1;
        value = cyclic_one_card_bound(t, n, params);
    }
    let lnk = (k as f64).ln();
    let c = params.c;
    let offset_constant = {
        let inner = (-1.5f64).exp() / c - 1.0;
        (inner > 0.0).then(|| -inner.ln())
    };
    let envelope_constant = c.ln() + 1.5;
    Ok(CyclicMixingReport {
        n,
        k,
        c,
        t,
        coefficient: t as f64 / (nf * lnk),
        offset_constant,
        offset_coefficient: offset_constant.map(|pc| t as f64 / (nf * (lnk + pc))),
        envelope_constant,
        envelope_coefficient: params.envelope_coefficient(),
        coefficient_vs_envelope: t as f64 / (nf * (lnk + envelope_constant)),
        smooth_lower: smooth_time(c, n, k, params),
        smooth_upper: smooth_time(c / params.lambda, n, k, params),
        generic_bound: nf * (lnk + 1.5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero() {
        let p = CyclicBoundParams::new(2.5, "test").unwrap();
        assert!((cyclic_one_card_bound(0, 40, &p) - 2.5 * (1.0 + 1.0 / 40.0)).abs() < 1e-15);
    }

    #[test]
    fn floor_is_exact() {
        let p = CyclicBoundParams::new(1.0, "test").unwrap();
        // 0.693 * 1000 / 693 is exactly 1.
        assert_eq!(p.phases(1000, 693), 1);
        assert_eq!(p.phases(999, 693), 0);
        assert_eq!(p.phases(0, 10), 0);
    }

    #[test]
    fn decay_between_n_and_2n() {
        let n = 100;
        let p = CyclicBoundParams::new(1.0, "test").unwrap();
        let ratio = cyclic_one_card_bound(2 * n as u64, n, &p) / cyclic_one_card_bound(n as u64, n, &p);
        let formula = (-1.0f64).exp() * 0.237f64.powi(1) / 0.237f64.powi(0);
        // The 1/n term keeps the ratio from reaching the pure formula value.
        assert!(ratio > formula && ratio < (-1.0f64).exp());
        assert_eq!(p.phases(2 * n as u64, n), 1);
        assert_eq!(p.phases(n as u64, n), 0);
    }

    #[test]
    fn fitted_constant_covers_exact_curve() {
        let fit = default_cyclic_fit().unwrap();
        assert!(fit.params.c > 0.0 && fit.params.c <= 10.0, "{fit:?}");
        assert!(fit.min_slack >= 0.0);
    }

    #[test]
    fn envelope_coefficient_value() {
        let p = CyclicBoundParams::new(1.0, "test").unwrap();
        let coef = p.envelope_coefficient();
        assert!((0.50..=0.501).contains(&coef), "{coef}");
    }

    #[test]
    fn mixing_time_sandwiched_and_monotone() {
        let p = CyclicBoundParams::new(0.9668, "test").unwrap();
        let n = 10_000;
        let mut last = 0;
        for k in [2, 4, 8, 100, 1000, 10_000] {
            let r = cyclic_mixing_upper(n, k, &p).unwrap();
            assert!(r.smooth_lower <= r.t && r.t <= r.smooth_upper, "{r:?}");
            assert!(r.offset_constant.is_none());
            assert!(r.t >= last);
            last = r.t;
        }
        let t4 = cyclic_mixing_upper(100, 4, &p).unwrap().t;
        let t8 = cyclic_mixing_upper(100, 8, &p).unwrap().t;
        assert!(t8 > t4);
    }

    #[test]
    fn offset_constant_when_defined() {
        let p = CyclicBoundParams::new(0.1, "test").unwrap();
        let r = cyclic_mixing_upper(1000, 50, &p).unwrap();
        let expect = -((-1.5f64).exp() / 0.1 - 1.0).ln();
        assert!((r.offset_constant.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn horizon_error() {
        let p = CyclicBoundParams::new(1e6, "test").unwrap();
        assert!(matches!(cyclic_mixing_upper(10, 1_000_000, &p), Err(Error::Horizon { .. })));
    }
}
