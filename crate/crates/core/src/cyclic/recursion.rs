use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solution of the backward recursion for the probability `p_s` of reaching
/// the close window from cyclic distance `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRecursion {
    pub epsilon: f64,
    pub n: usize,
    /// `floor(epsilon * n)`.
    pub m: usize,
    /// `p_s` for `s` in `0..n-m`.
    pub p: Vec<f64>,
    /// `1 + 2 eps g^{eps n - n} - g^{-eps n - 1}` with `g = 1 - 1/n`.
    pub p0_closed: f64,
    /// `p[0] - p0_closed`.
    pub p0_gap: f64,
}

impl PRecursion {
    /// Closed form for `p_s`: `2 eps g^{s + eps n - n}` above the window and
    /// `1 + 2 eps g^{s + eps n - n} - g^{s - 1 - eps n}` inside it.
    pub fn closed_form(&self, s: usize) -> f64 {
        closed_form(self.epsilon, self.n, s)
    }
}

fn closed_form(epsilon: f64, n: usize, s: usize) -> f64 {
    let nf = n as f64;
    let en = epsilon * nf;
    let g: f64 = 1.0 - 1.0 / nf;
    let s = s as f64;
    let upper = 2.0 * epsilon * g.powf(s + en - nf);
    if s > en {
        upper
    } else {
        1.0 + upper - g.powf(s - 1.0 - en)
    }
}

/// Solves `p_s = a_s + sum_{r=s+1}^{n-m-1} p_r / (n-1)` backwards from the
/// terminal value `p_{n-m-1} = 2m/(n-1)`, where `m = floor(eps n)`,
/// `a_s = 2m/(n-1)` for `s > m` and `(m + s - 1)/(n-1)` for `s <= m`.
pub fn p_recursion(epsilon: f64, n: usize) -> Result<PRecursion> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::param(format!("epsilon must lie in (0, 1/2) (got {epsilon})")));
    }
    let m = (epsilon * n as f64).floor() as usize;
    if m < 1 {
        return Err(Error::param(format!("floor(epsilon * n) must be at least 1 (epsilon={epsilon}, n={n})")));
    }
    let len = n - m;
    let d = (n - 1) as f64;
    let mf = m as f64;
    let mut p = vec![0.0; len];
    let mut suffix = 0.0;
    for s in (0..len).rev() {
        let a = if s > m { 2.0 * mf / d } else { (mf + s as f64 - 1.0) / d };
        p[s] = a + suffix / d;
        suffix += p[s];
    }
    let p0_closed = closed_form(epsilon, n, 0);
    Ok(PRecursion {
        epsilon,
        n,
        m,
        p0_gap: p[0] - p0_closed,
        p,
        p0_closed,
    })
}
