use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `min(H, R)` with the house `H` uniform on `1..=n` and `R` geometric with
/// success probability `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauHatModel {
    n: usize,
}

impl TauHatModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::param(format!("tau-hat model needs n >= 4 (got {n})")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn moments(&self) -> TauHatMoments {
        let n = self.n;
        let nf = n as f64;
        let g = 1.0 - 1.0 / nf;
        // Running sums over r < h of r g^{r-1} and r^2 g^{r-1}; the tail
        // over r >= h sums in closed form to n h g^{h-1} (and n h^2 g^{h-1}).
        let (mut below1, mut below2) = (0.0, 0.0);
        let (mut first, mut second, mut truncated) = (0.0, 0.0, 0.0);
        let mut gp = 1.0;
        for h in 1..=n {
            let hf = h as f64;
            first += below1 + nf * hf * gp;
            second += below2 + nf * hf * hf * gp;
            // Tail cut at r = n: sum_{r=h}^{n} g^{r-1} = n (g^{h-1} - g^n).
            truncated += below1 + nf * hf * (gp - g.powi(n as i32));
            below1 += hf * gp;
            below2 += hf * hf * gp;
            gp *= g;
        }
        let scale = 1.0 / (nf * nf);
        let mean = first * scale;
        let second_moment = second * scale;
        let closed_form = 0.5 * (nf - 3.0) * g.powi(n as i32) + 1.0;
        TauHatMoments {
            n,
            mean,
            second_moment,
            variance: second_moment - mean * mean,
            closed_form,
            closed_form_gap: closed_form - mean,
            truncated_sum: truncated * scale,
        }
    }
}

/// Moments of `min(H, R)` with the printed closed form for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauHatMoments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `(n-3)(1-1/n)^n / 2 + 1`.
    pub closed_form: f64,
    /// `closed_form - mean`.
    pub closed_form_gap: f64,
    /// The double sum with the inner sum stopped at `r = n`; equals the
    /// closed form.
    pub truncated_sum: f64,
}

/// Mean, second moment and variance of `min(H, R)` by the double sums.
pub fn tau_hat_moments(n: usize) -> Result<TauHatMoments> {
    Ok(TauHatModel::new(n)?.moments())
}
