use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATES: [&str; 3] = ["C", "F", "S"];

/// Transition matrix of the close / far / success phase chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseChainMatrix {
    /// Row-major over (C, F, S).
    pub entries: [[f64; 3]; 3],
    pub epsilon: f64,
    pub xi: f64,
    /// Deck size for the finite-n matrix; `None` for the limit.
    pub n: Option<usize>,
}

impl PhaseChainMatrix {
    fn checked(entries: [[f64; 3]; 3], epsilon: f64, xi: f64, n: Option<usize>) -> Result<Self> {
        for (i, row) in entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain {
                        entry: format!("P({},{})", STATES[i], STATES[j]),
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NumericalIntegrity {
                    t: 0,
                    detail: format!("row {} sums to {sum}", STATES[i]),
                });
            }
        }
        Ok(Self { entries, epsilon, xi, n })
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from][to]
    }

    /// Upper-left block over the transient states C and F.
    pub fn block(&self) -> Matrix2<f64> {
        let e = &self.entries;
        Matrix2::new(e[0][0], e[0][1], e[1][0], e[1][1])
    }

    pub fn max_row_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_entry_gap(&self, other: &Self) -> f64 {
        let mut gap: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                gap = gap.max((self.entries[i][j] - other.entries[i][j]).abs());
            }
        }
        gap
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::param(format!("epsilon must lie in (0, 1/2) (got {epsilon})")));
    }
    Ok(())
}

/// Finite-n phase matrix with `eps n` replaced by `m = floor(eps n)`.
pub fn phase_matrix_exact(epsilon: f64, n: usize) -> Result<PhaseChainMatrix> {
    check_epsilon(epsilon)?;
    if n < 4 {
        return Err(Error::param(format!("phase matrix needs n >= 4 (got {n})")));
    }
    let nf = n as f64;
    let m = (epsilon * nf).floor();
    let g: f64 = 1.0 - 1.0 / nf;
    let w = (m + 1.0) / (2.0 * (nf - 1.0));
    let inner = g.powf(-m - 1.0) - 2.0 * epsilon * g.powf(m - nf);
    let f = 2.0 * m / (nf - 1.0);
    let entries = [
        [w * (1.0 - inner), w * inner, 1.0 - w],
        [f, 1.0 - f, 0.0],
        [0.0, 0.0, 1.0],
    ];
    PhaseChainMatrix::checked(entries, epsilon, 0.0, Some(n))
}

/// Limit matrix as `n` grows, with the slack `xi` moved from C->S to C->F
/// and C->C.
pub fn phase_matrix_limit(epsilon: f64, xi: f64) -> Result<PhaseChainMatrix> {
    check_epsilon(epsilon)?;
    if !(xi >= 0.0) {
        return Err(Error::param(format!("xi must be non-negative (got {xi})")));
    }
    let e = epsilon;
    let inner = e.exp() - 2.0 * e * (1.0 - e).exp();
    let entries = [
        [e / 2.0 * (1.0 - inner + xi), e / 2.0 * inner + xi * (1.0 - e / 2.0), 1.0 - e / 2.0 - xi],
        [2.0 * e, 1.0 - 2.0 * e, 0.0],
        [0.0, 0.0, 1.0],
    ];
    PhaseChainMatrix::checked(entries, epsilon, xi, None)
}

/// Largest eigenvalue of the transient block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondEigenvalue {
    /// Largest block eigenvalue, or the common modulus if complex.
    pub lambda2: f64,
    /// The other block eigenvalue (the modulus if complex).
    pub other: f64,
    pub complex: bool,
    pub trace: f64,
    pub det: f64,
    /// Independent estimate by repeated squaring of the block.
    pub power_iteration: f64,
}

/// Block eigenvalues by the quadratic formula, cross-checked by power
/// iteration.
pub fn second_eigenvalue(m: &PhaseChainMatrix) -> SecondEigenvalue {
    let b = m.block();
    let (a, bb, c, d) = (b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
    let trace = a + d;
    let det = a * d - bb * c;
    // (a-d)^2 + 4bc avoids cancellation in trace^2 - 4 det.
    let disc = (a - d) * (a - d) + 4.0 * bb * c;
    let (lambda2, other, complex) = if disc >= 0.0 {
        let root = disc.sqrt();
        let hi = (trace + root) / 2.0;
        let lo = if hi != 0.0 { det / hi } else { (trace - root) / 2.0 };
        (hi, lo, false)
    } else {
        let modulus = det.sqrt();
        (modulus, modulus, true)
    };
    SecondEigenvalue {
        lambda2,
        other,
        complex,
        trace,
        det,
        power_iteration: power_iteration(&b),
    }
}

/// Dominant eigenvalue modulus by repeated squaring.
fn power_iteration(b: &Matrix2<f64>) -> f64 {
    let mut p = *b;
    for _ in 0..64 {
        p = p * p;
        let scale = p.amax();
        if scale == 0.0 {
            return 0.0;
        }
        p /= scale;
    }
    let (c0, c1) = (p.column(0).into_owned(), p.column(1).into_owned());
    let v: Vector2<f64> = if c0.norm() >= c1.norm() { c0 } else { c1 };
    if v.norm() == 0.0 {
        return 0.0;
    }
    (b * v).dot(&v) / v.dot(&v)
}

/// Minimiser of the per-time decay of the limit phase chain over epsilon.
///
/// A phase lasts `(1 + eps) n` steps, so the chain decays like
/// `lambda2^{t / ((1 + eps) n)}`; the optimum minimises
/// `lambda2^{1/(1 + eps)}`. The minimiser of `lambda2` alone is reported
/// alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonOptimum {
    pub epsilon: f64,
    /// Second eigenvalue at `epsilon`.
    pub lambda: f64,
    /// `lambda^{1/(1 + epsilon)}`.
    pub rate_per_n: f64,
    pub xi: f64,
    /// Whether the grid values fell then rose, so golden-section was used.
    pub unimodal: bool,
    /// Minimiser of `lambda2` itself.
    pub eigenvalue_argmin: f64,
    pub eigenvalue_min: f64,
}

pub const SCAN_RANGE: (f64, f64) = (0.01, 0.49);
const GRID_POINTS: usize = 500;

fn lambda_limit(epsilon: f64, xi: f64) -> Result<f64> {
    Ok(second_eigenvalue(&phase_matrix_limit(epsilon, xi)?).lambda2)
}

fn rate_limit(epsilon: f64, xi: f64) -> Result<f64> {
    Ok(lambda_limit(epsilon, xi)?.powf(1.0 / (1.0 + epsilon)))
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = SCAN_RANGE;
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
}

/// Second eigenvalue of the limit matrix on `points` evenly spaced values of
/// epsilon across [0.01, 0.49].
pub fn eig_scan(xi: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::param("scan needs at least 2 points"));
    }
    grid(points).map(|e| Ok((e, lambda_limit(e, xi)?))).collect()
}

/// CSV with header `epsilon,lambda2`.
pub fn eig_scan_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("epsilon,lambda2\n");
    for (e, l) in rows {
        let _ = writeln!(out, "{e},{l}");
    }
    out
}

fn is_unimodal(values: &[f64]) -> bool {
    let tol = 1e-14;
    let mut rising = false;
    for w in values.windows(2) {
        if w[1] > w[0] + tol {
            rising = true;
        } else if rising && w[1] < w[0] - tol {
            return false;
        }
    }
    true
}

/// Grid check on [0.01, 0.49], then golden-section to 1e-6 in epsilon if
/// the grid is unimodal, else the grid argmin.
fn minimize(f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64, bool)> {
    let xs: Vec<f64> = grid(GRID_POINTS).collect();
    let values = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if !is_unimodal(&values) {
        return Ok((xs[best], values[best], false));
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(xs.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > 1e-7 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = (a + b) / 2.0;
    Ok((x, f(x)?, true))
}

/// Optimal epsilon for the limit phase chain at slack `xi`.
pub fn optimize_epsilon(xi: f64) -> Result<EpsilonOptimum> {
    if !(xi >= 0.0) {
        return Err(Error::param(format!("xi must be non-negative (got {xi})")));
    }
    let (epsilon, rate_per_n, unimodal) = minimize(|e| rate_limit(e, xi))?;
    let (eigenvalue_argmin, eigenvalue_min, _) = minimize(|e| lambda_limit(e, xi))?;
    Ok(EpsilonOptimum {
        epsilon,
        lambda: lambda_limit(epsilon, xi)?,
        rate_per_n,
        xi,
        unimodal,
        eigenvalue_argmin,
        eigenvalue_min,
    })
}
