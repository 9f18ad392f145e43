use nalgebra::DMatrix;

use crate::rule::ShuffleRule;

/// Transition matrix of a single card's position at time `t`.
///
/// Row `p - 1` is the law of the next position of a card now at position `p`.
/// A card at `p` moves to `q != p` either when the left hand takes `p` and
/// the right hand `q`, or the other way round.
pub fn single_card_matrix(rule: &ShuffleRule, t: u64) -> DMatrix<f64> {
    let n = rule.n();
    let w = rule.left_hand(t).weights(n);
    let inv = 1.0 / n as f64;
    let mut m = DMatrix::zeros(n, n);
    for p in 0..n {
        let mut off = 0.0;
        for q in 0..n {
            if q != p {
                let x = (w[p] + w[q]) * inv;
                m[(p, q)] = x;
                off += x;
            }
        }
        m[(p, p)] = 1.0 - off;
    }
    m
}
