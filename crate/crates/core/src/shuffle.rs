use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::RandomStream;
use crate::rule::ShuffleRule;

/// The two positions chosen at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub left: usize,
    pub right: usize,
}

fn check_dims(perm: &Permutation, rule: &ShuffleRule) -> Result<()> {
    if perm.len() != rule.n() {
        return Err(Error::Config(format!(
            "deck has {} cards but the rule is for {}",
            perm.len(),
            rule.n()
        )));
    }
    Ok(())
}

/// Applies one shuffle step at time `t` in place.
pub fn step_in_place(perm: &mut Permutation, rule: &ShuffleRule, t: u64, rng: &mut RandomStream) -> Result<StepRecord> {
    check_dims(perm, rule)?;
    if t == 0 {
        return Err(Error::param("step times start at 1"));
    }
    let left = rule.sample_left(t, rng);
    let right = rng.position(rule.n());
    perm.transpose_positions(left, right);
    debug_assert!(perm.is_consistent());
    Ok(StepRecord { t, left, right })
}

/// Applies one shuffle step at time `t`, returning the new deck.
pub fn step(perm: &Permutation, rule: &ShuffleRule, t: u64, rng: &mut RandomStream) -> Result<(Permutation, StepRecord)> {
    let mut next = perm.clone();
    let rec = step_in_place(&mut next, rule, t, rng)?;
    Ok((next, rec))
}

/// A run of `t_max` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub end: Permutation,
    pub records: Vec<StepRecord>,
    /// Positions of the tracked cards after each step, when requested.
    pub trace: Option<Vec<Vec<usize>>>,
}

/// Runs `t_max` steps from `start`, optionally tracing the positions of
/// `tracked` cards after every step.
pub fn run_trajectory(
    rule: &ShuffleRule,
    start: &Permutation,
    t_max: u64,
    rng: &mut RandomStream,
    tracked: Option<&[usize]>,
) -> Result<Trajectory> {
    check_dims(start, rule)?;
    if let Some(cards) = tracked {
        if let Some(&bad) = cards.iter().find(|&&c| c == 0 || c > rule.n()) {
            return Err(Error::param(format!("tracked card {bad} outside 1..={}", rule.n())));
        }
    }
    let mut deck = start.clone();
    let mut records = Vec::with_capacity(t_max as usize);
    let mut trace = tracked.map(|_| Vec::with_capacity(t_max as usize));
    for t in 1..=t_max {
        records.push(step_in_place(&mut deck, rule, t, rng)?);
        if let (Some(tr), Some(cards)) = (trace.as_mut(), tracked) {
            tr.push(deck.positions_of(cards));
        }
    }
    Ok(Trajectory {
        end: deck,
        records,
        trace,
    })
}
