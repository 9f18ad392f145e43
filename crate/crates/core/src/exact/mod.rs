//! Exact evolution of the joint law of k tracked cards.
//!
//! The positions of the tracked cards form a Markov chain on ordered tuples
//! of distinct positions: the right hand is uniform and the left hand depends
//! only on time. Evolving that chain exactly gives ground-truth TV curves and
//! partial mixing times for decks small enough to hold the tuple space in
//! memory.

mod curve;
mod dist;
mod indexer;
mod matrix;

pub use curve::{
    cutoff_center, cutoff_profile, default_horizon, exact_tv_curve, partial_mixing_time, reduction_slack,
    worst_case_curve, worst_case_starts, CurveMeta, CutoffRow, ExactOptions, Extremum, MixingTime, SlackRow, Start,
    StartStrategy, TVCurve, WorstCaseTracker, DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_SAMPLED_STARTS,
};
pub use dist::{lumped_step, tv_distance, uniform_k_marginal, KTupleDistribution, LumpedEvolver, MASS_TOLERANCE};
pub use indexer::{falling_factorial, KTupleIndexer, DEFAULT_STATE_CAP};
pub use matrix::single_card_matrix;
