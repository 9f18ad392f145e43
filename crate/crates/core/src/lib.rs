//! Simulation and exact analysis of k-card partial mixing for semi-random
//! transposition shuffles.
//!
//! - [`perm`], [`rule`], [`shuffle`], [`rng`]: decks, left-hand rules,
//!   single steps and seedable random streams.
//! - [`exact`]: exact evolution of the joint law of k tracked cards and
//!   worst-case TV curves, partial mixing times and cutoff profiles.
//! - [`mc`]: Monte Carlo estimators and executable coupling constructions.
//! - [`cyclic`]: the phase-chain analysis behind the cyclic-to-random
//!   one-card bound.

pub mod cyclic;
pub mod error;
pub mod exact;
pub mod mc;
pub mod perm;
pub mod rng;
pub mod rule;
pub mod shuffle;
pub mod stats;

pub use error::{Error, Result};
pub use perm::Permutation;
pub use rng::RandomStream;
pub use rule::{LeftHand, RuleKind, ShuffleRule};
pub use shuffle::{run_trajectory, step, step_in_place, StepRecord, Trajectory};

/// Library version, echoed into metadata sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
