//! Phase-chain analysis of the cyclic-to-random shuffle: the `min(H, R)`
//! time model, the `p_s` recursion, the close / far / success matrices and
//! their second eigenvalue, and the resulting one-card bound and mixing-time
//! solver.

mod bound;
mod phase;
mod recursion;
mod tau_hat;

pub use bound::{
    cyclic_mixing_upper, cyclic_one_card_bound, default_cyclic_fit, fit_cyclic_constant, CyclicBoundParams, CyclicFit,
    CyclicMixingReport, DEFAULT_FIT_N,
};
pub use phase::{
    eig_scan, eig_scan_csv, optimize_epsilon, phase_matrix_exact, phase_matrix_limit, second_eigenvalue,
    EpsilonOptimum, PhaseChainMatrix, SecondEigenvalue, SCAN_RANGE, STATES,
};
pub use recursion::{p_recursion, PRecursion};
pub use tau_hat::{tau_hat_moments, TauHatModel, TauHatMoments};
