//! Guesswork over noisy channels.
//!
//! A secret sequence is drawn from a memoryless source; a guesser submits
//! sequence guesses that each pass through a memoryless noisy channel before
//! being compared with the secret. This crate computes the optimal
//! exponential growth rate of the guess-count moments `E[G^rho]`, detects the
//! phase transition at which channel noise stops costing anything, implements
//! the optimal and universal randomized guessing schemes, and evaluates
//! finite-length moments exactly and by simulation.
//!
//! The main entry points:
//!
//! - [`exponent::solve_exponent`] — the exponent `E(rho)` as a convex
//!   minimization over guess input laws, with optimizer and certificate.
//! - [`gamma::exponent_via_types`] — the same exponent through its
//!   type-expression form; an independent oracle for the solver.
//! - [`samplers`] — the designed i.i.d. scheme and the universal
//!   empirical-entropy scheme.
//! - [`simulator`] — exact and Monte-Carlo moments `E[G^rho]` at finite
//!   length, and exponent curves over block length.
//! - [`cli`] — the command surface used by the `guesswork` binary.
//!
//! All information quantities are in nats; conversions to bits happen only
//! at the presentation layer. Operations are pure functions of immutable
//! values and safe for concurrent use; stochastic operations take explicit
//! counter-based RNG streams (see [`samplers::stream_rng`]).

pub mod cli;
pub mod dist;
pub mod error;
pub mod exponent;
pub mod figures;
pub mod gamma;
pub mod samplers;
pub mod simulator;
pub mod types;
pub mod verify;

pub use dist::{
    entropy, kl_divergence, output_distribution, weighted_conditional_divergence, Channel,
    Distribution, GuessingProblem,
};
pub use error::{Error, Result};
pub use exponent::{
    bsc_critical_q, bsc_critical_rho, critical_rho_general, exponent_with_side_info,
    hull_membership, noiseless_exponent, objective, solve_exponent, tilted_distribution,
    ExponentResult, HullWitness, SolverOptions,
};
pub use gamma::{exponent_via_types, gamma_min, gamma_pair, GammaOptions, GammaResult, GridSpec};
pub use samplers::{
    conditional_universal_log_prob, log_success_probability, sample_iid, stream_rng,
    success_probability, GuessStrategy, UniversalSampler,
};
pub use simulator::{
    exact_moment, exponent_curve, fixed_list_moment, geometric_moment, simulate_moment,
    CurveMode, MomentMethod, MomentReport, StrategyFamily,
};
pub use types::{
    empirical_distribution, enumerate_types, log_type_class_size, TypeComposition,
};
