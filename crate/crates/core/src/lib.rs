//! Exact and statistical verification of closed-loop probing of discrete
//! memoryless channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: alphabets, pmfs, channel laws, sampling and empirical types.
//! * [`tree`]: adaptive input strategies as labeled `|Y|`-ary trees, their
//!   scores and success probabilities, the threshold strategy, exhaustive
//!   enumeration and the well-ordering surgery.
//! * [`typicality`]: exhaustive and Monte Carlo checks of the conditional-type
//!   concentration bound `1/(4 n mu^2)` and of the martingale property of the
//!   score.
//! * [`isac`]: state-dependent channels with a sensing transmitter: the
//!   per-letter optimal estimator, rate/distortion frontier, code simulation
//!   and the finite-n change-of-measure quantities.
//! * [`experiments`]: config-driven batch runs writing CSV artifacts.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod isac;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod typicality;

pub use error::{Error, Result};

/// A symbol is a dense index into its alphabet.
pub type Symbol = usize;

/// Tolerance for identities that hold exactly in exact arithmetic and are
/// evaluated by enumeration in `f64`.
pub const EXACT_TOL: f64 = 1e-12;
