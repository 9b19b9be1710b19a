//! Exact steady-state throughput of the ARF, AARF and PAARF rate adaptation
//! algorithms over independent per-rate Bernoulli channels.
//!
//! Each algorithm is modeled as a semi-Markov process whose states are the
//! bit rates (plus probe/fall-back stages for AARF and back-off counters when
//! IEEE 802.11b DCF overhead is accounted for). The analytic solvers in
//! [`arf`], [`aarf`] and [`overhead`] compute stationary probabilities, mean
//! sojourn times and per-rate time fractions; [`sim`] runs the same algorithms
//! as literal per-packet state machines and serves as an independent check.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod aarf;
pub mod arf;
mod error;
pub mod linalg;
pub mod micro;
pub mod model;
pub mod overhead;
pub mod sim;
mod state;
mod throughput;

pub use error::AnalysisError;
pub use model::{
    AarfParams, Algorithm, AlgorithmKind, ArfParams, ChannelModel, LengthDistribution,
    MacOverheadParams, RateLadder, Scenario, TrafficModel, ValidationError, ValidationErrors,
};
pub use state::StateId;
pub use throughput::{analyze, ChainSolution, ThroughputReport};
