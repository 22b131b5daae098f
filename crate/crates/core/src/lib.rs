//! Release-duration schedules for a storage-limited molecular OOK transmitter
//! over a Poisson channel: optimization, exact and bounded error
//! probabilities, ISI analysis and a Monte Carlo link simulator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod error;
pub mod experiment;
pub mod isi;
pub mod lambert;
pub mod markov;
pub mod noisi;
pub mod params;
pub mod poisson;
pub mod schedule;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result};
pub use params::SystemParams;
pub use poisson::{dpe1, ml_fixed_threshold, pe_given_0, pe_given_1, poisson_pmf};
pub use schedule::{
    validate_schedule, ErrorReport, FeasibilityReport, IncrementSchedule, StateError,
    ThresholdPolicy,
};
pub use sim::{simulate, SimReport};
pub use strategy::{Strategy, StrategySpec};
