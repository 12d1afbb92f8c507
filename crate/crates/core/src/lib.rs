//! Capacity of finite block-memoryless channels with noisy causal side
//! information at the transmitter and the receiver.
//!
//! The transmitter sees CSIT `u`, the receiver sees CSIR `v`, both jointly
//! distributed with the channel state within each block of `n0` uses. Coding
//! over causal within-block strategies (functions from CSIT prefixes to
//! inputs) turns the channel into a state-free one, whose capacity per use is
//! `max_{p(t)} I(T; Y | V) / n0`.
//!
//! - [`channel`]: channel description, validation and the observation kernel
//! - [`strategy`]: strategy enumeration and the equivalent channel
//! - [`solver`]: alternating maximization and a brute-force oracle
//! - [`reduction`]: the special case of CSIT determined by the CSIR
//! - [`sim`]: Monte Carlo random-coding simulation
//! - [`specfile`]: the text spec format

pub mod channel;
pub mod error;
pub mod info;
pub mod random;
pub mod reduction;
pub mod sim;
pub mod solver;
pub mod specfile;
pub mod strategy;
pub mod table;
pub mod tuple;

pub use channel::{
    compose_observation_kernel, csit_marginal, validate_spec, BlockChannelSpec, Dims,
    ObservationKernel, ValidationReport, Violation,
};
pub use error::{Error, Result};
pub use solver::{blahut_arimoto, capacity_bm, CapacityResult, SolverConfig};
pub use strategy::{
    build_equivalent_channel, strategy_count, EquivalentChannel, Strategy, StrategyIndex,
    StrategySpace, DEFAULT_STRATEGY_CAP,
};
pub use table::ConditionalTable;
