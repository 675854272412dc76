//! Distributed proximal gradient with random reshuffling (DPG-RR) over
//! time-varying multi-agent networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`netgraph`]: mixing matrices, periodic graph schedules, multi-step
//!   consensus weights and schedule validation;
//! - [`proxops`]: regularizers and their proximal operators;
//! - [`objectives`]: per-sample smooth losses and the composite objective;
//! - [`sampling`]: per-agent epoch orders (reshuffling, incremental, with
//!   replacement);
//! - [`dpgrr`]: the synchronous epoch engine and the subgradient baseline;
//! - [`reference`]: centralized oracles for the optimum;
//! - [`metrics`]: consensus and suboptimality diagnostics;
//! - [`dataio`]: LIBSVM parsing, partitioning and synthetic data;
//! - [`cli`]: experiment configs and the `run` / `validate` / `oracle` commands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod dpgrr;
pub mod error;
pub mod metrics;
pub mod netgraph;
pub mod objectives;
pub mod proxops;
pub mod reference;
pub mod sampling;
pub mod vecops;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
