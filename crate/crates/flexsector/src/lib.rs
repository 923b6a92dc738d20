//! Scenario files, Monte-Carlo validation and the experiment runner for the
//! flexible-sector base station model in [`flexsector_core`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod montecarlo;

pub use config::{Config, ConfigError, UserModel};
pub use montecarlo::{Estimate, MCConfig};
