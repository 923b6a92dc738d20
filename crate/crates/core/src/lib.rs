//! Flexible-sector base station model.
//!
//! A base station carries `M` directional sector arrays on a common circular
//! track. The track can be rotated in steps of one azimuth bin and antennas
//! can migrate between arrays. This crate holds the allocation-free math:
//!
//! - [`scenario`]: configuration, sector/bin geometry and coverage sets.
//! - [`userdist`]: per-bin Poisson intensities and their per-sector sums.
//! - [`power`]: closed-form average transmit power and the analytical bounds.
//! - [`optimizer`]: antenna allocation, rotation search and bisection over the
//!   common throughput, plus the exhaustive-search oracle.
//! - [`idealized`]: results for arbitrarily adjustable user distributions,
//!   including the water-filling user split.
//!
//! The crate is `no_std` and only needs `alloc`. IO, Monte-Carlo sampling and
//! the experiment runner live in the `flexsector` crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod idealized;
pub mod optimizer;
pub mod power;
pub mod scenario;
pub mod userdist;

pub use error::{Error, Result};
pub use idealized::{ideal_total_power, joint_ideal_optimum, waterfilling_user_distribution, UserDistributionPlan};
pub use optimizer::{
    composition_count, continuous_allocation, integer_allocation, AntennaAllocation, Compositions, PowerMinimum, Problem,
    Scheme, Solution,
};
pub use power::{
    average_snr, per_user_power, power_lower_bound, sector_avg_power, throughput_upper_bound, total_power,
    PowerConstants, RateTarget, Variant,
};
pub use scenario::{dbm_to_watt, Rotation, Scenario, Violation};
pub use userdist::{
    build_intensities, hotspot_intensities_from_ratios, lambda_variance, lambda_vector, sector_lambda, BinIntensities,
    HotspotSpec,
};
