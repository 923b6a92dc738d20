//! Closed-form average transmit power and the analytical bounds.
//!
//! With `K ~ Poisson(λ)` users uniformly spread over the annulus
//! `[d_min, d_max]`, Rayleigh fading and orthogonal resource sharing inside a
//! sector, the mean total power needed to give every user rate `R̄` at outage
//! `P̄_out` is `(ν₀ σ² / (τ M N_m)) E[2^{K R̄} - 1]`. The Poisson moment
//! generating function turns the expectation into `e^{γ̄ λ} - 1` with
//! `γ̄ = 2^R̄ - 1`. The published form drops the `- 1`; both are available
//! through [`Variant`].

use crate::error::{Error, Result};
use crate::math;
use crate::scenario::Scenario;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Radio constants shared by every power formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConstants {
    /// `-ln(1 - P̄_out)`.
    pub tau: f64,
    /// Channel power gain at 1 m, `(4π f_c / c)^-2`.
    pub beta0: f64,
    /// Path loss averaged over the annulus, divided by `β₀`.
    pub nu0: f64,
    pub noise_watt: f64,
}

impl PowerConstants {
    pub fn derive(scenario: &Scenario) -> Self {
        let tau = -math::ln(1.0 - scenario.max_outage);
        let k = 4.0 * core::f64::consts::PI * scenario.carrier_freq / SPEED_OF_LIGHT;
        let beta0 = 1.0 / (k * k);
        let e = scenario.pathloss_exponent / 2.0 + 1.0;
        let h2 = scenario.height * scenario.height;
        let outer = math::powf(scenario.d_max * scenario.d_max + h2, e);
        let inner = math::powf(scenario.d_min * scenario.d_min + h2, e);
        let area = scenario.d_max * scenario.d_max - scenario.d_min * scenario.d_min;
        let nu0 = (outer - inner) / (beta0 * area * e);
        Self { tau, beta0, nu0, noise_watt: scenario.noise_power_watt() }
    }

    /// `ν₀ σ² / τ`, the factor in front of every power expression.
    fn scale(&self) -> f64 {
        self.nu0 * self.noise_watt / self.tau
    }
}

/// Target common throughput together with the SNR it requires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget {
    rate: f64,
    snr: f64,
}

impl RateTarget {
    /// `rate` in bits/s/Hz; the required SNR is `2^rate - 1`.
    pub fn new(rate: f64) -> Self {
        Self { rate, snr: math::powf(2.0, rate) - 1.0 }
    }

    /// Target whose required SNR is `snr`.
    pub fn from_snr(snr: f64) -> Self {
        Self { rate: math::log2(1.0 + snr), snr }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }
}

/// Which form of the sector power expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Variant {
    /// `e^{γ̄λ} / γ_m`. Slightly above the expectation; the default.
    #[default]
    Paper,
    /// `(e^{γ̄λ} - 1) / γ_m`, the exact expectation.
    Exact,
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Variant::Paper),
            "exact" => Ok(Variant::Exact),
            other => Err(Error::UnknownVariant(other.into())),
        }
    }
}

/// Average SNR of sector `m`, `τ M N_m / (ν₀ σ²)`.
pub fn average_snr(consts: &PowerConstants, num_sectors: usize, antennas: f64) -> f64 {
    consts.tau * num_sectors as f64 * antennas / (consts.nu0 * consts.noise_watt)
}

/// Minimum power for one of `users` users at horizontal distance `distance`
/// so that its outage at rate `R̄` equals the configured maximum.
pub fn per_user_power(
    consts: &PowerConstants,
    scenario: &Scenario,
    antennas: usize,
    users: usize,
    distance: f64,
    target: RateTarget,
) -> Result<f64> {
    if users == 0 {
        return Err(Error::NoUsers);
    }
    if antennas == 0 {
        return Err(Error::EmptyArray);
    }
    let k = users as f64;
    let pathloss = math::powf(distance * distance + scenario.height * scenario.height, scenario.pathloss_exponent / 2.0);
    let excess = math::powf(2.0, k * target.rate()) - 1.0;
    Ok(consts.noise_watt * excess * pathloss
        / (consts.tau * antennas as f64 * scenario.num_sectors as f64 * consts.beta0 * k))
}

/// `ln` of the λ-dependent factor of the sector power: `x` for the `Paper`
/// form and `ln(e^x - 1)` for the exact one, with `x = γ̄λ`.
pub(crate) fn ln_growth(x: f64, variant: Variant) -> f64 {
    match variant {
        Variant::Paper => x,
        Variant::Exact if x == 0.0 => f64::NEG_INFINITY,
        // ln(e^x - 1) = x + ln(1 - e^-x)
        Variant::Exact if x > 20.0 => x + libm::log1p(-math::exp(-x)),
        Variant::Exact => math::ln(libm::expm1(x)),
    }
}

/// `ln` of the sector power, finite even where the power itself overflows.
/// Returns `-inf` for a zero power.
pub(crate) fn ln_sector_avg_power(
    consts: &PowerConstants,
    num_sectors: usize,
    antennas: f64,
    lambda: f64,
    target: RateTarget,
    variant: Variant,
) -> f64 {
    ln_growth(target.snr() * lambda, variant) - math::ln(average_snr(consts, num_sectors, antennas))
}

/// Minimum mean total power of a sector with `antennas` antennas and `lambda`
/// users on average.
pub fn sector_avg_power(
    consts: &PowerConstants,
    num_sectors: usize,
    antennas: usize,
    lambda: f64,
    target: RateTarget,
    variant: Variant,
) -> Result<f64> {
    if antennas == 0 {
        return Err(Error::EmptyArray);
    }
    Ok(math::exp(ln_sector_avg_power(consts, num_sectors, antennas as f64, lambda, target, variant)))
}

/// Sum of the sector powers for an allocation and the matching per-sector
/// user means.
pub fn total_power(
    consts: &PowerConstants,
    num_sectors: usize,
    allocation: &[usize],
    lambdas: &[f64],
    target: RateTarget,
    variant: Variant,
) -> Result<f64> {
    if allocation.len() != lambdas.len() {
        return Err(Error::LengthMismatch { expected: lambdas.len(), actual: allocation.len() });
    }
    allocation
        .iter()
        .zip(lambdas)
        .map(|(&n, &l)| sector_avg_power(consts, num_sectors, n, l, target, variant))
        .sum()
}

/// Lower bound on the total power: equal users and equal continuous antennas,
/// `(M ν₀ σ² / (τ N)) e^{γ̄ λ_sum / M}`.
pub fn power_lower_bound(
    consts: &PowerConstants,
    num_sectors: usize,
    total_antennas: usize,
    lambda_sum: f64,
    target: RateTarget,
) -> f64 {
    let m = num_sectors as f64;
    m * consts.scale() / total_antennas as f64 * math::exp(target.snr() * lambda_sum / m)
}

/// Upper bound on the common throughput, reached when the lower power bound
/// meets the budget.
///
/// Fails with [`Error::PowerBudgetBelowFloor`] when the budget cannot even
/// pay for the zero-rate floor of the lower bound.
pub fn throughput_upper_bound(
    consts: &PowerConstants,
    num_sectors: usize,
    total_antennas: usize,
    lambda_sum: f64,
    max_power_watt: f64,
) -> Result<f64> {
    let m = num_sectors as f64;
    let arg = max_power_watt * total_antennas as f64 / (m * consts.scale());
    if arg < 1.0 || !arg.is_finite() {
        return Err(Error::PowerBudgetBelowFloor);
    }
    if !(lambda_sum > 0.0) {
        return Err(Error::NonPositive("lambda_sum"));
    }
    Ok(math::log2(1.0 + m / lambda_sum * math::ln(arg)))
}
