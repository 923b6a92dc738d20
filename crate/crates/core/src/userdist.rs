//! Per-bin average user counts and their aggregation into sectors.
//!
//! Users in bin `b` form an independent Poisson process with mean `λ̂_b`, so
//! the number of users in a sector is Poisson with the sum of its bins' means.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scenario::{Rotation, Scenario};

/// A hotspot adds `intensity` users per bin on `span` bins starting at
/// `start_bin`, wrapping modulo `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotspotSpec {
    pub start_bin: usize,
    pub span: usize,
    pub intensity: f64,
}

impl HotspotSpec {
    fn check(&self, num_bins: usize) -> Result<()> {
        if self.start_bin >= num_bins {
            return Err(Error::HotspotStartOutOfRange { start: self.start_bin, num_bins });
        }
        if self.span == 0 || self.span > num_bins {
            return Err(Error::HotspotSpan { span: self.span, num_bins });
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::NegativeIntensity(self.intensity));
        }
        Ok(())
    }

    /// Bins covered by this hotspot.
    pub fn bins(&self, num_bins: usize) -> impl Iterator<Item = usize> {
        let start = self.start_bin;
        (0..self.span).map(move |l| (start + l) % num_bins)
    }
}

/// Average number of users in every bin, `λ̂_0 .. λ̂_{B-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinIntensities(Vec<f64>);

impl BinIntensities {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = lambdas.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::NegativeIntensity(bad));
        }
        Ok(Self(lambdas))
    }

    pub fn uniform(num_bins: usize, per_bin: f64) -> Result<Self> {
        Self::new(vec![per_bin; num_bins])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `λ_sum`, the mean number of users in the whole coverage area.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    fn check_len(&self, scenario: &Scenario) -> Result<()> {
        if self.0.len() != scenario.num_bins {
            return Err(Error::LengthMismatch { expected: scenario.num_bins, actual: self.0.len() });
        }
        Ok(())
    }
}

/// Background plus hotspot overlay. Overlapping hotspots add.
pub fn build_intensities(num_bins: usize, background: f64, hotspots: &[HotspotSpec]) -> Result<BinIntensities> {
    if !(background >= 0.0 && background.is_finite()) {
        return Err(Error::NegativeIntensity(background));
    }
    let mut lambdas = vec![background; num_bins];
    for h in hotspots {
        h.check(num_bins)?;
        for b in h.bins(num_bins) {
            lambdas[b] += h.intensity;
        }
    }
    BinIntensities::new(lambdas)
}

/// Per-bin hotspot intensities from relative weights, scaled so that the
/// background plus all hotspots carry `total_users` on average.
///
/// Hotspot `i` gets `x * ratios[i]` users per bin with `x` chosen so that
/// `B * background + x * Σ ratios[i] * spans[i] = total_users`. With `B = 30`,
/// one background user per bin, 100 users, ratios `1:2:4` and spans `3,4,6`
/// this yields `[2, 4, 8]`.
pub fn hotspot_intensities_from_ratios(
    num_bins: usize,
    total_users: f64,
    background: f64,
    ratios: &[f64],
    spans: &[usize],
) -> Result<Vec<f64>> {
    if ratios.len() != spans.len() {
        return Err(Error::LengthMismatch { expected: ratios.len(), actual: spans.len() });
    }
    let remaining = total_users - num_bins as f64 * background;
    if !(remaining >= 0.0) {
        return Err(Error::NegativeIntensity(remaining));
    }
    let weight: f64 = ratios.iter().zip(spans).map(|(r, &s)| r * s as f64).sum();
    if ratios.is_empty() || remaining == 0.0 {
        return Ok(vec![0.0; ratios.len()]);
    }
    if !(weight > 0.0) {
        return Err(Error::NonPositive("hotspot ratio weight"));
    }
    Ok(ratios.iter().map(|r| remaining * r / weight).collect())
}

/// `λ_m(r)`: sum of the bin intensities covered by sector `m` (1-based).
pub fn sector_lambda(bins: &BinIntensities, scenario: &Scenario, r: Rotation, m: usize) -> Result<f64> {
    bins.check_len(scenario)?;
    let start = scenario.starting_bin(r, m)?;
    Ok(scenario.coverage_iter(start).map(|b| bins.0[b]).sum())
}

/// `[λ_1(r), .., λ_M(r)]`.
pub fn lambda_vector(bins: &BinIntensities, scenario: &Scenario, r: Rotation) -> Result<Vec<f64>> {
    (1..=scenario.num_sectors).map(|m| sector_lambda(bins, scenario, r, m)).collect()
}

/// Sample variance of the entries, divisor `M - 1`.
pub fn lambda_variance(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewEntries(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / (n - 1) as f64)
}
