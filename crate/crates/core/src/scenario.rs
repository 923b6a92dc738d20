//! System configuration and sector/bin geometry.
//!
//! The azimuth plane is split into `B = L * M` equal bins. Sector `m`
//! (1-based) starts at bin `r + (m - 1) * L` and covers `L` consecutive bins,
//! wrapping modulo `B`. The rotation `r` only ranges over `0..L`; larger values
//! merely relabel sectors.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// Converts decibel-milliwatts to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    math::powf(10.0, (dbm - 30.0) / 10.0)
}

/// Full system configuration. Powers are kept in dBm as configured; use
/// [`Scenario::max_power_watt`] and [`Scenario::noise_power_watt`] for the
/// linear values every formula works with.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of sectors `M`.
    pub num_sectors: usize,
    /// Bins per sector `L`.
    pub bins_per_sector: usize,
    /// Total bins `B`, must equal `L * M`.
    pub num_bins: usize,
    /// Total antennas `N` at the base station.
    pub total_antennas: usize,
    pub max_power_dbm: f64,
    /// Maximum outage probability per link.
    pub max_outage: f64,
    pub noise_power_dbm: f64,
    /// Inner coverage radius in meters.
    pub d_min: f64,
    /// Outer coverage radius in meters.
    pub d_max: f64,
    /// Height of the array reference point in meters.
    pub height: f64,
    pub pathloss_exponent: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Bisection accuracy on the common throughput, bits/s/Hz.
    pub bisection_tolerance: f64,
}

impl Default for Scenario {
    /// Three sectors of ten bins, 300 antennas, 40 dBm budget at 24 GHz.
    fn default() -> Self {
        Self {
            num_sectors: 3,
            bins_per_sector: 10,
            num_bins: 30,
            total_antennas: 300,
            max_power_dbm: 40.0,
            max_outage: 0.01,
            noise_power_dbm: -114.0,
            d_min: 20.0,
            d_max: 100.0,
            height: 20.0,
            pathloss_exponent: 2.5,
            carrier_freq: 24e9,
            bisection_tolerance: 1e-4,
        }
    }
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Index of the bin where the first sector edge sits, in `0..L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rotation(usize);

impl Rotation {
    pub fn new(r: usize, scenario: &Scenario) -> Result<Self> {
        if r >= scenario.bins_per_sector {
            return Err(Error::RotationOutOfRange { rotation: r, bins_per_sector: scenario.bins_per_sector });
        }
        Ok(Self(r))
    }

    pub const ZERO: Rotation = Rotation(0);

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Scenario {
    /// Every violated invariant, empty when the scenario is usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &'static str, message: String| out.push(Violation { field, message });

        if self.num_sectors == 0 {
            push("num_sectors", "M must be positive".into());
        }
        if self.bins_per_sector == 0 {
            push("bins_per_sector", "L must be positive".into());
        }
        if self.num_bins != self.bins_per_sector * self.num_sectors {
            push(
                "num_bins",
                format!("B ≠ L·M ({} ≠ {}·{})", self.num_bins, self.bins_per_sector, self.num_sectors),
            );
        }
        if self.total_antennas < self.num_sectors.max(1) {
            push("total_antennas", format!("N ≥ M required ({} < {})", self.total_antennas, self.num_sectors));
        }
        if !(self.max_outage > 0.0 && self.max_outage < 1.0) {
            push("max_outage", format!("outage probability must lie in (0,1), got {}", self.max_outage));
        }
        if !(self.d_min > 0.0) {
            push("d_min", format!("d_min must be positive, got {}", self.d_min));
        }
        if !(self.d_min < self.d_max) {
            push("d_max", format!("d_min < d_max required ({} ≥ {})", self.d_min, self.d_max));
        }
        if !(self.height >= 0.0 && self.height.is_finite()) {
            push("height", format!("height must be finite and non-negative, got {}", self.height));
        }
        if !(self.pathloss_exponent > 0.0) {
            push("pathloss_exponent", format!("α₀ must be positive, got {}", self.pathloss_exponent));
        }
        if !(self.carrier_freq > 0.0) {
            push("carrier_freq", format!("carrier frequency must be positive, got {}", self.carrier_freq));
        }
        if !(self.bisection_tolerance > 0.0) {
            push("bisection_tolerance", format!("ε must be positive, got {}", self.bisection_tolerance));
        }
        if !self.max_power_dbm.is_finite() {
            push("max_power_dbm", "must be finite".into());
        }
        if !self.noise_power_dbm.is_finite() {
            push("noise_power_dbm", "must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Angular width of one sector, `2π / M`.
    pub fn sector_width(&self) -> f64 {
        2.0 * PI / self.num_sectors as f64
    }

    /// Rotation step, `2π / B`.
    pub fn rotation_step(&self) -> f64 {
        2.0 * PI / self.num_bins as f64
    }

    pub fn max_power_watt(&self) -> f64 {
        dbm_to_watt(self.max_power_dbm)
    }

    pub fn noise_power_watt(&self) -> f64 {
        dbm_to_watt(self.noise_power_dbm)
    }

    /// All admissible rotations, `0..L`.
    pub fn rotations(&self) -> impl Iterator<Item = Rotation> {
        (0..self.bins_per_sector).map(Rotation)
    }

    fn check_sector(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.num_sectors {
            return Err(Error::SectorOutOfRange { index: m, num_sectors: self.num_sectors });
        }
        Ok(())
    }

    /// First bin of sector `m` (1-based), `r + (m - 1) L`, not reduced mod `B`.
    pub fn starting_bin(&self, r: Rotation, m: usize) -> Result<usize> {
        self.check_sector(m)?;
        Ok(r.0 + (m - 1) * self.bins_per_sector)
    }

    /// Bins covered by sector `m` (1-based), in order of increasing offset.
    pub fn coverage_set(&self, r: Rotation, m: usize) -> Result<Vec<usize>> {
        let start = self.starting_bin(r, m)?;
        Ok(self.coverage_iter(start).collect())
    }

    pub(crate) fn coverage_iter(&self, start: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.bins_per_sector).map(move |l| (start + l) % self.num_bins)
    }

    /// Directional gain `2π / Φ = M` inside the sector, zero outside.
    pub fn antenna_gain(&self, user_in_sector: bool) -> f64 {
        if user_in_sector {
            2.0 * PI / self.sector_width()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small(m: usize, l: usize) -> Scenario {
        Scenario { num_sectors: m, bins_per_sector: l, num_bins: m * l, total_antennas: 3 * m, ..Scenario::default() }
    }

    #[test]
    fn starting_bin_examples() {
        let s = small(3, 4);
        let r1 = Rotation::new(1, &s).unwrap();
        assert_eq!(s.starting_bin(r1, 1).unwrap(), 1);
        assert_eq!(s.starting_bin(Rotation::ZERO, 1).unwrap(), 0);
        assert_eq!(s.starting_bin(r1, 3).unwrap(), 9);
        assert!(matches!(s.starting_bin(r1, 0), Err(Error::SectorOutOfRange { .. })));
        assert!(matches!(s.starting_bin(r1, 4), Err(Error::SectorOutOfRange { .. })));
    }

    #[test]
    fn coverage_set_examples() {
        let s = small(3, 4);
        let r1 = Rotation::new(1, &s).unwrap();
        assert_eq!(s.coverage_set(r1, 1).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(s.coverage_set(r1, 3).unwrap(), vec![9, 10, 11, 0]);
        let omni = small(1, 4);
        assert_eq!(omni.coverage_set(Rotation::ZERO, 1).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rotation_domain_is_zero_to_l() {
        let s = small(3, 4);
        assert!(Rotation::new(3, &s).is_ok());
        assert!(matches!(Rotation::new(4, &s), Err(Error::RotationOutOfRange { .. })));
        assert_eq!(s.rotations().count(), 4);
    }

    #[test]
    fn antenna_gain_examples() {
        assert!((small(3, 4).antenna_gain(true) - 3.0).abs() < 1e-12);
        assert!((small(1, 4).antenna_gain(true) - 1.0).abs() < 1e-12);
        assert_eq!(small(3, 4).antenna_gain(false), 0.0);
    }

    #[test]
    fn azimuth_average_gain_is_one() {
        for m in 1..=8 {
            let s = small(m, 2);
            let avg = s.antenna_gain(true) * s.sector_width() / (2.0 * PI);
            assert!((avg - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_and_cyclic_shift_exhaustive() {
        for m in 1..=5 {
            for l in 1..=5 {
                let s = small(m, l);
                let b = s.num_bins;
                for r in s.rotations() {
                    let mut seen = vec![0u32; b];
                    for sec in 1..=m {
                        let set = s.coverage_set(r, sec).unwrap();
                        assert_eq!(set.len(), l);
                        for bin in set {
                            seen[bin] += 1;
                        }
                    }
                    assert!(seen.iter().all(|&c| c == 1), "M={m} L={l} r={r}");

                    // rotating by j whole sectors relabels sectors
                    for j in 0..m {
                        for sec in 1..=m {
                            let shifted_start = (r.get() + l * j) % b + (sec - 1) * l;
                            let shifted: Vec<usize> = s.coverage_iter(shifted_start).collect();
                            let relabeled = s.coverage_set(r, (sec + j - 1) % m + 1).unwrap();
                            assert_eq!(shifted, relabeled);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn validate_examples() {
        assert!(small(3, 4).validate().is_ok());

        let bad_b = Scenario { num_bins: 10, ..small(3, 4) };
        let v = bad_b.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("B ≠ L·M"));

        let bad_d = Scenario { d_min: 100.0, d_max: 20.0, ..small(3, 4) };
        let v = bad_d.violations();
        assert!(v.iter().any(|x| x.message.contains("d_min < d_max required")));
    }

    #[test]
    fn validate_collects_every_violation() {
        let s = Scenario {
            num_bins: 7,
            total_antennas: 1,
            max_outage: 1.0,
            pathloss_exponent: 0.0,
            bisection_tolerance: -1.0,
            ..small(3, 4)
        };
        let fields: Vec<_> = s.violations().into_iter().map(|v| v.field).collect();
        assert_eq!(fields, ["num_bins", "total_antennas", "max_outage", "pathloss_exponent", "bisection_tolerance"]);
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(v)) if v.len() == 5));
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(40.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_watt(-114.0) / 3.981_071_705_534_972e-15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derived_angles() {
        let s = small(3, 4);
        assert!((s.sector_width() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((s.rotation_step() - 2.0 * PI / 12.0).abs() < 1e-15);
    }
}
