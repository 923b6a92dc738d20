//! Common-throughput maximization.
//!
//! For a fixed rate the problem reduces to minimizing total power over the
//! rotation and the antenna allocation. The continuous allocation minimizing
//! `Σ ζ_m / N_m` under `Σ N_m ≤ N` is `N_m ∝ √ζ_m`; rounding it down after
//! pre-assigning one antenna per sector gives the integer allocation. The
//! rotation is found by enumerating all `L` candidates, and the rate by
//! bisection on power feasibility.
//!
//! Every search breaks ties towards the smallest rotation and, for the
//! exhaustive oracle, the lexicographically smallest allocation.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::power::{self, PowerConstants, RateTarget, Variant};
use crate::scenario::{Rotation, Scenario};
use crate::userdist::{lambda_variance, lambda_vector, BinIntensities};

/// Default cap on `L * C(N-1, M-1)` for the exhaustive oracle.
pub const DEFAULT_ESM_CAP: u128 = 10_000_000;

/// Antennas per sector. Every entry is at least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AntennaAllocation(Vec<usize>);

impl AntennaAllocation {
    pub fn new(counts: Vec<usize>, total_antennas: usize) -> Result<Self> {
        if counts.contains(&0) {
            return Err(Error::EmptyArray);
        }
        let used: usize = counts.iter().sum();
        if used > total_antennas {
            return Err(Error::TooFewAntennas { available: total_antennas, sectors: counts.len() });
        }
        Ok(Self(counts))
    }

    /// `floor(N / M)` antennas in every sector.
    pub fn equal(num_sectors: usize, total_antennas: usize) -> Result<Self> {
        if total_antennas < num_sectors {
            return Err(Error::TooFewAntennas { available: total_antennas, sectors: num_sectors });
        }
        Ok(Self(vec![total_antennas / num_sectors; num_sectors]))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn used(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for AntennaAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("]")
    }
}

/// How rotation and allocation are chosen for each candidate rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Search every rotation, integer allocation at each.
    Joint,
    /// Rotation fixed at zero, integer allocation.
    AntennaOnly,
    /// Search every rotation, `floor(N/M)` antennas per sector.
    RotationOnly,
    /// Rotation zero and `floor(N/M)` antennas per sector.
    Fixed,
    /// Minimum-variance rotation, one allocation at that rotation.
    VarianceHeuristic,
    /// Exhaustive search over rotations and all antenna compositions.
    Esm,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Joint,
        Scheme::AntennaOnly,
        Scheme::RotationOnly,
        Scheme::Fixed,
        Scheme::VarianceHeuristic,
        Scheme::Esm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::AntennaOnly => "antenna_only",
            Scheme::RotationOnly => "rotation_only",
            Scheme::Fixed => "fixed",
            Scheme::VarianceHeuristic => "variance_heuristic",
            Scheme::Esm => "esm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| alloc::format!("unknown scheme {s:?}"))
    }
}

/// Optimal continuous allocation `N e^{γ̄λ_m/2} / Σ e^{γ̄λ_m'/2}`.
pub fn continuous_allocation(lambdas: &[f64], total_antennas: f64, snr: f64) -> Vec<f64> {
    let ln_w: Vec<f64> = lambdas.iter().map(|l| 0.5 * snr * l).collect();
    softmax(&ln_w).into_iter().map(|w| total_antennas * w).collect()
}

fn softmax(ln_w: &[f64]) -> Vec<f64> {
    let lse = math::log_sum_exp(ln_w.iter().copied());
    ln_w.iter().map(|x| math::exp(x - lse)).collect()
}

/// Integer allocation `1 + floor((N - M) w_m)` with `w` the continuous
/// weights. Antennas lost to the floor stay unused.
pub fn integer_allocation(lambdas: &[f64], total_antennas: usize, snr: f64) -> Result<AntennaAllocation> {
    let ln_w: Vec<f64> = lambdas.iter().map(|l| 0.5 * snr * l).collect();
    allocate_from_log_weights(&ln_w, total_antennas)
}

fn allocate_from_log_weights(ln_w: &[f64], total_antennas: usize) -> Result<AntennaAllocation> {
    let m = ln_w.len();
    if total_antennas < m || m == 0 {
        return Err(Error::TooFewAntennas { available: total_antennas, sectors: m });
    }
    let spare = (total_antennas - m) as f64;
    let shares: Vec<f64> = softmax(ln_w).into_iter().map(|w| spare * w).collect();
    // Shares that are integers in exact arithmetic can land a few ulps low.
    let nudged: Vec<usize> = shares.iter().map(|s| math::floor(s + 1e-9 * s.max(1.0)) as usize).collect();
    let floors = if nudged.iter().sum::<usize>() <= total_antennas - m {
        nudged
    } else {
        shares.iter().map(|s| math::floor(*s) as usize).collect()
    };
    Ok(AntennaAllocation(floors.into_iter().map(|f| f + 1).collect()))
}

/// Number of compositions of `n` into `m` positive parts, `C(n-1, m-1)`.
pub fn composition_count(n: usize, m: usize) -> u128 {
    if m == 0 || n < m {
        return 0;
    }
    let (top, k) = ((n - 1) as u128, (m - 1) as u128);
    let k = k.min(top - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (top - i) / (i + 1);
    }
    c
}

/// All compositions of `n` into `m` positive parts in lexicographic order.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<usize>>,
    total: usize,
}

impl Compositions {
    pub fn new(n: usize, m: usize) -> Self {
        let current = if m == 0 || n < m {
            None
        } else {
            let mut c = vec![1; m];
            c[m - 1] = n - (m - 1);
            Some(c)
        };
        Self { current, total: n }
    }

    fn advance(c: &mut [usize], total: usize) -> bool {
        let m = c.len();
        if m < 2 {
            return false;
        }
        // rightmost free position with slack to its right
        let mut tail: usize = c[m - 1];
        let mut i = m - 1;
        while i > 0 {
            i -= 1;
            let right_len = m - 1 - i;
            if tail > right_len {
                c[i] += 1;
                for x in &mut c[i + 1..m - 1] {
                    *x = 1;
                }
                let head: usize = c[..m - 1].iter().sum();
                c[m - 1] = total - head;
                return true;
            }
            tail += c[i];
        }
        false
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        self.current = if Self::advance(&mut next, self.total) { Some(next) } else { None };
        Some(out)
    }
}

/// Result of minimizing total power at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMinimum {
    pub rotation: Rotation,
    pub allocation: AntennaAllocation,
    pub total_power: f64,
    /// Per-sector user means at `rotation`.
    pub lambdas: Vec<f64>,
    /// Allocation/power evaluations performed.
    pub evaluations: u128,
}

/// Outcome of the throughput maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub scheme: Scheme,
    pub rotation: Rotation,
    pub allocation: AntennaAllocation,
    /// Common throughput, bits/s/Hz.
    pub rate: f64,
    pub total_power: f64,
    pub lambdas: Vec<f64>,
    pub iterations: usize,
    /// Initial bisection upper end.
    pub upper_bound: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Even the zero rate does not fit the power budget.
    pub infeasible: bool,
    /// Antennas left unused by the integer rounding.
    pub leftover_antennas: usize,
    /// 1-based sectors with no users on average at `rotation`.
    pub empty_sectors: Vec<usize>,
}

/// A validated scenario plus its bin intensities, with the per-rotation
/// sector user means precomputed.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    scenario: &'a Scenario,
    bins: &'a BinIntensities,
    consts: PowerConstants,
    lambdas_by_rotation: Vec<Vec<f64>>,
    variant: Variant,
    esm_cap: u128,
}

impl<'a> Problem<'a> {
    pub fn new(scenario: &'a Scenario, bins: &'a BinIntensities) -> Result<Self> {
        scenario.validate()?;
        let lambdas_by_rotation =
            scenario.rotations().map(|r| lambda_vector(bins, scenario, r)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario,
            bins,
            consts: PowerConstants::derive(scenario),
            lambdas_by_rotation,
            variant: Variant::Paper,
            esm_cap: DEFAULT_ESM_CAP,
        })
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_esm_cap(mut self, cap: u128) -> Self {
        self.esm_cap = cap;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn bins(&self) -> &BinIntensities {
        self.bins
    }

    pub fn constants(&self) -> &PowerConstants {
        &self.consts
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn lambdas(&self, r: Rotation) -> &[f64] {
        &self.lambdas_by_rotation[r.get()]
    }

    fn ln_growth(&self, lambdas: &[f64], target: RateTarget) -> Vec<f64> {
        lambdas.iter().map(|&l| power::ln_growth(target.snr() * l, self.variant)).collect()
    }

    fn power_of(&self, allocation: &AntennaAllocation, lambdas: &[f64], target: RateTarget) -> f64 {
        let m = self.scenario.num_sectors;
        allocation
            .0
            .iter()
            .zip(lambdas)
            .map(|(&n, &l)| math::exp(power::ln_sector_avg_power(&self.consts, m, n as f64, l, target, self.variant)))
            .sum()
    }

    fn allocate(&self, lambdas: &[f64], target: RateTarget) -> AntennaAllocation {
        let ln_w: Vec<f64> = self.ln_growth(lambdas, target).into_iter().map(|g| 0.5 * g).collect();
        // validated scenario guarantees N ≥ M
        allocate_from_log_weights(&ln_w, self.scenario.total_antennas).expect("N ≥ M")
    }

    fn evaluate(&self, r: Rotation, allocation: AntennaAllocation, target: RateTarget) -> PowerMinimum {
        let lambdas = self.lambdas(r).to_vec();
        let total_power = self.power_of(&allocation, &lambdas, target);
        PowerMinimum { rotation: r, allocation, total_power, lambdas, evaluations: 1 }
    }

    fn search_rotations(
        &self,
        rotations: impl Iterator<Item = Rotation>,
        mut allocation_for: impl FnMut(&[f64]) -> AntennaAllocation,
        target: RateTarget,
    ) -> PowerMinimum {
        let mut best: Option<PowerMinimum> = None;
        let mut evaluations = 0;
        for r in rotations {
            let alloc = allocation_for(self.lambdas(r));
            let candidate = self.evaluate(r, alloc, target);
            evaluations += 1;
            if best.as_ref().is_none_or(|b| candidate.total_power < b.total_power) {
                best = Some(candidate);
            }
        }
        let mut best = best.expect("at least one rotation");
        best.evaluations = evaluations;
        best
    }

    /// Minimum total power at `target` under `scheme`.
    pub fn min_power_for_rate(&self, target: RateTarget, scheme: Scheme) -> Result<PowerMinimum> {
        let s = self.scenario;
        let equal = || AntennaAllocation::equal(s.num_sectors, s.total_antennas).expect("N ≥ M");
        Ok(match scheme {
            Scheme::Joint => self.search_rotations(s.rotations(), |l| self.allocate(l, target), target),
            Scheme::AntennaOnly => {
                self.search_rotations(core::iter::once(Rotation::ZERO), |l| self.allocate(l, target), target)
            }
            Scheme::RotationOnly => self.search_rotations(s.rotations(), |_| equal(), target),
            Scheme::Fixed => self.search_rotations(core::iter::once(Rotation::ZERO), |_| equal(), target),
            Scheme::VarianceHeuristic => self.low_complexity_min_power(target),
            Scheme::Esm => self.esm_oracle(target)?,
        })
    }

    /// Rotation whose sector user means have the smallest sample variance.
    /// With a single sector every rotation is equivalent and zero is returned.
    pub fn variance_min_rotation(&self) -> Rotation {
        if self.scenario.num_sectors < 2 {
            return Rotation::ZERO;
        }
        let mut best = (Rotation::ZERO, f64::INFINITY);
        for r in self.scenario.rotations() {
            let v = lambda_variance(self.lambdas(r)).expect("M ≥ 2");
            if v < best.1 {
                best = (r, v);
            }
        }
        best.0
    }

    /// Minimum-variance rotation followed by a single allocation and power
    /// evaluation at that rotation.
    pub fn low_complexity_min_power(&self, target: RateTarget) -> PowerMinimum {
        let r = self.variance_min_rotation();
        let alloc = self.allocate(self.lambdas(r), target);
        self.evaluate(r, alloc, target)
    }

    /// Global minimum of the total power over every rotation and every
    /// composition of `N` into `M` positive parts.
    pub fn esm_oracle(&self, target: RateTarget) -> Result<PowerMinimum> {
        let s = self.scenario;
        let per_rotation = composition_count(s.total_antennas, s.num_sectors);
        let required = per_rotation.saturating_mul(s.bins_per_sector as u128);
        if required > self.esm_cap {
            return Err(Error::CombinationCapExceeded { required, cap: self.esm_cap });
        }

        let mut best: Option<(f64, Rotation, Vec<usize>)> = None;
        for r in s.rotations() {
            let ln_g = self.ln_growth(self.lambdas(r), target);
            let shift = ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let shift = if shift.is_finite() { shift } else { 0.0 };
            let weights: Vec<f64> = ln_g.iter().map(|g| math::exp(g - shift)).collect();

            let mut local: Option<(f64, Vec<usize>)> = None;
            for comp in Compositions::new(s.total_antennas, s.num_sectors) {
                let obj: f64 = weights.iter().zip(&comp).map(|(w, &n)| w / n as f64).sum();
                if local.as_ref().is_none_or(|(b, _)| obj < *b) {
                    local = Some((obj, comp));
                }
            }
            let (obj, comp) = local.expect("N ≥ M");
            // compare on the common scale
            let scaled = math::ln(obj) + shift;
            if best.as_ref().is_none_or(|(b, _, _)| scaled < *b) {
                best = Some((scaled, r, comp));
            }
        }
        let (_, r, comp) = best.expect("at least one rotation");
        let mut out = self.evaluate(r, AntennaAllocation(comp), target);
        out.evaluations = required;
        Ok(out)
    }

    /// Largest common throughput whose minimum power fits the budget, found
    /// by bisection starting from `[0, R̄^U]`.
    ///
    /// The returned rate is the last feasible midpoint. When the budget
    /// cannot serve even a zero rate the solution carries `rate = 0` and
    /// `infeasible = true`.
    pub fn maximize_common_throughput(&self, scheme: Scheme) -> Result<Solution> {
        let s = self.scenario;
        let p_max = s.max_power_watt();
        let lambda_sum = self.bins.total();
        if !(lambda_sum > 0.0) {
            return Err(Error::NonPositive("total user intensity"));
        }
        let upper_bound = match power::throughput_upper_bound(
            &self.consts,
            s.num_sectors,
            s.total_antennas,
            lambda_sum,
            p_max,
        ) {
            Ok(u) => u,
            Err(Error::PowerBudgetBelowFloor) => 0.0,
            Err(e) => return Err(e),
        };

        let (mut low, mut up) = (0.0, upper_bound);
        let mut best: Option<(f64, PowerMinimum)> = None;
        let mut iterations = 0;
        while up - low > s.bisection_tolerance {
            let mid = 0.5 * (up + low);
            let pm = self.min_power_for_rate(RateTarget::new(mid), scheme)?;
            if pm.total_power <= p_max {
                low = mid;
                best = Some((mid, pm));
            } else {
                up = mid;
            }
            iterations += 1;
        }

        let (rate, pm, infeasible) = match best {
            Some((rate, pm)) => (rate, pm, false),
            None => {
                let pm = self.min_power_for_rate(RateTarget::new(0.0), scheme)?;
                let infeasible = !(pm.total_power <= p_max);
                (0.0, pm, infeasible)
            }
        };
        let empty_sectors =
            pm.lambdas.iter().enumerate().filter(|(_, &l)| l == 0.0).map(|(i, _)| i + 1).collect();
        Ok(Solution {
            scheme,
            rotation: pm.rotation,
            leftover_antennas: s.total_antennas - pm.allocation.used(),
            allocation: pm.allocation,
            rate,
            total_power: pm.total_power,
            lambdas: pm.lambdas,
            iterations,
            upper_bound,
            bracket: (low, up),
            infeasible,
            empty_sectors,
        })
    }
}
