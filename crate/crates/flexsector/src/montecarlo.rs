//! Monte-Carlo oracle for the closed-form sector power and the outage
//! contract.
//!
//! Draws are grouped in fixed-size chunks. Chunk `i` uses a ChaCha8 stream
//! keyed by `(seed, stream_id)` with stream number `i`, so every draw is
//! addressable and the result does not depend on how rayon schedules chunks.
//! Chunk results are reduced in chunk order.

use flexsector_core::{per_user_power, PowerConstants, RateTarget, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

/// Realizations per RNG stream.
pub const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    pub realizations: u64,
    pub seed: u64,
    /// Sub-stream, e.g. one per grid point.
    pub stream_id: u64,
}

impl MCConfig {
    pub fn new(realizations: u64, seed: u64, stream_id: u64) -> Self {
        assert!(realizations >= 1, "at least one realization");
        MCConfig { realizations, seed, stream_id }
    }

    /// Generator for chunk `chunk`.
    pub fn rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(chunk);
        rng
    }

    fn chunks(&self) -> impl IndexedParallelIterator<Item = (u64, u64)> {
        let n = self.realizations;
        let count = n.div_ceil(CHUNK);
        (0..count as usize).into_par_iter().map(move |c| (c as u64, CHUNK.min(n - c as u64 * CHUNK)))
    }
}

/// One sector snapshot: user count, horizontal distances and fading gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub distances: Vec<f64>,
    pub fading: Vec<f64>,
}

impl Realization {
    pub fn user_count(&self) -> usize {
        self.distances.len()
    }
}

/// Mean estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Horizontal distance of a user uniform in the annulus, by inverting
/// `F(d) = (d² - d_min²) / (d_max² - d_min²)` at `u`.
pub fn distance_from_uniform(u: f64, d_min: f64, d_max: f64) -> f64 {
    (d_min * d_min + u * (d_max * d_max - d_min * d_min)).sqrt()
}

pub fn sample_distance<R: Rng + ?Sized>(rng: &mut R, d_min: f64, d_max: f64) -> f64 {
    distance_from_uniform(rng.gen::<f64>(), d_min, d_max)
}

pub fn sample_user_count<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let k: f64 = Poisson::new(lambda).expect("positive mean").sample(rng);
    k as u64
}

/// Per-user power divided by the path-loss factor `(d²+H²)^{α/2}`, for a
/// sector with `users` users.
fn power_coefficient(consts: &PowerConstants, scenario: &Scenario, antennas: usize, users: usize, target: RateTarget) -> f64 {
    let d = scenario.d_min;
    per_user_power(consts, scenario, antennas, users, d, target).expect("users ≥ 1")
        / (d * d + scenario.height * scenario.height).powf(scenario.pathloss_exponent / 2.0)
}

pub fn sample_sector_realization<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario, lambda: f64) -> Realization {
    let k = sample_user_count(rng, lambda) as usize;
    let distances = (0..k).map(|_| sample_distance(rng, scenario.d_min, scenario.d_max)).collect();
    let fading = (0..k).map(|_| Exp1.sample(rng)).collect();
    Realization { distances, fading }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    fn estimate(&self) -> Estimate {
        let mean = self.sum / self.n;
        let var = if self.n > 1.0 { ((self.sum_sq - self.n * mean * mean) / (self.n - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, std_error: (var / self.n).sqrt() }
    }
}

/// Average total power per sector snapshot: users drawn from the Poisson
/// point process, each served at the per-user outage-constrained power.
/// Snapshots without users contribute zero.
pub fn mc_sector_avg_power(
    scenario: &Scenario,
    lambda: f64,
    antennas: usize,
    target: RateTarget,
    cfg: &MCConfig,
) -> Estimate {
    assert!(antennas >= 1, "sector needs antennas");
    let consts = PowerConstants::derive(scenario);
    let (d_min, d_max) = (scenario.d_min, scenario.d_max);
    let h2 = scenario.height * scenario.height;
    let half_alpha = scenario.pathloss_exponent / 2.0;
    let parts: Vec<Moments> = cfg
        .chunks()
        .map(|(c, len)| {
            let mut rng = cfg.rng(c);
            let mut m = Moments::default();
            for _ in 0..len {
                let k = sample_user_count(&mut rng, lambda) as usize;
                if k == 0 {
                    m.push(0.0);
                    continue;
                }
                let mut pathloss = 0.0;
                for _ in 0..k {
                    let d = sample_distance(&mut rng, d_min, d_max);
                    pathloss += (d * d + h2).powf(half_alpha);
                }
                m.push(power_coefficient(&consts, scenario, antennas, k, target) * pathloss);
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

/// Same expectation as [`mc_sector_avg_power`], stratified on the user
/// count: the Poisson weights are applied exactly and only the distances are
/// sampled. `cfg.realizations` is spread over the strata in proportion to
/// their share of the mean.
pub fn mc_sector_avg_power_stratified(
    scenario: &Scenario,
    lambda: f64,
    antennas: usize,
    target: RateTarget,
    cfg: &MCConfig,
) -> Estimate {
    assert!(antennas >= 1, "sector needs antennas");
    if lambda <= 0.0 {
        return Estimate { mean: 0.0, std_error: 0.0 };
    }
    let consts = PowerConstants::derive(scenario);
    let h2 = scenario.height * scenario.height;
    let half_alpha = scenario.pathloss_exponent / 2.0;

    // strata weight: pmf(k) * E[total power | K = k] up to the common
    // distance mean, i.e. pmf(k) * (2^{kR} - 1)
    let mut strata: Vec<(usize, f64, f64)> = Vec::new();
    let mut ln_pmf = -lambda;
    let mut share_total = 0.0;
    let mut k = 0usize;
    loop {
        k += 1;
        ln_pmf += (lambda / k as f64).ln();
        let coef = power_coefficient(&consts, scenario, antennas, k, target);
        let pmf = ln_pmf.exp();
        let share = pmf * coef * k as f64;
        strata.push((k, pmf, coef));
        share_total += share;
        if k as f64 > lambda && share <= 1e-17 * share_total {
            break;
        }
    }

    let per_stratum: Vec<(usize, f64, f64, u64)> = strata
        .iter()
        .map(|&(k, pmf, coef)| {
            let share = pmf * coef * k as f64 / share_total;
            let n = ((share * cfg.realizations as f64).ceil() as u64).max(2);
            (k, pmf, coef, n)
        })
        .collect();

    let results: Vec<(f64, f64)> = per_stratum
        .par_iter()
        .map(|&(k, pmf, coef, n)| {
            let mut rng = cfg.rng(k as u64);
            let mut m = Moments::default();
            for _ in 0..n {
                let mut g = 0.0;
                for _ in 0..k {
                    let d = sample_distance(&mut rng, scenario.d_min, scenario.d_max);
                    g += (d * d + h2).powf(half_alpha);
                }
                m.push(g);
            }
            let e = m.estimate();
            (pmf * coef * e.mean, (pmf * coef * e.std_error).powi(2))
        })
        .collect();
    let mean = results.iter().map(|r| r.0).sum();
    let var: f64 = results.iter().map(|r| r.1).sum();
    Estimate { mean, std_error: var.sqrt() }
}

/// Fraction of fading draws for which a user at `distance`, one of `users`
/// in a sector with `antennas` antennas and served with `power` watts, falls
/// short of the common rate.
pub fn mc_outage_probability(
    scenario: &Scenario,
    users: usize,
    antennas: usize,
    distance: f64,
    power: f64,
    target: RateTarget,
    cfg: &MCConfig,
) -> Estimate {
    let consts = PowerConstants::derive(scenario);
    let k = users as f64;
    let h = consts.beta0
        * (distance * distance + scenario.height * scenario.height).powf(-scenario.pathloss_exponent / 2.0);
    let snr_scale = power * antennas as f64 * scenario.num_sectors as f64 * h * k / consts.noise_watt;
    let parts: Vec<Moments> = cfg
        .chunks()
        .map(|(c, len)| {
            let mut rng = cfg.rng(c);
            let mut m = Moments::default();
            for _ in 0..len {
                let fading: f64 = Exp1.sample(&mut rng);
                let rate = (1.0 + snr_scale * fading).log2() / k;
                m.push(if rate < target.rate() { 1.0 } else { 0.0 });
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use flexsector_core::{sector_avg_power, Variant};

    #[test]
    fn distance_inverse_cdf_examples() {
        assert_eq!(distance_from_uniform(0.0, 20.0, 100.0), 20.0);
        assert!((distance_from_uniform(1.0, 20.0, 100.0) - 100.0).abs() < 1e-12);
        assert!((distance_from_uniform(0.5, 0.0, 100.0) - 100.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chunk_streams_differ_and_repeat() {
        let cfg = MCConfig::new(10, 1, 2);
        let a: u64 = cfg.rng(0).gen();
        let b: u64 = cfg.rng(1).gen();
        assert_ne!(a, b);
        assert_eq!(a, cfg.rng(0).gen::<u64>());
        assert_ne!(a, MCConfig::new(10, 1, 3).rng(0).gen::<u64>());
    }

    #[test]
    fn zero_rate_costs_nothing() {
        let s = Scenario::default();
        let e = mc_sector_avg_power(&s, 10.0, 50, RateTarget::new(0.0), &MCConfig::new(1000, 3, 0));
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn zero_lambda_has_no_users() {
        let mut rng = MCConfig::new(1, 4, 0).rng(0);
        for _ in 0..100 {
            assert_eq!(sample_sector_realization(&mut rng, &Scenario::default(), 0.0).user_count(), 0);
        }
    }

    #[test]
    fn estimate_matches_closed_form_at_small_load() {
        let s = Scenario::default();
        let c = PowerConstants::derive(&s);
        let t = RateTarget::new(0.7);
        let e = mc_sector_avg_power(&s, 5.0, 100, t, &MCConfig::new(200_000, 11, 0));
        let exact = sector_avg_power(&c, 3, 100, 5.0, t, Variant::Exact).unwrap();
        assert!((e.mean - exact).abs() < 3.0 * e.std_error, "{} ± {} vs {exact}", e.mean, e.std_error);
    }

    #[test]
    fn stratified_matches_closed_form() {
        let s = Scenario::default();
        let c = PowerConstants::derive(&s);
        let t = RateTarget::new(0.7);
        for &lambda in &[0.5, 12.0, 30.0] {
            let e = mc_sector_avg_power_stratified(&s, lambda, 60, t, &MCConfig::new(100_000, 5, 0));
            let exact = sector_avg_power(&c, 3, 60, lambda, t, Variant::Exact).unwrap();
            assert!((e.mean - exact).abs() < 4.0 * e.std_error + 1e-12 * exact, "λ={lambda}");
            assert!(e.std_error / exact < 2e-3);
        }
    }
}
