//! Bounds for user distributions that can be set freely per sector, subject
//! only to their total.
//!
//! With continuous antennas chosen optimally the total power is
//! `(ν₀σ²/(τMN)) (Σ e^{γ̄λ_m/2})²`, minimized by an equal split. With the
//! antennas fixed, the optimal split is a water-filling over the sector SNRs:
//! `λ_m = max(0, (ln(μ̃/γ̄) + ln γ_m) / γ̄)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::power::PowerConstants;
use crate::scenario::Scenario;

/// Per-sector user means, with the water level when it applies.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDistributionPlan {
    pub lambdas: Vec<f64>,
    /// Lagrange multiplier `μ̃` of the sum constraint.
    pub multiplier: Option<f64>,
}

/// Total power with the optimal continuous allocation for user means
/// `lambdas`.
pub fn ideal_total_power(
    consts: &PowerConstants,
    num_sectors: usize,
    total_antennas: usize,
    lambdas: &[f64],
    snr: f64,
) -> f64 {
    let lse = math::log_sum_exp(lambdas.iter().map(|l| 0.5 * snr * l));
    let scale = consts.nu0 * consts.noise_watt / (consts.tau * num_sectors as f64 * total_antennas as f64);
    math::exp(2.0 * lse + math::ln(scale))
}

/// Equal users and equal continuous antennas per sector. Together they reach
/// the lower power bound.
pub fn joint_ideal_optimum(scenario: &Scenario, lambda_sum: f64) -> (UserDistributionPlan, Vec<f64>) {
    let m = scenario.num_sectors;
    let plan = UserDistributionPlan { lambdas: vec![lambda_sum / m as f64; m], multiplier: None };
    (plan, vec![scenario.total_antennas as f64 / m as f64; m])
}

/// Split `lambda_sum` users over sectors with fixed SNRs `gammas` so that
/// `Σ e^{γ̄λ_m}/γ_m` is minimal.
///
/// The water level `ln μ̃` is bracketed by bisection on the piecewise-linear
/// constraint `Σ max(ln(μ̃/γ̄) + ln γ_m, 0) = γ̄ λ_sum`, then solved exactly on
/// the resulting active set.
pub fn waterfilling_user_distribution(gammas: &[f64], lambda_sum: f64, snr: f64) -> Result<UserDistributionPlan> {
    if let Some(&g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::NonPositiveSnr(g));
    }
    if gammas.is_empty() {
        return Err(Error::NonPositive("number of sectors"));
    }
    if !(lambda_sum > 0.0) {
        return Err(Error::NonPositive("lambda_sum"));
    }
    if !(snr > 0.0) {
        return Err(Error::NonPositive("required SNR"));
    }

    let ln_snr = math::ln(snr);
    let ln_g: Vec<f64> = gammas.iter().map(|&g| math::ln(g)).collect();
    let budget = snr * lambda_sum;
    let excess = |x: f64| -> f64 { ln_g.iter().map(|lg| (x - ln_snr + lg).max(0.0)).sum::<f64>() - budget };

    // every sector is at or below threshold here
    let lo0 = ln_snr - ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut step = budget.max(1.0);
    while excess(lo0 + step) < 0.0 {
        step *= 2.0;
    }
    let (mut lo, mut hi) = (lo0, lo0 + step);
    while hi - lo > 1e-12 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // solve the linear piece exactly; re-check membership in case the bracket
    // straddled a kink
    let mut level = 0.5 * (lo + hi);
    for _ in 0..gammas.len() + 1 {
        let active: Vec<usize> = (0..gammas.len()).filter(|&m| level - ln_snr + ln_g[m] > 0.0).collect();
        let offset: f64 = active.iter().map(|&m| ln_snr - ln_g[m]).sum();
        let next = (budget + offset) / active.len() as f64;
        let stable = (0..gammas.len()).all(|m| (next - ln_snr + ln_g[m] > 0.0) == active.contains(&m));
        level = next;
        if stable {
            break;
        }
    }

    let lambdas = ln_g.iter().map(|lg| ((level - ln_snr + lg) / snr).max(0.0)).collect();
    Ok(UserDistributionPlan { lambdas, multiplier: Some(math::exp(level)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::{average_snr, power_lower_bound, RateTarget};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn objective(gammas: &[f64], lambdas: &[f64], snr: f64) -> f64 {
        gammas.iter().zip(lambdas).map(|(g, l)| (snr * l).exp() / g).sum()
    }

    #[test]
    fn ideal_power_examples() {
        let s = Scenario::default();
        let c = PowerConstants::derive(&s);
        let t = RateTarget::new(0.35);
        let eq = ideal_total_power(&c, 3, 300, &[100.0 / 3.0; 3], t.snr());
        assert!(rel(eq, power_lower_bound(&c, 3, 300, 100.0, t)) < 1e-12);
        let flat = ideal_total_power(&c, 3, 300, &[90.0, 5.0, 5.0], 0.0);
        assert!(rel(flat, 3.0 * c.nu0 * c.noise_watt / (c.tau * 300.0)) < 1e-12);
    }

    #[test]
    fn ideal_power_jensen() {
        let c = PowerConstants::derive(&Scenario::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snr = 0.3;
        let eq = ideal_total_power(&c, 4, 200, &[25.0; 4], snr);
        for _ in 0..500 {
            let mut v = [25.0; 4];
            let i = rng.gen_range(0..4);
            let j = (i + rng.gen_range(1..4)) % 4;
            let d = rng.gen_range(0.01..25.0);
            v[i] += d;
            v[j] -= d;
            assert!(ideal_total_power(&c, 4, 200, &v, snr) > eq);
        }
    }

    #[test]
    fn joint_optimum_examples() {
        let s = Scenario::default();
        let c = PowerConstants::derive(&s);
        let (plan, antennas) = joint_ideal_optimum(&s, 100.0);
        assert!(plan.lambdas.iter().all(|&l| (l - 100.0 / 3.0).abs() < 1e-12));
        assert!(antennas.iter().all(|&n| (n - 100.0).abs() < 1e-12));
        let t = RateTarget::new(0.4);
        let p = ideal_total_power(&c, 3, 300, &plan.lambdas, t.snr());
        assert!(rel(p, power_lower_bound(&c, 3, 300, 100.0, t)) < 1e-12);
        let omni = Scenario { num_sectors: 1, bins_per_sector: 30, ..s };
        assert_eq!(joint_ideal_optimum(&omni, 42.0).0.lambdas, vec![42.0]);
    }

    #[test]
    fn waterfilling_equal_snr_splits_evenly() {
        let p = waterfilling_user_distribution(&[7.0; 4], 60.0, 0.5).unwrap();
        assert!(p.lambdas.iter().all(|&l| (l - 15.0).abs() < 1e-10));
    }

    #[test]
    fn waterfilling_strong_sector_takes_everything() {
        // threshold: sector 2 activates once ln(μ̃/γ̄) + ln γ_2 > 0, i.e. after
        // sector 1 holds ln(γ_1/γ_2)/γ̄ = ln(1000)/0.5 ≈ 13.8 users
        let p = waterfilling_user_distribution(&[1000.0, 1.0], 5.0, 0.5).unwrap();
        assert!((p.lambdas[0] - 5.0).abs() < 1e-12);
        assert_eq!(p.lambdas[1], 0.0);
        let q = waterfilling_user_distribution(&[1000.0, 1.0], 20.0, 0.5).unwrap();
        let th = 1000f64.ln() / 0.5;
        assert!((q.lambdas[0] - (th + (20.0 - th) / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn waterfilling_errors() {
        assert!(matches!(waterfilling_user_distribution(&[1.0, 0.0], 5.0, 0.5), Err(Error::NonPositiveSnr(_))));
        assert!(waterfilling_user_distribution(&[1.0], 0.0, 0.5).is_err());
        assert!(waterfilling_user_distribution(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn waterfilling_certificate_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let m = rng.gen_range(1..7);
            let gammas: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.gen_range(1.0..5.0))).collect();
            let lambda_sum = rng.gen_range(0.5..150.0);
            let snr = rng.gen_range(0.05..2.0);
            let plan = waterfilling_user_distribution(&gammas, lambda_sum, snr).unwrap();
            let sum: f64 = plan.lambdas.iter().sum();
            assert!(rel(sum, lambda_sum) < 1e-10);
            let mu = plan.multiplier.unwrap();
            for (g, l) in gammas.iter().zip(&plan.lambdas) {
                let marginal = snr / g * (snr * l).exp();
                if *l > 0.0 {
                    assert!(rel(marginal, mu) < 1e-8);
                } else {
                    assert!(marginal >= mu * (1.0 - 1e-9));
                }
            }
            let best = objective(&gammas, &plan.lambdas, snr);
            for _ in 0..100 {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                let other: Vec<f64> = raw.iter().map(|x| x / total * lambda_sum).collect();
                assert!(best <= objective(&gammas, &other, snr) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn waterfilling_monotone_in_snr() {
        let base = [50.0, 200.0, 800.0];
        let p = waterfilling_user_distribution(&base, 40.0, 0.4).unwrap();
        let boosted = waterfilling_user_distribution(&[50.0, 400.0, 800.0], 40.0, 0.4).unwrap();
        assert!(boosted.lambdas[1] >= p.lambdas[1]);
    }

    #[test]
    fn waterfilling_with_sector_snrs() {
        let s = Scenario::default();
        let c = PowerConstants::derive(&s);
        let gammas: Vec<f64> = [100.0, 100.0, 100.0].iter().map(|&n| average_snr(&c, 3, n)).collect();
        let p = waterfilling_user_distribution(&gammas, 100.0, 0.3).unwrap();
        assert!(p.lambdas.iter().all(|&l| rel(l, 100.0 / 3.0) < 1e-10));
    }
}
