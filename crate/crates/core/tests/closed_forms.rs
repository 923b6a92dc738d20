use flexsector_core::*;
use proptest::prelude::*;

/// Composite Simpson rule for the annulus-averaged path loss
/// `∫ 2d (d²+H²)^{α/2} / ((d_max²−d_min²) β₀) dd`.
fn nu0_by_quadrature(s: &Scenario, beta0: f64, panels: usize) -> f64 {
    let f = |d: f64| 2.0 * d * (d * d + s.height * s.height).powf(s.pathloss_exponent / 2.0);
    let h = (s.d_max - s.d_min) / panels as f64;
    let mut acc = f(s.d_min) + f(s.d_max);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(s.d_min + i as f64 * h);
    }
    acc * h / 3.0 / ((s.d_max * s.d_max - s.d_min * s.d_min) * beta0)
}

#[test]
fn nu0_matches_quadrature() {
    let base = Scenario::default();
    for (alpha, h, dmin, dmax) in [(2.5, 20.0, 20.0, 100.0), (2.0, 0.0, 1.0, 50.0), (3.7, 35.0, 5.0, 400.0), (4.0, 10.0, 10.0, 30.0)] {
        let s = Scenario { pathloss_exponent: alpha, height: h, d_min: dmin, d_max: dmax, ..base.clone() };
        let c = PowerConstants::derive(&s);
        let q = nu0_by_quadrature(&s, c.beta0, 20_000);
        assert!(((c.nu0 - q) / q).abs() < 1e-9, "alpha={alpha}: {} vs {q}", c.nu0);
    }
}

#[test]
fn nu0_at_free_space_exponent() {
    // α=2, H=0: ν₀ = (d_max² + d_min²) / (2β₀)
    let s = Scenario { pathloss_exponent: 2.0, height: 0.0, d_min: 1e-3, d_max: 80.0, ..Scenario::default() };
    let c = PowerConstants::derive(&s);
    let expect = (80.0f64.powi(2) + 1e-6) / (2.0 * c.beta0);
    assert!(((c.nu0 - expect) / expect).abs() < 1e-12);
}

#[test]
fn default_constants() {
    let c = PowerConstants::derive(&Scenario::default());
    assert!((c.tau - 0.010_050_335_853_501_44).abs() < 1e-15);
    assert!(((c.beta0 - 9.880_961_210_318_49e-7) / 9.880_961_210_318_49e-7).abs() < 1e-12);
}

#[test]
fn sector_power_matches_direct_expectation() {
    // E[Σ_k p_k] with K ~ Poisson(λ) and uniform-in-area users, summed
    // directly over the Poisson pmf with a quadrature over distance
    let s = Scenario::default();
    let c = PowerConstants::derive(&s);
    let t = RateTarget::new(0.7);
    let (lambda, n) = (12.0f64, 80);
    let mean_pathloss = c.nu0 * c.beta0;
    let mut pmf = (-lambda).exp();
    let mut expect = 0.0;
    for k in 1..200usize {
        pmf *= lambda / k as f64;
        let unit = per_user_power(&c, &s, n, k, 0.0, t).unwrap() / s.height.powf(s.pathloss_exponent);
        expect += pmf * k as f64 * unit * mean_pathloss;
    }
    let exact = sector_avg_power(&c, 3, n, lambda, t, Variant::Exact).unwrap();
    assert!(((expect - exact) / exact).abs() < 1e-10, "{expect} vs {exact}");
}

proptest! {
    #[test]
    fn lower_bound_below_any_allocation(
        seed_bins in proptest::collection::vec(0.0f64..10.0, 12),
        rate in 0.0f64..1.0,
        n in 3usize..400,
    ) {
        let s = Scenario { num_sectors: 3, bins_per_sector: 4, num_bins: 12, total_antennas: n, ..Scenario::default() };
        let bins = BinIntensities::new(seed_bins).unwrap();
        prop_assume!(bins.total() > 0.0);
        let c = PowerConstants::derive(&s);
        let t = RateTarget::new(rate);
        let bound = power_lower_bound(&c, 3, n, bins.total(), t);
        for r in s.rotations() {
            let lambdas = lambda_vector(&bins, &s, r).unwrap();
            let alloc = integer_allocation(&lambdas, n, t.snr()).unwrap();
            let p = total_power(&c, 3, alloc.as_slice(), &lambdas, t, Variant::Paper).unwrap();
            prop_assert!(bound <= p * (1.0 + 1e-12));
            let ideal = ideal_total_power(&c, 3, n, &lambdas, t.snr());
            prop_assert!(bound <= ideal * (1.0 + 1e-12));
            prop_assert!(ideal <= p * (1.0 + 1e-12));
        }
    }

    #[test]
    fn solutions_respect_constraints(
        seed_bins in proptest::collection::vec(0.0f64..8.0, 8),
        n in 2usize..60,
        p_dbm in 10.0f64..50.0,
    ) {
        let s = Scenario {
            num_sectors: 2, bins_per_sector: 4, num_bins: 8, total_antennas: n, max_power_dbm: p_dbm,
            ..Scenario::default()
        };
        let bins = BinIntensities::new(seed_bins).unwrap();
        prop_assume!(bins.total() > 0.5);
        let problem = Problem::new(&s, &bins).unwrap();
        for scheme in [Scheme::Joint, Scheme::AntennaOnly, Scheme::RotationOnly, Scheme::Fixed, Scheme::VarianceHeuristic] {
            let sol = problem.maximize_common_throughput(scheme).unwrap();
            prop_assert!(sol.rotation.get() < s.bins_per_sector);
            prop_assert!(sol.allocation.as_slice().iter().all(|&x| x >= 1));
            prop_assert!(sol.allocation.used() <= n);
            prop_assert!(sol.infeasible || sol.total_power <= s.max_power_watt() * (1.0 + 1e-9));
            prop_assert!(sol.rate <= sol.upper_bound + 1e-12);
            prop_assert!(sol.bracket.1 - sol.bracket.0 <= s.bisection_tolerance);
        }
    }
}
