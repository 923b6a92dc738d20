//! Float helpers over `libm` so the crate stays `no_std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// `ln(sum(exp(x)))`, shifted by the largest term.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + ln(xs.map(|x| exp(x - max)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [0.1, -2.0, 3.5];
        let direct = ln(xs.iter().map(|&x| exp(x)).sum::<f64>());
        assert!((log_sum_exp(xs.iter().copied()) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_large_exponents() {
        let v = log_sum_exp([1000.0, 1000.0].into_iter());
        assert!((v - (1000.0 + ln(2.0))).abs() < 1e-12);
    }
}
