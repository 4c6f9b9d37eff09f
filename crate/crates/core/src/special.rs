//! Small special-function helpers that `libm` does not provide directly.

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln n!`.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln(e^x - 1)` without overflow for large `x`.
#[inline]
pub fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `P(X >= m)` for `X ~ Poisson(mean)`.
///
/// Summed from whichever side avoids cancellation.
pub fn poisson_upper_tail(m: u64, mean: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    if mean < m as f64 {
        // sum_{j >= m} e^{-mean} mean^j / j!, terms decrease from j = m on
        let mut term = (m as f64 * ln_mean - mean - ln_factorial(m)).exp();
        let mut sum = 0.0;
        let mut j = m;
        while term > sum * 1e-17 || j == m {
            sum += term;
            j += 1;
            term *= mean / j as f64;
            if term == 0.0 {
                break;
            }
        }
        sum
    } else {
        // 1 - sum_{j < m}; the subtracted sum is at most about one half
        let mut term = (-mean).exp();
        let mut sum = 0.0;
        for j in 0..m {
            if j > 0 {
                term *= mean / j as f64;
            }
            sum += term;
        }
        (1.0 - sum).max(0.0)
    }
}

/// Numerically stable `ln(exp(a) + exp(b))`.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `Σ_{n=0}^{m-1} α/(α+n)`: the expected number of distinct atoms hit by
/// `m` Bernoulli draws, per unit of base mass.
pub fn harmonic_rate(alpha: f64, m: u64) -> f64 {
    (0..m).map(|n| alpha / (alpha + n as f64)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_tail_matches_direct_sum() {
        for &(m, mean) in &[(1u64, 0.3), (3, 2.0), (10, 4.5), (4, 20.0), (50, 3.0)] {
            let direct: f64 = (m..400)
                .map(|j| (j as f64 * f64::ln(mean) - mean - ln_factorial(j)).exp())
                .sum();
            let got = poisson_upper_tail(m, mean);
            assert!(
                (got - direct).abs() <= 1e-13 * direct.max(1e-300),
                "m={m} mean={mean}: {got} vs {direct}"
            );
        }
        assert_eq!(poisson_upper_tail(0, 3.0), 1.0);
    }

    #[test]
    fn harmonic_rate_small_cases() {
        assert!((harmonic_rate(1.0, 3) - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(harmonic_rate(2.0, 0), 0.0);
    }

    #[test]
    fn ln_expm1_is_continuous_at_switch() {
        let a = ln_expm1(30.0 - 1e-9);
        let b = ln_expm1(30.0 + 1e-9);
        assert!((a - b).abs() < 1e-8);
        assert!((ln_expm1(1e-5) - f64::ln(f64::exp_m1(1e-5))).abs() < 1e-15);
    }
}
