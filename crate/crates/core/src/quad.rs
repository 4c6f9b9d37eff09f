//! Double-exponential quadrature.
//!
//! [`tanh_sinh`] integrates over a finite interval and hands the integrand
//! both distances to the endpoints, so factors such as `(w - π)^(α-1)` can
//! be evaluated without cancellation right up to a singular endpoint.
//! [`exp_sinh`] covers `[a, ∞)`.

use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;

use crate::error::{Error, Result};

/// Convergence settings shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    rel_tol: f64,
    abs_tol: f64,
    max_level: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_level: 12,
        }
    }
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_level: u32) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::domain("rel_tol", rel_tol, "0 < tol < 1"));
        }
        if !(abs_tol >= 0.0 && abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol", abs_tol, "finite and >= 0"));
        }
        if max_level < 1 {
            return Err(Error::domain("max_level", max_level as f64, ">= 1"));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_level,
        })
    }

    /// Same settings with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: f64) -> Result<Self> {
        Self::new(rel_tol, self.abs_tol, self.max_level)
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }
}

/// Result of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub level: u32,
}

// Abscissae beyond this are either on top of the endpoint or carry weights
// far below f64 resolution.
const T_MAX: f64 = 6.5;
const NEGLIGIBLE: f64 = 1e-20;

/// Integrates `f` over `[a, b]`.
///
/// `f(x, x - a, b - x)` receives both endpoint distances computed directly
/// from the node map rather than by subtraction.
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::numerical("tanh_sinh", "interval must be finite with a <= b"));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            level: 0,
        });
    }
    let half = 0.5 * (b - a);
    let mut sum = half * FRAC_PI_2 * f(a + half, half, half);

    // Contribution of the node pair at +t and -t (t > 0), without the step h.
    let mut pair = |t: f64| -> (f64, f64) {
        let s = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * s).exp();
        let near = half * 2.0 * e / (1.0 + e);
        if near <= 0.0 {
            return (0.0, 0.0);
        }
        let far = 2.0 * half - near;
        let weight = half * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let right = weight * f(b - near, far, near);
        let left = weight * f(a + near, near, far);
        (left, right)
    };

    let mut left_done = false;
    let mut right_done = false;
    let mut k = 1.0;
    while k <= T_MAX {
        let (l, r) = pair(k);
        sum += select(l, left_done) + select(r, right_done);
        k += 1.0;
    }
    if !sum.is_finite() {
        return Err(Error::numerical("tanh_sinh", "integrand produced a non-finite value"));
    }
    let mut h = 1.0;
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..=cfg.max_level {
        h *= 0.5;
        left_done = false;
        right_done = false;
        let mut t = h;
        let mut added = 0.0;
        while t <= T_MAX && !(left_done && right_done) {
            let (l, r) = pair(t);
            let scale = sum.abs().max(added.abs());
            if t > 1.0 {
                left_done |= l.abs() <= NEGLIGIBLE * scale;
                right_done |= r.abs() <= NEGLIGIBLE * scale;
            }
            added += l + r;
            t += 2.0 * h;
        }
        sum += added;
        let next = sum * h;
        if !next.is_finite() {
            return Err(Error::numerical("tanh_sinh", "integrand produced a non-finite value"));
        }
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= cfg.abs_tol.max(cfg.rel_tol * estimate.abs()) {
            return Ok(Estimate {
                value: estimate,
                error,
                level,
            });
        }
    }
    Err(Error::NoConvergence {
        estimate,
        error,
        levels: cfg.max_level,
    })
}

#[inline]
fn select(v: f64, done: bool) -> f64 {
    if done {
        0.0
    } else {
        v
    }
}

/// Integrates `f` over `[a, ∞)`; `f(x, x - a)`.
pub fn exp_sinh<F>(mut f: F, a: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: FnMut(f64, f64) -> f64,
{
    if !a.is_finite() {
        return Err(Error::numerical("exp_sinh", "lower limit must be finite"));
    }
    let mut node = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        if s > 700.0 {
            return 0.0;
        }
        let offset = s.exp();
        if offset <= 0.0 {
            return 0.0;
        }
        let weight = FRAC_PI_2 * t.cosh() * offset;
        let v = f(a + offset, offset);
        if v == 0.0 {
            0.0
        } else {
            weight * v
        }
    };

    let mut sum = node(0.0);
    let mut k = 1.0;
    while k <= T_MAX {
        sum += node(k) + node(-k);
        k += 1.0;
    }
    if !sum.is_finite() {
        return Err(Error::numerical("exp_sinh", "integrand produced a non-finite value"));
    }
    let mut h = 1.0;
    let mut estimate = sum;
    let mut error = f64::INFINITY;
    for level in 1..=cfg.max_level {
        h *= 0.5;
        let mut added = 0.0;
        let (mut lo_done, mut hi_done) = (false, false);
        let mut t = h;
        while t <= T_MAX && !(lo_done && hi_done) {
            let scale = sum.abs().max(added.abs());
            if !hi_done {
                let v = node(t);
                added += v;
                hi_done = t > 1.0 && v.abs() <= NEGLIGIBLE * scale;
            }
            if !lo_done {
                let v = node(-t);
                added += v;
                lo_done = t > 1.0 && v.abs() <= NEGLIGIBLE * scale;
            }
            t += 2.0 * h;
        }
        sum += added;
        let next = sum * h;
        if !next.is_finite() {
            return Err(Error::numerical("exp_sinh", "integrand produced a non-finite value"));
        }
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= cfg.abs_tol.max(cfg.rel_tol * estimate.abs()) {
            return Ok(Estimate {
                value: estimate,
                error,
                level,
            });
        }
    }
    Err(Error::NoConvergence {
        estimate,
        error,
        levels: cfg.max_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn polynomial_and_smooth() {
        let est = tanh_sinh(|x, _, _| x * x, 0.0, 3.0, &cfg()).unwrap();
        assert!((est.value - 9.0).abs() < 1e-12);
        let est = tanh_sinh(|x, _, _| x.exp(), -1.0, 2.0, &cfg()).unwrap();
        assert!((est.value - (2f64.exp() - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularities() {
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let est = tanh_sinh(|_, from_a, _| from_a.powf(-0.7), 0.0, 1.0, &cfg()).unwrap();
        assert!((est.value - 1.0 / 0.3).abs() < 1e-9, "{}", est.value);
        // ∫_0^1 (1-x)^{-0.5} ln(1/x) dx = 4 - 4 ln 2
        let est = tanh_sinh(|x, _, to_b| to_b.powf(-0.5) * (-x.ln()), 0.0, 1.0, &cfg()).unwrap();
        let exact = 4.0 - 4.0 * core::f64::consts::LN_2;
        assert!((est.value - exact).abs() < 1e-9, "{} vs {}", est.value, exact);
    }

    #[test]
    fn half_line() {
        let est = exp_sinh(|x, _| (-x).exp(), 0.0, &cfg()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        // Gamma(5,1) density integrates to 1; peak away from the origin
        let est = exp_sinh(|x, _| (4.0 * x.ln() - x).exp() / 24.0, 0.0, &cfg()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-11);
        let est = exp_sinh(|_, d| 1.0 / (1.0 + d * d), 0.0, &cfg()).unwrap();
        assert!((est.value - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::new(0.0, 1e-14, 5).is_err());
        assert!(QuadratureConfig::new(1.0, 1e-14, 5).is_err());
        assert!(QuadratureConfig::new(1e-8, 1e-14, 0).is_err());
        assert!(QuadratureConfig::new(1e-8, 0.0, 1).is_ok());
    }

    #[test]
    fn non_convergence_reports_partial_estimate() {
        let tight = QuadratureConfig::new(1e-15, 0.0, 3).unwrap();
        match tanh_sinh(|x, _, _| (50.0 * x).sin().abs(), 0.0, 1.0, &tight) {
            Err(Error::NoConvergence { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
