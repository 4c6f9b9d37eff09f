//! Lévy density of the beta process and its decomposition by stick-breaking
//! round.
//!
//! The atoms of round `i` have weights distributed as the `i`-th break of a
//! `Beta(1, α)` stick; `f_i` is that density. Summed over all rounds the
//! `f_i` recover the Lévy density `α π⁻¹ (1-π)^(α-1)`.

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::{exp_sinh, tanh_sinh, QuadratureConfig};
use crate::special::{ln_expm1, ln_gamma, poisson_upper_tail};

/// Concentration `α` and total base mass `γ = μ(Ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    alpha: f64,
    gamma: f64,
}

impl ProcessParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain("gamma", gamma, "finite and > 0"));
        }
        Ok(Self { alpha, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// A stick-breaking round, counted from one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoundIndex(u32);

impl RoundIndex {
    pub const FIRST: RoundIndex = RoundIndex(1);

    pub fn new(i: u32) -> Result<Self> {
        if i == 0 {
            return Err(Error::domain("round", 0.0, ">= 1"));
        }
        Ok(Self(i))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn next(self) -> Self {
        Self(self.0 + 1)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("alpha", alpha, "finite and > 0"))
    }
}

fn check_weight(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("pi", pi, "0 < pi < 1"))
    }
}

/// `α π⁻¹ (1-π)^(α-1)`.
pub fn levy_density(pi: f64, alpha: f64) -> Result<f64> {
    check_weight(pi)?;
    check_alpha(alpha)?;
    Ok(alpha / pi * ((alpha - 1.0) * (-pi).ln_1p()).exp())
}

/// Density `f_i(π | α)` of the weight of a round-`i` atom.
///
/// Round one is `Beta(1, α)`. Later rounds are a product `V·W` with
/// `-ln W ~ Gamma(i-1, α)`, integrated numerically over `u = -ln w`.
pub fn round_density(pi: f64, round: RoundIndex, alpha: f64, quad: &QuadratureConfig) -> Result<f64> {
    check_weight(pi)?;
    check_alpha(alpha)?;
    let i = round.get();
    if i == 1 {
        return Ok(alpha * ((alpha - 1.0) * (-pi).ln_1p()).exp());
    }
    let (ln_scale, integral) = round_density_parts(pi, i, alpha, quad)?;
    Ok((ln_scale).exp() * integral)
}

/// `ln f_i(π | α)`; stays finite where `f_i` itself underflows.
pub fn ln_round_density(pi: f64, round: RoundIndex, alpha: f64, quad: &QuadratureConfig) -> Result<f64> {
    check_weight(pi)?;
    check_alpha(alpha)?;
    let i = round.get();
    if i == 1 {
        return Ok(alpha.ln() + (alpha - 1.0) * (-pi).ln_1p());
    }
    let (ln_scale, integral) = round_density_parts(pi, i, alpha, quad)?;
    Ok(ln_scale + integral.ln())
}

// f_i = α^i/(i-2)! ∫_0^L u^{i-2} (e^{-u} - π)^{α-1} du with L = ln(1/π).
// With u = L s and e^{-u} - π = π expm1(L (1 - s)) the integral becomes
// L^{i-1} π^{α-1} ∫_0^1 s^{i-2} expm1(L(1-s))^{α-1} ds. The log of the
// integrand's peak is pulled out so large i or α cannot overflow.
fn round_density_parts(pi: f64, i: u32, alpha: f64, quad: &QuadratureConfig) -> Result<(f64, f64)> {
    if alpha < 1.0 {
        return round_density_parts_singular(pi, i, alpha, quad);
    }
    let big_l = -pi.ln();
    let p = (i - 2) as f64;
    let log_integrand = |s: f64, t: f64| -> f64 {
        let lhs = if p == 0.0 { 0.0 } else { p * s.ln() };
        let rhs = if alpha == 1.0 {
            0.0
        } else {
            (alpha - 1.0) * ln_expm1(big_l * t)
        };
        lhs + rhs
    };
    let mut shift = f64::NEG_INFINITY;
    for j in 1..32 {
        let s = j as f64 / 32.0;
        shift = shift.max(log_integrand(s, 1.0 - s));
    }
    // for α > 1 and small π the mass sits in a layer of width
    // 1/((α-1)L) around the peak; integrate it separately
    let mut cut = 1.0;
    if alpha > 1.0 {
        let width = 1.0 / ((alpha - 1.0) * big_l);
        let peak = (p * width).min(1.0);
        let s = peak.clamp(f64::MIN_POSITIVE, 1.0 - 1e-3);
        shift = shift.max(log_integrand(s, 1.0 - s));
        cut = (peak + 40.0 * width).min(1.0);
    }
    let f = |_: f64, s: f64, t: f64| (log_integrand(s, t) - shift).exp();
    let mut value = tanh_sinh(|x, s, t| f(x, s, t + (1.0 - cut)), 0.0, cut, quad)?.value;
    if cut < 1.0 {
        value += tanh_sinh(|x, s, t| f(x, s + cut, t), cut, 1.0, quad)?.value;
    }
    let ln_scale =
        i as f64 * alpha.ln() - ln_gamma(p + 1.0) + (i - 1) as f64 * big_l.ln() + (alpha - 1.0) * pi.ln() + shift;
    Ok((ln_scale, value))
}

// For α < 1 the factor expm1(L t)^(α-1), t = 1 - s, is singular at t = 0.
// With t = u^(1/α) the integral becomes
// (L^(α-1)/α) ∫_0^1 s^{i-2} (expm1(L t)/(L t))^(α-1) du, which is bounded.
fn round_density_parts_singular(pi: f64, i: u32, alpha: f64, quad: &QuadratureConfig) -> Result<(f64, f64)> {
    let big_l = -pi.ln();
    let p = (i - 2) as f64;
    // arguments are the distances of u from 0 and from 1
    let log_integrand = |lo: f64, hi: f64| -> f64 {
        let ln_u = if lo < 0.5 { lo.ln() } else { (-hi).ln_1p() };
        let ln_t = ln_u / alpha;
        let s = -ln_t.exp_m1();
        let lhs = if p == 0.0 { 0.0 } else { p * s.ln() };
        lhs + (alpha - 1.0) * ln_expm1_ratio(big_l * ln_t.exp())
    };
    let mut shift = f64::NEG_INFINITY;
    for j in 0..32 {
        let u = j as f64 / 32.0;
        shift = shift.max(log_integrand(u, 1.0 - u));
    }
    let value = tanh_sinh(|_, lo, hi| (log_integrand(lo, hi) - shift).exp(), 0.0, 1.0, quad)?.value;
    let ln_scale = i as f64 * alpha.ln() - ln_gamma(p + 1.0)
        + (i - 1) as f64 * big_l.ln()
        + (alpha - 1.0) * pi.ln()
        + (alpha - 1.0) * big_l.ln()
        - alpha.ln()
        + shift;
    Ok((ln_scale, value))
}

/// `ln(expm1(x)/x)` for `x >= 0`, exact at zero.
fn ln_expm1_ratio(x: f64) -> f64 {
    if x < 1e-4 {
        x / 2.0 + x * x / 24.0
    } else {
        ln_expm1(x) - x.ln()
    }
}

/// Joint density of a round-`i` weight and its auxiliary `w = e^{-T}`
/// (`i >= 2`):
/// `α^i/(i-2)! · w⁻¹ (ln 1/w)^(i-2) (w-π)^(α-1)` on `0 < π < w < 1`, zero
/// elsewhere.
pub fn joint_round_density(pi: f64, w: f64, round: RoundIndex, alpha: f64) -> Result<f64> {
    Ok(ln_joint_round_density(pi, w, round, alpha)?.exp())
}

pub fn ln_joint_round_density(pi: f64, w: f64, round: RoundIndex, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let i = round.get();
    if i == 1 {
        return Err(Error::domain(
            "round",
            1.0,
            "the auxiliary weight only exists for rounds >= 2",
        ));
    }
    if !(pi > 0.0 && pi < w && w <= 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let p = (i - 2) as f64;
    let ln_log = if p == 0.0 { 0.0 } else { p * (-w.ln()).ln() };
    Ok(i as f64 * alpha.ln() - ln_gamma(p + 1.0) - w.ln() + ln_log + (alpha - 1.0) * (w - pi).ln())
}

/// Relative tolerance below which a negative tail density is treated as
/// roundoff and clamped to zero.
const TAIL_CLAMP: f64 = 1e-12;

/// `Σ_{i>R} f_i(π | α)`: the density of the weights discarded by truncating
/// after round `R`, computed as the Lévy density minus the kept rounds.
pub fn tail_density(pi: f64, alpha: f64, rounds_kept: u32, quad: &QuadratureConfig) -> Result<f64> {
    let levy = levy_density(pi, alpha)?;
    let mut kept = 0.0;
    for i in 1..=rounds_kept {
        kept += round_density(pi, RoundIndex(i), alpha, quad)?;
    }
    let tail = levy - kept;
    let slack = TAIL_CLAMP.max(16.0 * quad.rel_tol()) * levy;
    if tail >= 0.0 {
        Ok(tail)
    } else if tail >= -slack {
        Ok(0.0)
    } else {
        Err(Error::numerical(
            "tail_density",
            alloc::format!("kept rounds exceed the Lévy density by {:e}", -tail),
        ))
    }
}

/// `E[π]` for a round-`i` atom: `α⁻¹ (α/(1+α))^i`.
pub fn expected_round_weight(round: RoundIndex, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((round.get() as f64 * (alpha / (1.0 + alpha)).ln()).exp() / alpha)
}

/// `∫_x^1 ν_R⁺(dπ)` per unit base mass: expected number of discarded atoms
/// (rounds beyond `R`) with weight at least `x`.
///
/// Uses `P(π_i >= x) = E[(1 - x e^T)_+^α]` and sums the Gamma densities of
/// `T` over `i > R` into a Poisson tail, leaving a single integral.
pub fn tail_mass_above(x: f64, alpha: f64, rounds_kept: u32, quad: &QuadratureConfig) -> Result<f64> {
    check_alpha(alpha)?;
    if x >= 1.0 {
        return Ok(0.0);
    }
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain(
            "epsilon",
            x,
            "0 < epsilon <= 1 (the tail measure is infinite near zero)",
        ));
    }
    let big_l = -x.ln();
    let shape = rounds_kept.saturating_sub(1) as u64;
    let est = tanh_sinh(
        |u, _, to_end| {
            let survive = (alpha * (-(-to_end).exp_m1()).ln()).exp();
            poisson_upper_tail(shape, alpha * u) * survive
        },
        0.0,
        big_l,
        quad,
    )?;
    let mut total = alpha * est.value;
    if rounds_kept == 0 {
        total += (alpha * (-x).ln_1p()).exp();
    }
    Ok(total)
}

/// `ξ̃_i = ∫ f_i(π)(1 - (1-π)^M) dπ`: probability that a round-`i` atom is hit
/// by at least one of `M` Bernoulli draws.
///
/// For `π = V·w` with `V ~ Beta(1, α)`, `1 - E_V[(1 - wV)^M]` obeys the
/// positive recurrence `c_m = m (w + (1-w) c_{m-1}) / (α + m)`, so only the
/// expectation over `-ln w ~ Gamma(i-1, α)` needs quadrature.
pub fn observed_fraction(round: RoundIndex, alpha: f64, draws: u64, quad: &QuadratureConfig) -> Result<f64> {
    check_alpha(alpha)?;
    if draws == 0 {
        return Ok(0.0);
    }
    let i = round.get();
    if i == 1 {
        return Ok(hit_probability(1.0, 0.0, alpha, draws));
    }
    let shape = (i - 1) as f64;
    let scale = shape / alpha;
    let ln_norm = shape * alpha.ln() - ln_gamma(shape) + shape * scale.ln();
    let est = exp_sinh(
        |x, _| {
            let u = scale * x;
            let ln_pdf = ln_norm + (shape - 1.0) * x.ln() - alpha * u;
            if ln_pdf < -745.0 {
                return 0.0;
            }
            ln_pdf.exp() * hit_probability((-u).exp(), -(-u).exp_m1(), alpha, draws)
        },
        0.0,
        quad,
    )?;
    // the quadrature error must not push it past the exact bound
    Ok(est.value.clamp(0.0, observed_fraction_bound(round, alpha, draws)))
}

// 1 - E[(1 - w V)^M] for V ~ Beta(1, α); `one_minus_w` passed separately for
// accuracy when w is close to one.
fn hit_probability(w: f64, one_minus_w: f64, alpha: f64, draws: u64) -> f64 {
    let mut c = 0.0;
    for m in 1..=draws {
        let m = m as f64;
        c = m * (w + one_minus_w * c) / (alpha + m);
    }
    c
}

/// `ξ_i = γ ξ̃_i`: mean number of observed atoms in round `i` after `M`
/// Bernoulli draws.
pub fn observed_atom_rate_xi(
    round: RoundIndex,
    params: &ProcessParams,
    draws: u64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(params.gamma() * observed_fraction(round, params.alpha(), draws, quad)?)
}

/// Upper bound `M E[π_i] = M α⁻¹ (α/(1+α))^i` on `ξ̃_i`; nonincreasing in `i`.
pub fn observed_fraction_bound(round: RoundIndex, alpha: f64, draws: u64) -> f64 {
    (draws as f64 * expected_round_weight(round, alpha).unwrap_or(0.0)).min(1.0)
}

/// Lazily filled table of `ξ̃_i` for fixed `(α, M)`.
#[derive(Debug, Clone)]
pub struct ObservedRateTable {
    alpha: f64,
    draws: u64,
    quad: QuadratureConfig,
    values: alloc::vec::Vec<f64>,
}

impl ObservedRateTable {
    pub fn new(alpha: f64, draws: u64, quad: QuadratureConfig) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            draws,
            quad,
            values: alloc::vec::Vec::new(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// `ξ̃_i`, computing and caching rounds up to `i` as needed.
    pub fn fraction(&mut self, round: RoundIndex) -> Result<f64> {
        let i = round.get() as usize;
        while self.values.len() < i {
            let next = RoundIndex(self.values.len() as u32 + 1);
            let v = observed_fraction(next, self.alpha, self.draws, &self.quad)?;
            self.values.push(v);
        }
        Ok(self.values[i - 1])
    }

    /// `Σ_{i>R} ξ̃_i`, summed until the geometric bound on the remainder
    /// drops below `rel_tol` of the running sum.
    pub fn tail_sum(&mut self, rounds_kept: u32, rel_tol: f64) -> Result<f64> {
        if self.draws == 0 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        let mut i = rounds_kept + 1;
        loop {
            sum += self.fraction(RoundIndex(i))?;
            // Σ_{j>i} ξ̃_j <= M (α/(1+α))^i
            let rest = self.draws as f64 * (i as f64 * (self.alpha / (1.0 + self.alpha)).ln()).exp();
            if rest < rel_tol * sum || rest < 1e-300 {
                let bound = self.draws as f64 * (rounds_kept as f64 * (self.alpha / (1.0 + self.alpha)).ln()).exp();
                return Ok(sum.min(bound));
            }
            i += 1;
            if i > 1_000_000 {
                return Err(Error::numerical("tail_sum", "geometric tail did not decay"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::harmonic_rate;
    use core::f64::consts::E;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn r(i: u32) -> RoundIndex {
        RoundIndex::new(i).unwrap()
    }

    #[test]
    fn levy_density_examples() {
        assert!((levy_density(0.5, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((levy_density(0.25, 2.0).unwrap() - 6.0).abs() < 1e-14);
        assert!((levy_density(0.9, 3.0).unwrap() - 0.1 / 3.0).abs() < 1e-14);
        assert!(levy_density(0.0, 1.0).is_err());
        assert!(levy_density(1.0, 0.5).is_err());
        assert!(levy_density(0.5, 0.0).is_err());
    }

    #[test]
    fn params_are_strictly_positive() {
        assert!(ProcessParams::new(0.0, 1.0).is_err());
        assert!(ProcessParams::new(1.0, 0.0).is_err());
        assert!(ProcessParams::new(-1.0, 1.0).is_err());
        assert!(ProcessParams::new(1.0, f64::INFINITY).is_err());
        assert!(RoundIndex::new(0).is_err());
    }

    #[test]
    fn round_density_examples() {
        assert!((round_density(0.3, r(1), 2.0, &q()).unwrap() - 1.4).abs() < 1e-14);
        let p = 1.0 / E;
        assert!((round_density(p, r(2), 1.0, &q()).unwrap() - 1.0).abs() < 1e-10);
        assert!((round_density(p, r(3), 1.0, &q()).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn round_density_matches_direct_w_quadrature() {
        // Oracle: integrate the w-form of the density directly.
        for &(pi, i, alpha) in &[(0.3, 2u32, 0.5), (0.05, 4, 2.0), (0.6, 3, 3.0), (0.01, 7, 0.7)] {
            let c = (i as f64) * f64::ln(alpha) - ln_gamma((i - 1) as f64);
            let direct = tanh_sinh(
                |w, from_pi, to_one| {
                    let neg_ln_w = -(-to_one).ln_1p();
                    let power = if i == 2 { 0.0 } else { ((i - 2) as f64) * neg_ln_w.ln() };
                    (c - w.ln() + power + (alpha - 1.0) * from_pi.ln()).exp()
                },
                pi,
                1.0,
                &q(),
            )
            .unwrap()
            .value;
            let got = round_density(pi, r(i), alpha, &q()).unwrap();
            assert!(
                (got - direct).abs() < 1e-9 * direct,
                "{pi} {i} {alpha}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn alpha_one_closed_form() {
        for &pi in &[0.001, 0.02, 0.3, 0.77, 0.99] {
            let big_l: f64 = -f64::ln(pi);
            for i in 1..=12u32 {
                let closed = (((i - 1) as f64) * big_l.ln() - ln_gamma(i as f64)).exp();
                let got = round_density(pi, r(i), 1.0, &q()).unwrap();
                assert!((got - closed).abs() < 1e-8 * closed.max(1.0), "pi={pi} i={i}");
            }
        }
    }

    #[test]
    fn joint_density_examples() {
        assert!((joint_round_density(0.2, 0.5, r(2), 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(joint_round_density(0.6, 0.5, r(2), 1.0).unwrap(), 0.0);
        assert!(joint_round_density(0.2, 0.5, r(1), 1.0).is_err());
        // marginalising w recovers f_i
        let (pi, i, alpha) = (0.3, r(3), 2.0);
        let marg = tanh_sinh(|w, _, _| joint_round_density(pi, w, i, alpha).unwrap(), pi, 1.0, &q())
            .unwrap()
            .value;
        let f = round_density(pi, i, alpha, &q()).unwrap();
        assert!((marg - f).abs() < 1e-6);
    }

    #[test]
    fn tail_density_examples() {
        let (pi, alpha) = (0.37, 1.7);
        assert!((tail_density(pi, alpha, 0, &q()).unwrap() - levy_density(pi, alpha).unwrap()).abs() < 1e-14);
        assert!((tail_density(0.5, 1.0, 1, &q()).unwrap() - 1.0).abs() < 1e-12);
        let expect = alpha * (1.0 - pi).powf(alpha) / pi;
        assert!((tail_density(pi, alpha, 1, &q()).unwrap() - expect).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for rr in 0..25 {
            let t = tail_density(0.2, 2.0, rr, &q()).unwrap();
            assert!(t <= last + 1e-12, "R={rr}");
            last = t;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn expected_round_weight_examples() {
        assert!((expected_round_weight(r(1), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_round_weight(r(2), 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((expected_round_weight(r(4), 2.0).unwrap() - 0.5 * (2.0f64 / 3.0).powi(4)).abs() < 1e-15);
        let partial: f64 = (1..=200).map(|i| expected_round_weight(r(i), 3.0).unwrap()).sum();
        let limit = 1.0 - 0.75f64.powi(200);
        assert!((partial - limit).abs() < 1e-10);
    }

    #[test]
    fn xi_examples() {
        let params = ProcessParams::new(1.0, 2.0).unwrap();
        assert_eq!(observed_atom_rate_xi(r(3), &params, 0, &q()).unwrap(), 0.0);
        assert!((observed_atom_rate_xi(r(1), &params, 1, &q()).unwrap() - 1.0).abs() < 1e-14);
        let mut table = ObservedRateTable::new(1.0, 3, q()).unwrap();
        let total = table.tail_sum(0, 1e-12).unwrap();
        assert!((total - 11.0 / 6.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn xi_identity() {
        for &(alpha, gamma, m) in &[(1.0, 1.0, 3u64), (3.0, 4.0, 10)] {
            let mut table = ObservedRateTable::new(alpha, m, q()).unwrap();
            let total = gamma * table.tail_sum(0, 1e-12).unwrap();
            let expect = gamma * harmonic_rate(alpha, m);
            assert!((total - expect).abs() < 1e-6, "{total} vs {expect}");
        }
    }

    #[test]
    fn xi_respects_bounds() {
        let params = ProcessParams::new(0.7, 3.0).unwrap();
        for i in 1..15 {
            let xi = observed_atom_rate_xi(r(i), &params, 7, &q()).unwrap();
            let bound = params.gamma() * 7.0 * expected_round_weight(r(i), 0.7).unwrap();
            assert!(xi >= 0.0 && xi <= params.gamma() && xi <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tail_mass_examples() {
        let eps = 1.0 / E;
        assert!((tail_mass_above(eps, 1.0, 0, &q()).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(tail_mass_above(1.0, 2.0, 3, &q()).unwrap(), 0.0);
        assert!(tail_mass_above(1.0 - 1e-9, 2.0, 0, &q()).unwrap() < 1e-6);
        assert!(tail_mass_above(0.0, 2.0, 0, &q()).is_err());
    }

    #[test]
    fn tail_mass_matches_integrated_tail_density() {
        for &(x, alpha, rr) in &[(0.1, 1.0, 0u32), (0.05, 2.5, 2), (0.3, 0.6, 1), (0.02, 3.0, 5)] {
            let direct = tanh_sinh(
                |p, _, _| {
                    if p < 1.0 {
                        tail_density(p, alpha, rr, &q()).unwrap()
                    } else {
                        0.0
                    }
                },
                x,
                1.0,
                &QuadratureConfig::new(1e-9, 1e-14, 10).unwrap(),
            )
            .unwrap()
            .value;
            let got = tail_mass_above(x, alpha, rr, &q()).unwrap();
            assert!(
                (got - direct).abs() < 1e-7 * direct.max(1e-3),
                "{x} {alpha} {rr}: {got} vs {direct}"
            );
        }
    }
}
