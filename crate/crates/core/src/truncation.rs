//! Bounds on the probability that truncating after round `R` changes at
//! least one of `M` Bernoulli-process draws.

use alloc::vec::Vec;

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measure::{tail_mass_above, ObservedRateTable, ProcessParams, RoundIndex};
use crate::quad::QuadratureConfig;

/// Stopping rule for the sum over discarded rounds: stop once the geometric
/// bound on the remainder is this fraction of the running sum.
pub const TAIL_REL_TOL: f64 = 1e-10;

fn prob_from_rate(rate: f64) -> f64 {
    (-(-rate).exp_m1()).clamp(0.0, 1.0)
}

fn ratio_pow(alpha: f64, r: u32) -> f64 {
    (r as f64 * (alpha / (1.0 + alpha)).ln()).exp()
}

/// `γ M (α/(1+α))^R`: expected number of ones lost across `M` draws.
pub fn expected_missing_ones(params: &ProcessParams, draws: u64, rounds_kept: u32) -> f64 {
    params.gamma() * draws as f64 * ratio_pow(params.alpha(), rounds_kept)
}

/// `1 - exp(-∫ ν_R⁺(dπ) (1 - (1-π)^M))`, the exact probability that some
/// draw uses a discarded atom.
pub fn theorem3_bound(params: &ProcessParams, draws: u64, rounds_kept: u32, quad: &QuadratureConfig) -> Result<f64> {
    if draws == 0 {
        return Ok(0.0);
    }
    let mut table = ObservedRateTable::new(params.alpha(), draws, *quad)?;
    let tail = table.tail_sum(rounds_kept, TAIL_REL_TOL)?;
    Ok(prob_from_rate(params.gamma() * tail))
}

/// `1 - exp(-γ M (α/(1+α))^R)`.
pub fn corollary1_bound(params: &ProcessParams, draws: u64, rounds_kept: u32) -> f64 {
    prob_from_rate(expected_missing_ones(params, draws, rounds_kept))
}

/// The earlier bound `1 - exp(-2γ M (α/(1+α))^R)`.
pub fn legacy_bound(params: &ProcessParams, draws: u64, rounds_kept: u32) -> f64 {
    prob_from_rate(2.0 * expected_missing_ones(params, draws, rounds_kept))
}

/// Expected number of discarded atoms with weight at least `epsilon`; their
/// count is Poisson with this mean.
pub fn missing_atom_rate(
    params: &ProcessParams,
    rounds_kept: u32,
    epsilon: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::domain(
            "epsilon",
            epsilon,
            "> 0 (infinitely many discarded atoms accumulate at zero)",
        ));
    }
    Ok(params.gamma() * tail_mass_above(epsilon, params.alpha(), rounds_kept, quad)?)
}

/// Theorem-3 exponent approximated by a simple function: on the cell
/// `[(k-1)/n, k/n)` the hit probability is evaluated at the left edge.
///
/// The sum `Σ_k ν(B_k) g(b_k)` is rearranged as `Σ_k Λ(b_k) (g(b_k) -
/// g(b_{k-1}))` with `Λ(x) = ν_R⁺([x, 1])`, so every term is nonnegative.
pub fn simple_function_bound(
    params: &ProcessParams,
    draws: u64,
    rounds_kept: u32,
    cells: u32,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if cells < 2 {
        return Err(Error::domain("cells", cells as f64, ">= 2"));
    }
    if draws == 0 {
        return Ok(0.0);
    }
    let n = cells as f64;
    let m = draws as f64;
    // g(b) = 1 - (1-b)^M, so g(b_k) - g(b_{k-1}) = (1-b_{k-1})^M - (1-b_k)^M
    let survive = |b: f64| (m * (-b).ln_1p()).exp();
    let mut total = 0.0;
    for k in 2..=cells {
        let b = (k - 1) as f64 / n;
        let prev = (k - 2) as f64 / n;
        let dg = survive(prev) * -(m * ((-b).ln_1p() - (-prev).ln_1p())).exp_m1();
        if dg == 0.0 {
            continue;
        }
        total += tail_mass_above(b, params.alpha(), rounds_kept, quad)? * dg;
    }
    Ok(prob_from_rate(params.gamma() * total))
}

/// The three bounds at one truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub rounds_kept: u32,
    pub theorem3: f64,
    pub corollary1: f64,
    pub legacy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Theorem3,
    Corollary1,
    Legacy,
}

impl BoundPoint {
    pub fn get(&self, kind: BoundKind) -> f64 {
        match kind {
            BoundKind::Theorem3 => self.theorem3,
            BoundKind::Corollary1 => self.corollary1,
            BoundKind::Legacy => self.legacy,
        }
    }
}

/// Bounds tabulated over a range of truncation levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub params: ProcessParams,
    pub draws: u64,
    pub points: Vec<BoundPoint>,
}

impl BoundCurve {
    /// `theorem3 <= corollary1 <= legacy` everywhere.
    pub fn is_ordered(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.theorem3 <= p.corollary1 && p.corollary1 <= p.legacy)
    }

    /// Every bound nonincreasing along the curve (points sorted by `R`).
    pub fn is_monotone(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].theorem3 <= w[0].theorem3 && w[1].corollary1 <= w[0].corollary1 && w[1].legacy <= w[0].legacy)
    }
}

/// Tabulates all three bounds for `R` in `rounds` (inclusive, ascending).
///
/// The per-round observed fractions are computed once and reused, with the
/// tail beyond the last `R` summed separately.
pub fn bound_sweep(
    params: &ProcessParams,
    draws: u64,
    rounds: core::ops::RangeInclusive<u32>,
    quad: &QuadratureConfig,
) -> Result<BoundCurve> {
    if rounds.is_empty() {
        return Err(Error::Config("empty truncation range".into()));
    }
    let (lo, hi) = (*rounds.start(), *rounds.end());
    let mut tails = alloc::vec![0.0; (hi - lo + 1) as usize];
    if draws > 0 {
        let mut table = ObservedRateTable::new(params.alpha(), draws, *quad)?;
        let mut tail = table.tail_sum(hi, TAIL_REL_TOL)?;
        for r in (lo..=hi).rev() {
            tails[(r - lo) as usize] = tail;
            if r > 0 {
                tail += table.fraction(RoundIndex::new(r)?)?;
            }
        }
    }
    let points = (lo..=hi)
        .zip(tails)
        .map(|(r, tail)| BoundPoint {
            rounds_kept: r,
            theorem3: prob_from_rate(params.gamma() * tail),
            corollary1: corollary1_bound(params, draws, r),
            legacy: legacy_bound(params, draws, r),
        })
        .collect();
    Ok(BoundCurve {
        params: *params,
        draws,
        points,
    })
}

/// `Σ_R |a(R) - b(R)|` over the points of the curve.
pub fn l1_gap(curve: &BoundCurve, a: BoundKind, b: BoundKind) -> f64 {
    curve.points.iter().map(|p| (p.get(a) - p.get(b)).abs()).sum()
}

/// One cell of a parameter-grid sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub gamma: f64,
    pub draws: u64,
    /// L1 distance between the theorem-3 and corollary-1 curves.
    pub l1_gap: f64,
}

/// L1 gap between the exact and analytic bounds over every combination of
/// the given `α`, `γ` and `M` values.
pub fn grid_sweep(
    alphas: &[f64],
    gammas: &[f64],
    draws: &[u64],
    rounds: core::ops::RangeInclusive<u32>,
    quad: &QuadratureConfig,
) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(alphas.len() * gammas.len() * draws.len());
    for &m in draws {
        for &alpha in alphas {
            for &gamma in gammas {
                let params = ProcessParams::new(alpha, gamma)?;
                let curve = bound_sweep(&params, m, rounds.clone(), quad)?;
                out.push(GridPoint {
                    alpha,
                    gamma,
                    draws: m,
                    l1_gap: l1_gap(&curve, BoundKind::Theorem3, BoundKind::Corollary1),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::harmonic_rate;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn p(a: f64, g: f64) -> ProcessParams {
        ProcessParams::new(a, g).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let one = 1.0 - (-1.0f64).exp();
        assert!((corollary1_bound(&p(1.0, 1.0), 1, 0) - one).abs() < 1e-15);
        let c = corollary1_bound(&p(3.0, 4.0), 500, 20);
        assert!((c - (1.0 - (-2000.0 * 0.75f64.powi(20)).exp())).abs() < 1e-12);
        assert!((c - 0.99824).abs() < 5e-6);
        let l = legacy_bound(&p(3.0, 4.0), 500, 20);
        assert!((l - (1.0 - (-4000.0 * 0.75f64.powi(20)).exp())).abs() < 1e-12);
        assert!(corollary1_bound(&p(3.0, 4.0), 500, 100_000) == 0.0);
        assert_eq!(legacy_bound(&p(3.0, 4.0), 0, 3), 0.0);
        assert!((expected_missing_ones(&p(1.0, 2.0), 10, 3) - 2.5).abs() < 1e-14);
        assert!((expected_missing_ones(&p(0.4, 2.0), 10, 0) - 20.0).abs() < 1e-14);
    }

    #[test]
    fn theorem3_examples() {
        assert_eq!(theorem3_bound(&p(2.0, 3.0), 0, 4, &q()).unwrap(), 0.0);
        let t = theorem3_bound(&p(1.0, 1.0), 1, 0, &q()).unwrap();
        assert!((t - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
        for &(a, g, m) in &[(0.5, 2.0, 7u64), (3.0, 4.0, 50)] {
            let t = theorem3_bound(&p(a, g), m, 0, &q()).unwrap();
            let expect = 1.0 - (-g * harmonic_rate(a, m)).exp();
            assert!((t - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn sweep_matches_pointwise_and_is_ordered() {
        let params = p(1.5, 2.0);
        let curve = bound_sweep(&params, 40, 0..=30, &q()).unwrap();
        assert!(curve.is_ordered() && curve.is_monotone());
        for r in [0u32, 3, 17, 30] {
            let direct = theorem3_bound(&params, 40, r, &q()).unwrap();
            assert!((curve.points[r as usize].theorem3 - direct).abs() < 1e-9);
        }
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(bound_sweep(&params, 40, empty, &q()).is_err());
    }

    #[test]
    fn simple_function_from_below() {
        let params = p(1.0, 1.0);
        assert_eq!(simple_function_bound(&params, 0, 0, 2, &q()).unwrap(), 0.0);
        let exact = 1.0 - (-1.0f64).exp();
        let mut last_err = f64::INFINITY;
        for n in [100u32, 1000, 10_000] {
            let v = simple_function_bound(&params, 1, 0, n, &q()).unwrap();
            let err = exact - v;
            assert!(err > 0.0 && err < last_err, "n={n}: {v}");
            last_err = err;
        }
        assert!(last_err < 1e-3);
    }

    #[test]
    fn missing_atom_rate_examples() {
        let r = missing_atom_rate(&p(1.0, 1.0), 0, (-1.0f64).exp(), &q()).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert!(missing_atom_rate(&p(2.0, 1.0), 3, 0.0, &q()).is_err());
        assert_eq!(missing_atom_rate(&p(2.0, 1.0), 3, 1.0, &q()).unwrap(), 0.0);
    }
}
