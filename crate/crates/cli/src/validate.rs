//! Invariant suites run by `sbbp validate` and by the acceptance target.
//! Each check returns a pass/fail verdict with the measured quantities and
//! the tolerance they were held to.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use sbbp_core::construct::{draw_bernoulli_process, draw_beta_process, draw_ibp};
use sbbp_core::diagnostics::{iid_standard_error, ks_critical_001, ks_statistic, mean, variance};
use sbbp_core::mcmc::{
    alpha_conditional, gamma_conditional, geweke_test, mh_update_pi, GewekeSettings, Hyperparameters, McmcAtomState,
    McmcConfig, GEWEKE_STATISTICS,
};
use sbbp_core::measure::{levy_density, round_density};
use sbbp_core::model::generate_synthetic;
use sbbp_core::special::poisson_upper_tail;
use sbbp_core::truncation::{
    bound_sweep, corollary1_bound, grid_sweep, l1_gap, legacy_bound, simple_function_bound, theorem3_bound, BoundKind,
};
use sbbp_core::{ProcessParams, QuadratureConfig, RoundIndex};

use crate::config::{RunConfig, CI_CONFIG, PAPER_CONFIG};
use crate::error::{numerical, Result};
use crate::experiment::{recovery, run_factor_chain, stream_rng, CHAIN_STREAM, DATA_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Measure,
    Construct,
    Truncation,
    Mcmc,
    Model,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Measure => "measure",
            Suite::Construct => "construct",
            Suite::Truncation => "truncation",
            Suite::Mcmc => "mcmc",
            Suite::Model => "model",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(suite: Suite, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Result<Check> {
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(Check {
        suite,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn quad(rel_tol: f64) -> QuadratureConfig {
    QuadratureConfig::default()
        .with_rel_tol(rel_tol)
        .expect("valid tolerance")
}

fn params(alpha: f64, gamma: f64) -> Result<ProcessParams> {
    ProcessParams::new(alpha, gamma).map_err(numerical("process parameters"))
}

const DENSITY_ALPHAS: [f64; 3] = [0.5, 1.0, 3.0];
const DENSITY_TOL: f64 = 1e-6;

/// `Σ_{i≥2} f_i(π) = α(1-π)^α/π`.
fn closed_tail(pi: f64, alpha: f64) -> f64 {
    alpha * (1.0 - pi).powf(alpha) / pi
}

/// Partial sums `Σ_{i≤N} f_i` and `Σ_{2≤i≤N} f_i` with `N` chosen so the
/// omitted rounds carry at most `1e-10` of the Lévy density.
///
/// With `L = -ln w`, the rounds beyond `N` integrate
/// `α² e^{αL} P(Poisson(αL) ≥ N-1)` against the kernel whose full integral
/// is the round-two-onwards density, and `L ≤ -ln π` on the domain, so
/// their sum is at most `P(Poisson(-α ln π) ≥ N-1)` times that density.
fn round_sums(pi: f64, alpha: f64, q: &QuadratureConfig) -> Result<(f64, f64, u32)> {
    let levy = levy_density(pi, alpha).map_err(numerical("levy density"))?;
    let rate = -alpha * pi.ln();
    let mut n = 2u32;
    while poisson_upper_tail((n - 1) as u64, rate) * closed_tail(pi, alpha) > 1e-10 * levy {
        n += 1;
    }
    let mut first = 0.0;
    let mut rest = 0.0;
    for i in 1..=n {
        let f = round_density(pi, RoundIndex::new(i).map_err(numerical("round index"))?, alpha, q)
            .map_err(numerical("round density"))?;
        if i == 1 {
            first = f;
        } else {
            rest += f;
        }
    }
    Ok((first + rest, rest, n))
}

fn density_grid() -> impl Iterator<Item = (f64, f64)> {
    DENSITY_ALPHAS
        .into_iter()
        .flat_map(|a| (1..=99).map(move |k| (k as f64 / 100.0, a)))
}

/// The round densities sum to the Lévy density `απ⁻¹(1-π)^(α-1)`.
pub fn density_sum_identity() -> Result<Check> {
    timed(Suite::Measure, "density-sum identity", || {
        let q = quad(1e-10);
        let (mut worst, mut deepest) = (0.0f64, 0);
        for (pi, alpha) in density_grid() {
            let (sum, _, n) = round_sums(pi, alpha, &q)?;
            let levy = levy_density(pi, alpha).map_err(numerical("levy density"))?;
            worst = worst.max(((sum - levy) / levy).abs());
            deepest = deepest.max(n);
        }
        Ok((
            worst <= DENSITY_TOL,
            format!("max relative error {worst:.3e} (tol {DENSITY_TOL:e}), up to {deepest} rounds"),
        ))
    })
}

/// Rounds two onwards sum to `α(1-π)^α/π`.
pub fn tail_identity() -> Result<Check> {
    timed(Suite::Measure, "tail identity", || {
        let q = quad(1e-10);
        let mut worst = 0.0f64;
        for (pi, alpha) in density_grid() {
            let (_, rest, _) = round_sums(pi, alpha, &q)?;
            let target = closed_tail(pi, alpha);
            worst = worst.max(((rest - target) / target).abs());
        }
        Ok((
            worst <= DENSITY_TOL,
            format!("max relative error {worst:.3e} (tol {DENSITY_TOL:e})"),
        ))
    })
}

/// Untruncated bound `1 - exp(-γ Σ_{n<M} α/(α+n))`.
pub fn untruncated_closed_form() -> Result<Check> {
    timed(Suite::Truncation, "R = 0 closed form", || {
        let tol = 1e-6;
        let mut worst = 0.0f64;
        for (alpha, gamma, m) in [(1.0, 1.0, 1u64), (1.0, 1.0, 3), (3.0, 4.0, 10)] {
            let p = params(alpha, gamma)?;
            let got = theorem3_bound(&p, m, 0, &QuadratureConfig::default()).map_err(numerical("theorem-3 bound"))?;
            let rate: f64 = (0..m).map(|n| alpha / (alpha + n as f64)).sum();
            worst = worst.max((got - (1.0 - (-gamma * rate).exp())).abs());
        }
        Ok((worst <= tol, format!("max abs error {worst:.3e} (tol {tol:e})")))
    })
}

/// `theorem3 ≤ corollary1 ≤ legacy` and each nonincreasing in `R` over a
/// 5 × 2 × 4 × 5 lattice.
pub fn bound_ordering() -> Result<Check> {
    timed(Suite::Truncation, "bound ordering and monotonicity", || {
        let rounds = [0u32, 1, 5, 20, 100];
        let q = QuadratureConfig::default();
        let (mut points, mut violations) = (0, Vec::new());
        for alpha in [0.5, 1.0, 2.0, 3.0, 5.0] {
            for gamma in [1.0, 4.0] {
                for m in [1u64, 10, 100, 500] {
                    let p = params(alpha, gamma)?;
                    let mut prev: Option<(f64, f64, f64)> = None;
                    for &r in &rounds {
                        let t = theorem3_bound(&p, m, r, &q).map_err(numerical("theorem-3 bound"))?;
                        let c = corollary1_bound(&p, m, r);
                        let l = legacy_bound(&p, m, r);
                        points += 1;
                        let ordered = t <= c && c <= l;
                        let monotone = prev.is_none_or(|(pt, pc, pl)| t <= pt && c <= pc && l <= pl);
                        if !(ordered && monotone) {
                            violations.push(format!("(α={alpha}, γ={gamma}, M={m}, R={r}): {t:e} {c:e} {l:e}"));
                        }
                        prev = Some((t, c, l));
                    }
                }
            }
        }
        let detail = if violations.is_empty() {
            format!("{points} lattice points ordered and monotone")
        } else {
            format!(
                "{} of {points} points violate: {}",
                violations.len(),
                violations.join("; ")
            )
        };
        Ok((violations.is_empty(), detail))
    })
}

/// L1 gap between the exact and analytic curves at `α=3, γ=4, M=500`, and
/// the contour ordering of the gap: the analytic bound tightens as `α` and
/// `γ` grow and as `M` falls.
pub fn figure_gap() -> Result<Check> {
    timed(Suite::Truncation, "bound gap and contour ordering", || {
        let q = QuadratureConfig::default();
        let curve = bound_sweep(&params(3.0, 4.0)?, 500, 1..=100, &q).map_err(numerical("bound sweep"))?;
        let gap = l1_gap(&curve, BoundKind::Theorem3, BoundKind::Corollary1);
        let (target, tol) = (0.46, 0.05);
        let gap_ok = (gap - target).abs() <= tol;
        let alphas = [1.0, 2.0, 3.0, 4.0, 5.0];
        let gammas = [1.0, 2.0, 3.0, 4.0, 5.0];
        let draws = [100u64, 500];
        let grid = grid_sweep(&alphas, &gammas, &draws, 1..=100, &q).map_err(numerical("grid sweep"))?;
        // grid order is M, then α, then γ
        let at = |m: usize, a: usize, g: usize| grid[(m * alphas.len() + a) * gammas.len() + g].l1_gap;
        let mut bad = Vec::new();
        for (m, &big_m) in draws.iter().enumerate() {
            for a in 0..alphas.len() {
                for g in 0..gammas.len() {
                    if a + 1 < alphas.len() && at(m, a + 1, g) >= at(m, a, g) {
                        bad.push(format!(
                            "α {}→{} at γ={}, M={}",
                            alphas[a],
                            alphas[a + 1],
                            gammas[g],
                            big_m
                        ));
                    }
                    if g + 1 < gammas.len() && at(m, a, g + 1) >= at(m, a, g) {
                        bad.push(format!(
                            "γ {}→{} at α={}, M={}",
                            gammas[g],
                            gammas[g + 1],
                            alphas[a],
                            big_m
                        ));
                    }
                    if m == 0 && at(1, a, g) <= at(0, a, g) {
                        bad.push(format!("M 100→500 at α={}, γ={}", alphas[a], gammas[g]));
                    }
                }
            }
        }
        let contours = if bad.is_empty() {
            "gap falls in α and γ and rises in M on a 5×5×2 grid".to_string()
        } else {
            format!("contour ordering fails: {}", bad.join("; "))
        };
        Ok((
            gap_ok && bad.is_empty(),
            format!("L1 gap {gap:.4} (target {target} ± {tol}); {contours}"),
        ))
    })
}

/// Simple-function lower bounds approach the exact bound as the partition
/// is refined.
pub fn simple_function_convergence() -> Result<Check> {
    timed(Suite::Truncation, "simple-function convergence", || {
        let p = params(3.0, 4.0)?;
        let q = QuadratureConfig::default();
        let exact = theorem3_bound(&p, 500, 10, &q).map_err(numerical("theorem-3 bound"))?;
        let mut gaps = Vec::new();
        for cells in [100u32, 1_000, 10_000, 100_000] {
            let sf = simple_function_bound(&p, 500, 10, cells, &q).map_err(numerical("simple-function bound"))?;
            gaps.push((sf - exact).abs());
        }
        let tol = 1e-3;
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let last = *gaps.last().expect("four refinements");
        let listed: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
        Ok((
            decreasing && last < tol,
            format!("gaps {} for n = 1e2..1e5 (final tol {tol:e})", listed.join(", ")),
        ))
    })
}

/// IBP and stick-breaking paths agree on row totals and atom counts.
pub fn marginal_consistency(seed: u64) -> Result<Check> {
    timed(Suite::Construct, "IBP and stick-breaking marginals", || {
        let (alpha, gamma, m) = (2.0, 3.0, 10usize);
        let p = params(alpha, gamma)?;
        let reps = 10_000;
        // rounds past 80 leave a mean of γ M (2/3)^80 ≈ 2e-13 missing ones
        let rounds = 80;
        let mut r = rng(seed);
        let (mut ibp_rows, mut ibp_atoms, mut sb_rows, mut sb_atoms) = (vec![], vec![], vec![], vec![]);
        for _ in 0..reps {
            let z = draw_ibp(m, &p, &mut r).map_err(numerical("IBP draw"))?;
            ibp_rows.push((0..m).map(|n| z.row_sum(n)).sum::<usize>() as f64 / m as f64);
            ibp_atoms.push(z.num_active() as f64);
            let h = draw_beta_process(&p, rounds, &mut r).map_err(numerical("beta process draw"))?;
            let z = draw_bernoulli_process(&h, m, &mut r).map_err(numerical("Bernoulli draw"))?;
            sb_rows.push((0..m).map(|n| z.row_sum(n)).sum::<usize>() as f64 / m as f64);
            sb_atoms.push(z.num_active() as f64);
        }
        let atoms_mean: f64 = (1..=m).map(|k| alpha * gamma / (alpha + k as f64 - 1.0)).sum();
        let mut zs = Vec::new();
        for (name, xs, target) in [
            ("IBP row total", &ibp_rows, gamma),
            ("stick-breaking row total", &sb_rows, gamma),
            ("IBP atoms", &ibp_atoms, atoms_mean),
            ("stick-breaking atoms", &sb_atoms, atoms_mean),
        ] {
            zs.push((name, (mean(xs) - target) / iid_standard_error(xs)));
        }
        for (name, a, b) in [("row totals", &ibp_rows, &sb_rows), ("atoms", &ibp_atoms, &sb_atoms)] {
            let se = (variance(a) / a.len() as f64 + variance(b) / b.len() as f64).sqrt();
            zs.push((name, (mean(a) - mean(b)) / se));
        }
        let worst = zs.iter().map(|(_, z)| z.abs()).fold(0.0, f64::max);
        let listed: Vec<String> = zs.iter().map(|(n, z)| format!("{n} z={z:+.2}")).collect();
        Ok((
            worst < 3.0,
            format!("{} (|z| < 3, {reps} replicates)", listed.join(", ")),
        ))
    })
}

/// The frequency with which some Bernoulli draw uses an atom beyond round
/// `R` matches the exact bound.
pub fn truncation_event(seed: u64) -> Result<Check> {
    timed(Suite::Truncation, "truncation-event simulation", || {
        let p = params(1.0, 1.0)?;
        let (draws, reps) = (3usize, 10_000);
        let mut r = rng(seed);
        let mut parts = Vec::new();
        let mut ok = true;
        for rounds_kept in [0u32, 1, 2] {
            let hits = (0..reps)
                .map(|_| -> Result<bool> {
                    // rounds past 60 carry under 1e-18 expected ones
                    let h = draw_beta_process(&p, 60, &mut r).map_err(numerical("beta process draw"))?;
                    let z = draw_bernoulli_process(&h, draws, &mut r).map_err(numerical("Bernoulli draw"))?;
                    Ok((0..z.num_atoms())
                        .any(|k| h.atoms[z.atom_ids()[k]].round.get() > rounds_kept && z.column_sum(k) > 0))
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&h| h)
                .count();
            let p_hat = hits as f64 / reps as f64;
            let bound = theorem3_bound(&p, draws as u64, rounds_kept, &QuadratureConfig::default())
                .map_err(numerical("theorem-3 bound"))?;
            let se = (bound * (1.0 - bound) / reps as f64).sqrt();
            let z = (p_hat - bound) / se;
            ok &= z.abs() < 3.0;
            parts.push(format!("R={rounds_kept}: {p_hat:.4} vs {bound:.4} (z={z:+.2})"));
        }
        Ok((ok, format!("{} (|z| < 3)", parts.join(", "))))
    })
}

/// Geweke joint-distribution test, KS tests of the `π` walk against its
/// beta posterior, and exact `α`, `γ` conditional parameters on a fixture.
pub fn mcmc_correctness(seed: u64) -> Result<Check> {
    timed(Suite::Mcmc, "sampler correctness", || {
        let mut parts = Vec::new();
        let mut ok = true;

        // a tighter prior on α keeps the chain away from α near zero, where
        // weights crowd against one and the random walks stall
        let cfg = McmcConfig {
            hyper: Hyperparameters {
                tau1: 10.0,
                tau2: 10.0,
                kappa1: 1.0,
                kappa2: 1.0,
            },
            pi_proposal_sd: 0.1,
            w_proposal_sd: 0.1,
            pi_steps: 10,
            w_steps: 10,
            new_atom_tol: 1e-8,
            ..McmcConfig::default()
        };
        let settings = GewekeSettings {
            forward_draws: 50_000,
            chain_iterations: 200_000,
            ..GewekeSettings::default()
        };
        let report = geweke_test(&cfg, &settings, &mut rng(seed)).map_err(numerical("Geweke test"))?;
        let worst = report.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        ok &= worst < 3.0;
        let zs: Vec<String> = GEWEKE_STATISTICS
            .iter()
            .zip(&report)
            .map(|(n, c)| format!("{n} {:+.2}", c.z))
            .collect();
        parts.push(format!("Geweke z: {}", zs.join(", ")));

        let mut ks = Vec::new();
        for (i, (m1, m0, alpha)) in [(2u64, 5u64, 1.0), (0, 3, 2.5), (7, 1, 0.5)].into_iter().enumerate() {
            let mut atom = McmcAtomState::round_one(0.5, 0.5, m1, m0);
            let mut r = rng(seed.wrapping_add(1 + i as u64));
            mh_update_pi(&mut atom, alpha, 0.2, 500, &mut r);
            let samples: Vec<f64> = (0..10_000)
                .map(|_| {
                    mh_update_pi(&mut atom, alpha, 0.2, 40, &mut r);
                    atom.pi
                })
                .collect();
            let beta = Beta::new(m1 as f64 + 1.0, m0 as f64 + alpha).expect("valid beta");
            let d = ks_statistic(&samples, |x| beta.cdf(x));
            let crit = ks_critical_001(samples.len());
            ok &= d < crit;
            ks.push(format!("{d:.4}"));
        }
        parts.push(format!("KS D {} (crit {:.4})", ks.join(", "), ks_critical_001(10_000)));

        // -ln(1-π) = 1, -ln(w-π) = 2 and 1/2 for rounds 1, 2, 3
        let e = std::f64::consts::E;
        let atoms = [
            McmcAtomState::round_one(0.1, 1.0 - 1.0 / e, 1, 3),
            McmcAtomState {
                theta: 0.2,
                pi: 0.5 - (-2.0f64).exp(),
                w: Some(0.5),
                d: RoundIndex::new(2).expect("round"),
                m1: 2,
                m0: 2,
            },
            McmcAtomState {
                theta: 0.3,
                pi: 0.9 - (-0.5f64).exp(),
                w: Some(0.9),
                d: RoundIndex::new(3).expect("round"),
                m1: 1,
                m0: 3,
            },
        ];
        let hyper = Hyperparameters::default();
        let (shape, rate) = alpha_conditional(&atoms, &hyper).map_err(numerical("alpha conditional"))?;
        let (g_shape, g_rate) = gamma_conditional(3, 2.0, 4, &hyper);
        // 1 + (1 + 2/3 + 1/2 + 2/5) = 107/30
        let errs = [shape - 7.0, rate - 4.5, g_shape - 4.0, g_rate - 107.0 / 30.0];
        let worst_fixture = errs.iter().map(|e| e.abs()).fold(0.0, f64::max);
        ok &= worst_fixture <= 1e-12;
        parts.push(format!(
            "conditional fixtures max error {worst_fixture:.1e} (tol 1e-12)"
        ));
        Ok((ok, parts.join("; ")))
    })
}

/// Factor recovery on synthetic data under a bundled configuration.
///
/// Passes when the median number of true loadings matched per retained
/// sample reaches `min_matched` and, if `mode_window` is set, the mode of
/// the observed-factor count lies within it.
pub fn factor_recovery(
    name: &'static str,
    config: &str,
    min_matched: usize,
    mode_window: Option<(usize, usize)>,
    progress: bool,
) -> Result<Check> {
    timed(Suite::Model, name, || {
        let cfg = RunConfig::from_json(config)?;
        cfg.validate()?;
        let synth = generate_synthetic(&cfg.synth.build(), &mut stream_rng(cfg.seed, DATA_STREAM))
            .map_err(numerical("synthetic data"))?;
        let total = cfg.mcmc.iterations;
        let mut seen = 0u64;
        let run = run_factor_chain(
            synth.data.clone(),
            &cfg.mcmc,
            cfg.quadrature.build()?,
            &mut stream_rng(cfg.seed, CHAIN_STREAM),
            |s| {
                seen += 1;
                if progress && seen.is_multiple_of((total / 10).max(1)) {
                    eprintln!("  {name}: iteration {seen}/{total}, T = {}", s.num_observed());
                }
            },
        )?;
        let rec = recovery(&synth.truth.theta, &run.archive);
        let mode_ok = mode_window.is_none_or(|(lo, hi)| (lo..=hi).contains(&rec.factor_count_mode));
        let matched_ok = rec.median_matched >= min_matched as f64;
        let window = mode_window.map_or(String::new(), |(lo, hi)| format!(" (need {lo}..={hi})"));
        Ok((
            mode_ok && matched_ok,
            format!(
                "N={}, {} iterations: T mode {}{window}, median matched {} of {} (need {min_matched}), \
                 {} matched in at least half the samples",
                cfg.synth.n, total, rec.factor_count_mode, rec.median_matched, cfg.synth.k_true, rec.majority_matched
            ),
        ))
    })
}

pub fn paper_scale_recovery(progress: bool) -> Result<Check> {
    factor_recovery(
        "factor recovery, full scale",
        PAPER_CONFIG,
        18,
        Some((18, 22)),
        progress,
    )
}

pub fn ci_scale_recovery(progress: bool) -> Result<Check> {
    factor_recovery("factor recovery, reduced scale", CI_CONFIG, 15, None, progress)
}

/// Runs the checks of `suite`. The full-scale factor experiment is only
/// included when `full_scale` is set.
pub fn run_suite(suite: Suite, seed: u64, full_scale: bool, progress: bool) -> Result<Vec<Check>> {
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut checks = Vec::new();
    if wants(Suite::Measure) {
        checks.push(density_sum_identity()?);
        checks.push(tail_identity()?);
    }
    if wants(Suite::Construct) {
        checks.push(marginal_consistency(seed)?);
    }
    if wants(Suite::Truncation) {
        checks.push(untruncated_closed_form()?);
        checks.push(bound_ordering()?);
        checks.push(figure_gap()?);
        checks.push(simple_function_convergence()?);
        checks.push(truncation_event(seed)?);
    }
    if wants(Suite::Mcmc) {
        checks.push(mcmc_correctness(seed)?);
    }
    if wants(Suite::Model) {
        checks.push(ci_scale_recovery(progress)?);
        if full_scale {
            checks.push(paper_scale_recovery(progress)?);
        }
    }
    Ok(checks)
}
