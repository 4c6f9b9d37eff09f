use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbbp_core::diagnostics::{ks_critical_001, ks_statistic};
use sbbp_core::mcmc::*;
use sbbp_core::{QuadratureConfig, RoundIndex};
use statrs::distribution::{Beta, ContinuousCDF, Discrete, Poisson};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Geweke settings that mix well enough for a pass/fail test: a tighter
/// prior on α keeps the chain away from α near zero, where weights crowd
/// against one and the random walks stall.
fn geweke_config() -> McmcConfig {
    McmcConfig {
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
    }
}

#[test]
fn exact_sampler_passes_geweke() {
    let settings = GewekeSettings {
        forward_draws: 50_000,
        chain_iterations: 200_000,
        ..GewekeSettings::default()
    };
    let report = geweke_test(&geweke_config(), &settings, &mut rng(2024)).unwrap();
    for (name, c) in GEWEKE_STATISTICS.iter().zip(&report) {
        assert!(
            c.z.abs() < 3.0,
            "{name}: forward {} chain {} z {}",
            c.forward_mean,
            c.chain_mean,
            c.z
        );
    }
}

/// The original `d` prior and `α` conditional leave the joint distribution
/// visibly biased under the same settings.
#[test]
fn paper_sampler_fails_geweke() {
    let cfg = McmcConfig {
        variant: SamplerVariant::Paper,
        ..geweke_config()
    };
    let settings = GewekeSettings {
        forward_draws: 50_000,
        chain_iterations: 200_000,
        ..GewekeSettings::default()
    };
    let report = geweke_test(&cfg, &settings, &mut rng(2024)).unwrap();
    let worst = report.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    assert!(worst > 5.0, "largest |z| {worst}");
}

/// At round one the π conditional is `Beta(m1 + 1, m0 + α)`.
#[test]
fn pi_walk_matches_beta_posterior() {
    for (m1, m0, alpha) in [(2u64, 5u64, 1.0), (0, 3, 2.5), (7, 1, 0.5)] {
        let mut atom = McmcAtomState::round_one(0.5, 0.5, m1, m0);
        let mut r = rng(m1 * 10 + m0);
        mh_update_pi(&mut atom, alpha, 0.2, 500, &mut r);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                mh_update_pi(&mut atom, alpha, 0.2, 40, &mut r);
                atom.pi
            })
            .collect();
        let beta = Beta::new(m1 as f64 + 1.0, m0 as f64 + alpha).unwrap();
        let d = ks_statistic(&samples, |x| beta.cdf(x));
        assert!(d < ks_critical_001(samples.len()), "m1={m1} m0={m0} α={alpha}: D={d}");
    }
}

/// At round two with `α = 2` the `w` conditional is `∝ (w - π)/w` on `(π, 1)`.
#[test]
fn w_walk_matches_its_conditional() {
    let pi = 0.3;
    let mut atom = McmcAtomState {
        theta: 0.5,
        pi,
        w: Some(0.6),
        d: RoundIndex::new(2).unwrap(),
        m1: 1,
        m0: 2,
    };
    let mut r = rng(5);
    let samples: Vec<f64> = (0..10_000)
        .map(|_| {
            mh_update_w(&mut atom, 2.0, 0.2, 40, &mut r);
            atom.w.unwrap()
        })
        .collect();
    let mass = |x: f64| (x - pi) - pi * (x / pi).ln();
    let d = ks_statistic(&samples, |x| mass(x) / mass(1.0));
    assert!(d < ks_critical_001(samples.len()), "D={d}");
}

/// New round-one atoms at `α = 1, γ = 2, M = 1` are `Poisson(γ(1 - ξ̃_1))`
/// with `ξ̃_1 = 1/2`.
#[test]
fn new_atom_counts_are_poisson() {
    let cfg = McmcConfig::default();
    let mut r = rng(8);
    let reps = 10_000;
    let mut hist = [0usize; 5];
    for _ in 0..reps {
        let mut state = McmcState::new(Vec::new(), 1.0, 2.0).unwrap();
        sample_new_atoms(&mut state, 1, &cfg, &mut r).unwrap();
        let count = state.atoms.iter().filter(|a| a.d.get() == 1).count();
        hist[count.min(4)] += 1;
    }
    let poisson = Poisson::new(1.0).unwrap();
    let mut probs: Vec<f64> = (0..4).map(|k| poisson.pmf(k)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi2: f64 = hist
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p * reps as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    // 0.999 quantile of χ² with 4 degrees of freedom
    assert!(chi2 < 18.47, "χ² = {chi2}, histogram {hist:?}");
}

/// The slice move leaves the round prior invariant and never enumerates
/// past the point where the envelope falls below a level it cannot reach.
#[test]
fn slice_rounds_follow_their_weights() {
    let q = QuadratureConfig::default();
    let mut weights = XiWeights::new(1.5, 2.0, 10, q).unwrap();
    let probs = round_probabilities(&mut weights, 1e-12).unwrap();
    let mut r = rng(9);
    let mut current = RoundIndex::new(1).unwrap();
    let n = 40_000;
    let mut hist = vec![0usize; probs.len() + 1];
    for _ in 0..n {
        let (next, depth) = slice_sample_round(&mut weights, current, &mut r).unwrap();
        let floor = weights.ln_weight(current.get()).unwrap() - 40.0;
        let limit = (1..).find(|&i| weights.ln_tail_sup(i).unwrap() < floor).unwrap();
        assert!(depth < limit, "depth {depth} beyond envelope {limit}");
        current = next;
        hist[(current.get() as usize - 1).min(probs.len())] += 1;
    }
    // pool rounds with small expected counts into one bin
    let (mut chi2, mut pooled_o, mut pooled_e) = (0.0, 0.0, 0.0);
    let mut bins = 0;
    for (i, &o) in hist.iter().enumerate() {
        let e = probs.get(i).copied().unwrap_or(0.0) * n as f64;
        if e >= 20.0 {
            chi2 += (o as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_o += o as f64;
            pooled_e += e;
        }
    }
    if pooled_e > 0.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        bins += 1;
    }
    // successive slice draws are correlated; allow a generous factor on the
    // 0.999 quantile (about df + 3.1 sqrt(2 df))
    let df = (bins - 1) as f64;
    let crit = df + 3.1 * (2.0 * df).sqrt();
    assert!(chi2 < 3.0 * crit, "χ² = {chi2} on {df} df");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sweeps_keep_atoms_valid(seed in any::<u64>(), paper in any::<bool>()) {
        let cfg = McmcConfig {
            variant: if paper { SamplerVariant::Paper } else { SamplerVariant::Exact },
            pi_steps: 5,
            w_steps: 5,
            ..McmcConfig::default()
        };
        let mut r = rng(seed);
        let mut state = forward_simulate(&cfg.hyper, 4, 1e-6, &mut r).unwrap();
        let mut hook = BernoulliOnly::new(4);
        for _ in 0..20 {
            sweep(&mut state, &mut hook, &cfg, &mut r).unwrap();
            prop_assert!(state.atoms.iter().all(|a| a.is_valid()));
            prop_assert!(state.atoms.iter().all(|a| a.m1 + a.m0 == 4));
            prop_assert!(state.alpha > 0.0 && state.gamma > 0.0);
        }
    }

    #[test]
    fn chains_are_reproducible(seed in any::<u64>()) {
        let cfg = McmcConfig { pi_steps: 3, w_steps: 3, ..McmcConfig::default() };
        let schedule = Schedule::new(15, 5, 2).unwrap();
        let run = |s: u64| {
            let mut r = rng(s);
            let mut state = forward_simulate(&cfg.hyper, 3, 1e-6, &mut r).unwrap();
            run_chain(&mut state, &mut BernoulliOnly::new(3), &cfg, &schedule, &mut r, |_, _| {}).unwrap()
        };
        let a = run(seed);
        prop_assert_eq!(a.records.len(), 5);
        prop_assert_eq!(a.records, run(seed).records);
    }
}
