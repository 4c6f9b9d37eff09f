//! The synthetic factor-model experiment: generate data from the sixteen
//! 4×4 patterns, fit the beta-Bernoulli factor model by MCMC, and measure
//! how well the retained samples recover the true loadings.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sbbp_core::mcmc::{initial_state, run_chain, McmcState, SampleArchive};
use sbbp_core::model::{match_loadings, Dataset, FactorHook, FactorSnapshot, FactorState};
use sbbp_core::QuadratureConfig;

use crate::config::McmcSection;
use crate::error::{numerical, CliError, Result};

/// Data and chain draw from separate ChaCha streams of one seed, so the
/// data of `mcmc` matches that of `synth` under the same seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const DATA_STREAM: u64 = 0;
pub const CHAIN_STREAM: u64 = 1;

/// Absolute cosine above which an estimated loading counts as a match.
pub const MATCH_THRESHOLD: f64 = 0.9;

pub struct FactorRun {
    pub archive: SampleArchive<FactorSnapshot>,
    pub seconds: f64,
}

/// Fits the factor model from a random start of `init_factors` factors.
/// `progress` sees every sweep.
pub fn run_factor_chain<R: Rng>(
    data: Dataset,
    section: &McmcSection,
    quad: QuadratureConfig,
    rng: &mut R,
    mut progress: impl FnMut(&McmcState),
) -> Result<FactorRun> {
    let schedule = section.schedule()?;
    let cfg = section.sampler(quad);
    let n = data.len() as u64;
    let state = FactorState::initialize(
        &data,
        section.init_factors,
        section.init_density,
        section.init_noise_var,
        rng,
    )
    .map_err(numerical("factor initialisation"))?;
    let thetas: Vec<f64> = (0..state.num_factors()).map(|_| rng.random()).collect();
    let mut chain = initial_state(&state.usage(), n, section.init_alpha, section.init_gamma, &thetas)
        .map_err(numerical("chain initialisation"))?;
    let mut hook = FactorHook::new(data, state).map_err(numerical("factor initialisation"))?;
    let start = Instant::now();
    let archive =
        run_chain(&mut chain, &mut hook, &cfg, &schedule, rng, |s, _| progress(s)).map_err(|e| match e.error {
            sbbp_core::Error::Config(msg) => CliError::config(msg),
            source => CliError::Numerical {
                operation: format!("mcmc sweep {}", e.iteration + 1),
                source,
            },
        })?;
    Ok(FactorRun {
        archive,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Structure recovery over the retained samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub samples: usize,
    /// Histogram of the observed-factor count `T`.
    pub factor_counts: BTreeMap<usize, usize>,
    /// Most frequent `T`; the smallest on ties.
    pub factor_count_mode: usize,
    /// True loadings matched in each retained sample.
    pub matched_per_sample: Vec<usize>,
    pub median_matched: f64,
    /// Fraction of samples in which each true loading is matched.
    pub pattern_match_rate: Vec<f64>,
    /// True loadings matched in at least half of the samples.
    pub majority_matched: usize,
}

fn median(xs: &[usize]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable();
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2] as f64,
        n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
    }
}

pub fn recovery(truth: &DMatrix<f64>, archive: &SampleArchive<FactorSnapshot>) -> Recovery {
    let mut factor_counts = BTreeMap::new();
    let mut hits = vec![0usize; truth.ncols()];
    let mut matched_per_sample = Vec::with_capacity(archive.records.len());
    for r in &archive.records {
        *factor_counts.entry(r.num_observed()).or_insert(0) += 1;
        let matches = r
            .model
            .as_ref()
            .map(|m| match_loadings(truth, &m.loadings, MATCH_THRESHOLD))
            .unwrap_or_default();
        for m in &matches {
            hits[m.truth] += 1;
        }
        matched_per_sample.push(matches.len());
    }
    let samples = archive.records.len();
    let factor_count_mode = factor_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map_or(0, |(&t, _)| t);
    let pattern_match_rate: Vec<f64> = hits.iter().map(|&h| h as f64 / samples.max(1) as f64).collect();
    Recovery {
        samples,
        factor_counts,
        factor_count_mode,
        median_matched: median(&matched_per_sample),
        majority_matched: pattern_match_rate.iter().filter(|&&r| r >= 0.5).count(),
        matched_per_sample,
        pattern_match_rate,
    }
}
