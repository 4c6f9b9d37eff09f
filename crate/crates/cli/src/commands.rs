//! Command-line definitions and dispatch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sbbp_core::construct::{draw_bernoulli_process, draw_beta_process, draw_ibp};
use sbbp_core::model::generate_synthetic;
use sbbp_core::truncation::{bound_sweep, grid_sweep};
use sbbp_core::ProcessParams;

use crate::config::{GridSection, RunConfig, Variant};
use crate::error::{numerical, CliError, Result};
use crate::experiment::{recovery, run_factor_chain, stream_rng, Recovery, CHAIN_STREAM, DATA_STREAM};
use crate::io;
use crate::validate::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(
    name = "sbbp",
    version,
    about = "Stick-breaking beta processes: draws, truncation bounds and MCMC"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: $SBBP_OUTPUT_DIR, then the current directory).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Path of the command's main output file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a truncated beta process (CSV: theta,pi,round).
    Sample(SampleArgs),
    /// Draw an Indian buffet process allocation (CSV: row, atom_<id>...).
    Ibp(IbpArgs),
    /// Tabulate the truncation bounds (CSV: R,theorem3,corollary1,legacy).
    Bounds(BoundsArgs),
    /// Generate the synthetic factor-model data set and its ground truth.
    Synth(SynthArgs),
    /// Fit the factor model by MCMC and archive the samples.
    Mcmc(McmcArgs),
    /// Run the invariant suites and write a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Rounds kept.
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Rows of the optional Bernoulli allocation.
    #[arg(long = "M")]
    pub draws: Option<u64>,
    /// Also draw `M` Bernoulli rows from the sample and write them here.
    #[arg(long)]
    pub allocation: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IbpArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Customers (rows).
    #[arg(long = "M")]
    pub draws: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Bernoulli draws.
    #[arg(long = "M")]
    pub draws: Option<u64>,
    #[arg(long = "R-min")]
    pub r_min: Option<u32>,
    #[arg(long = "R-max")]
    pub r_max: Option<u32>,
    /// Comma-separated α values of an L1-gap grid.
    #[arg(long, value_delimiter = ',', requires_all = ["grid_gammas", "grid_draws"])]
    pub grid_alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires_all = ["grid_alphas", "grid_draws"])]
    pub grid_gammas: Option<Vec<f64>>,
    #[arg(long = "grid-M", value_delimiter = ',', requires_all = ["grid_alphas", "grid_gammas"])]
    pub grid_draws: Option<Vec<u64>>,
    /// Grid CSV (default: grid.csv in the output directory).
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Observations.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// True factors, at most 20.
    #[arg(long = "K")]
    pub k_true: Option<usize>,
    #[arg(long)]
    pub noise_var: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McmcArgs {
    /// Observations of the synthetic data set.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// CSV of observations (y_0..y_{D-1} per row) instead of synthetic data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    /// Random-walk steps per variable per sweep.
    #[arg(long)]
    pub mh_steps: Option<u32>,
    #[arg(long)]
    pub init_factors: Option<usize>,
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Include the full-scale factor experiment in the model suite.
    #[arg(long)]
    pub full_scale: bool,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

impl ProcessArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.gamma, self.gamma);
    }
}

impl Cli {
    /// Loads the configuration and applies the flags on top of it.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.seed, self.seed);
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir.clone();
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        match &self.command {
            Command::Sample(a) => {
                a.process.apply(&mut cfg);
                set(&mut cfg.rounds, a.rounds);
                set(&mut cfg.draws, a.draws);
            }
            Command::Ibp(a) => {
                a.process.apply(&mut cfg);
                set(&mut cfg.draws, a.draws);
            }
            Command::Bounds(a) => {
                a.process.apply(&mut cfg);
                set(&mut cfg.draws, a.draws);
                set(&mut cfg.bounds.r_min, a.r_min);
                set(&mut cfg.bounds.r_max, a.r_max);
                if let (Some(alphas), Some(gammas), Some(draws)) = (&a.grid_alphas, &a.grid_gammas, &a.grid_draws) {
                    cfg.bounds.grid = Some(GridSection {
                        alphas: alphas.clone(),
                        gammas: gammas.clone(),
                        draws: draws.clone(),
                        out: None,
                    });
                }
                if let (Some(grid), Some(out)) = (cfg.bounds.grid.as_mut(), &a.grid_out) {
                    grid.out = Some(out.clone());
                }
            }
            Command::Synth(a) => {
                set(&mut cfg.synth.n, a.n);
                set(&mut cfg.synth.k_true, a.k_true);
                set(&mut cfg.synth.noise_var, a.noise_var);
            }
            Command::Mcmc(a) => {
                set(&mut cfg.synth.n, a.n);
                if a.data.is_some() {
                    cfg.mcmc.data = a.data.clone();
                }
                set(&mut cfg.mcmc.iterations, a.iterations);
                set(&mut cfg.mcmc.burn_in, a.burn_in);
                set(&mut cfg.mcmc.thin, a.thin);
                set(&mut cfg.mcmc.mh_steps, a.mh_steps);
                set(&mut cfg.mcmc.init_factors, a.init_factors);
                set(&mut cfg.mcmc.variant, a.variant);
            }
            Command::Validate(_) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run(&self) -> Result<()> {
        let cfg = self.resolve()?;
        match &self.command {
            Command::Sample(a) => sample(&cfg, a.allocation.as_deref()),
            Command::Ibp(_) => ibp(&cfg),
            Command::Bounds(_) => bounds(&cfg),
            Command::Synth(_) => synth(&cfg),
            Command::Mcmc(_) => mcmc(&cfg, self.quiet),
            Command::Validate(a) => validate(&cfg, a, self.quiet),
        }
    }
}

fn process(cfg: &RunConfig) -> Result<ProcessParams> {
    ProcessParams::new(cfg.alpha, cfg.gamma).map_err(|e| CliError::config(e.to_string()))
}

fn sample(cfg: &RunConfig, allocation: Option<&Path>) -> Result<()> {
    let mut rng = stream_rng(cfg.seed, DATA_STREAM);
    let draw = draw_beta_process(&process(cfg)?, cfg.rounds, &mut rng).map_err(numerical("beta process draw"))?;
    io::write_draw(&cfg.output_path("sample.csv"), &draw)?;
    if let Some(path) = allocation {
        let z = draw_bernoulli_process(&draw, cfg.draws as usize, &mut rng).map_err(numerical("Bernoulli draw"))?;
        io::write_allocation(path, &z)?;
    }
    Ok(())
}

fn ibp(cfg: &RunConfig) -> Result<()> {
    if cfg.draws == 0 {
        return Err(CliError::config("draws: ibp needs at least one row"));
    }
    let z = draw_ibp(
        cfg.draws as usize,
        &process(cfg)?,
        &mut stream_rng(cfg.seed, DATA_STREAM),
    )
    .map_err(numerical("IBP draw"))?;
    io::write_allocation(&cfg.output_path("ibp.csv"), &z)
}

fn bounds(cfg: &RunConfig) -> Result<()> {
    let quad = cfg.quadrature.build()?;
    let b = &cfg.bounds;
    let curve = bound_sweep(&process(cfg)?, cfg.draws, b.r_min..=b.r_max, &quad).map_err(numerical("bound sweep"))?;
    io::write_bounds(&cfg.output_path("bounds.csv"), &curve)?;
    if let Some(grid) = &b.grid {
        let points = grid_sweep(&grid.alphas, &grid.gammas, &grid.draws, b.r_min..=b.r_max, &quad)
            .map_err(numerical("grid sweep"))?;
        let path = grid.out.clone().unwrap_or_else(|| cfg.output_dir().join("grid.csv"));
        io::write_grid(&path, &points)?;
    }
    Ok(())
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let s = generate_synthetic(&cfg.synth.build(), &mut stream_rng(cfg.seed, DATA_STREAM))
        .map_err(numerical("synthetic data"))?;
    let dir = cfg.output_dir();
    io::write_dataset(&cfg.output_path("data.csv"), &s.data)?;
    io::write_loadings(&dir.join("truth_loadings.csv"), &s.truth.theta, &s.pis)?;
    io::write_columns(&dir.join("truth_weights.csv"), "w_", &s.truth.w)?;
    io::write_indicators(&dir.join("truth_indicators.csv"), &s.truth.z)
}

#[derive(Serialize)]
struct Timings {
    total_seconds: f64,
    chain_seconds: f64,
    seconds_per_iteration: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    outputs: Vec<String>,
    samples: usize,
    pi_acceptance: f64,
    w_acceptance: f64,
    timings: Timings,
    recovery: Option<Recovery>,
}

fn mcmc(cfg: &RunConfig, quiet: bool) -> Result<()> {
    let start = Instant::now();
    let (data, truth) = match &cfg.mcmc.data {
        Some(path) => (io::read_dataset(path)?, None),
        None => {
            let s = generate_synthetic(&cfg.synth.build(), &mut stream_rng(cfg.seed, DATA_STREAM))
                .map_err(numerical("synthetic data"))?;
            (s.data, Some(s.truth.theta))
        }
    };
    let dim = data.dim();
    let total = cfg.mcmc.iterations;
    let mut seen = 0u64;
    let run = run_factor_chain(
        data,
        &cfg.mcmc,
        cfg.quadrature.build()?,
        &mut stream_rng(cfg.seed, CHAIN_STREAM),
        |s| {
            seen += 1;
            if !quiet && seen.is_multiple_of((total / 20).max(1)) {
                eprintln!(
                    "iteration {seen}/{total}: T = {}, alpha = {:.3}, gamma = {:.3}",
                    s.num_observed(),
                    s.alpha,
                    s.gamma
                );
            }
        },
    )?;
    let samples_path = cfg.output_path("samples.csv");
    let dir = cfg.output_dir();
    let loadings_path = dir.join("loadings.csv");
    let manifest_path = dir.join("manifest.json");
    io::write_samples(&samples_path, &run.archive)?;
    io::write_loading_archive(&loadings_path, &run.archive, dim)?;
    let manifest = Manifest {
        command: "mcmc",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        outputs: [&samples_path, &loadings_path]
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        samples: run.archive.records.len(),
        pi_acceptance: run.archive.pi_acceptance,
        w_acceptance: run.archive.w_acceptance,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            chain_seconds: run.seconds,
            seconds_per_iteration: run.seconds / total as f64,
        },
        recovery: truth.map(|t| recovery(&t, &run.archive)),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(&manifest_path, text + "\n").map_err(CliError::io(&manifest_path))
}

fn validate(cfg: &RunConfig, args: &ValidateArgs, quiet: bool) -> Result<()> {
    let checks = run_suite(args.suite, cfg.seed, args.full_scale, !quiet)?;
    let path = cfg.output_path("validate.csv");
    let header = ["suite", "check", "status", "detail"].map(String::from);
    let rows = checks.iter().map(|c| {
        [
            c.suite.name().to_string(),
            c.name.to_string(),
            if c.passed { "PASS" } else { "FAIL" }.to_string(),
            c.detail.clone(),
        ]
    });
    io::write_rows(&path, &header, rows)?;
    for c in &checks {
        println!(
            "{} {}/{}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite.name(),
            c.name,
            c.detail
        );
    }
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(CliError::ChecksFailed(n)),
    }
}
