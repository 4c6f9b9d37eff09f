//! The JSON run configuration. Every field has a default, unknown keys are
//! rejected, and [`RunConfig::validate`] checks all values before any
//! computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sbbp_core::mcmc::{Hyperparameters, McmcConfig, SamplerVariant, Schedule};
use sbbp_core::model::SynthConfig;
use sbbp_core::QuadratureConfig;

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SBBP_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory for all outputs; falls back to `SBBP_OUTPUT_DIR`, then `.`.
    pub output_dir: Option<PathBuf>,
    /// Path of the main output file, overriding its default name.
    pub out: Option<PathBuf>,
    /// Mass parameter `γ` of the beta process.
    pub gamma: f64,
    /// Concentration `α` of the beta process.
    pub alpha: f64,
    /// Rounds kept by `sample`.
    pub rounds: u32,
    /// Bernoulli draws `M`: rows for `ibp` and `sample`, draws for `bounds`.
    pub draws: u64,
    pub bounds: BoundsSection,
    pub quadrature: QuadratureSection,
    pub synth: SynthSection,
    pub mcmc: McmcSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: None,
            out: None,
            gamma: 2.0,
            alpha: 1.0,
            rounds: 20,
            draws: 10,
            bounds: BoundsSection::default(),
            quadrature: QuadratureSection::default(),
            synth: SynthSection::default(),
            mcmc: McmcSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub r_min: u32,
    pub r_max: u32,
    /// Optional `(α, γ, M)` grid of L1 gaps between the exact and analytic
    /// bounds over `r_min..=r_max`.
    pub grid: Option<GridSection>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            r_min: 1,
            r_max: 100,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub draws: Vec<u64>,
    /// Grid CSV path; defaults to `grid.csv` in the output directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: u32,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            rel_tol: q.rel_tol(),
            abs_tol: q.abs_tol(),
            max_level: q.max_level(),
        }
    }
}

impl QuadratureSection {
    pub fn build(&self) -> Result<QuadratureConfig> {
        QuadratureConfig::new(self.rel_tol, self.abs_tol, self.max_level)
            .map_err(|e| CliError::config(format!("quadrature: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Observation dimension; the 4×4 patterns fix it at 16.
    pub dim: usize,
    pub n: usize,
    pub k_true: usize,
    /// Concentration used for the true factor weights.
    pub alpha: f64,
    pub noise_var: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            dim: 16,
            n: s.n,
            k_true: s.k_true,
            alpha: s.alpha,
            noise_var: s.noise_var,
        }
    }
}

impl SynthSection {
    pub fn build(&self) -> SynthConfig {
        SynthConfig {
            n: self.n,
            k_true: self.k_true,
            alpha: self.alpha,
            noise_var: self.noise_var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub variant: Variant,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    /// Variance of the random-walk proposals for `π` and `w`.
    pub proposal_var: f64,
    /// Random-walk steps per variable per sweep.
    pub mh_steps: u32,
    /// Factors in the random starting state.
    pub init_factors: usize,
    /// Probability that a starting indicator is on.
    pub init_density: f64,
    pub init_noise_var: f64,
    pub init_alpha: f64,
    pub init_gamma: f64,
    /// `Gamma(τ₁, τ₂)` prior on `α`.
    pub alpha_prior: [f64; 2],
    /// `Gamma(κ₁, κ₂)` prior on `γ`.
    pub gamma_prior: [f64; 2],
    /// CSV of observations to fit; synthetic data is generated when absent.
    pub data: Option<PathBuf>,
}

impl Default for McmcSection {
    fn default() -> Self {
        Self {
            variant: Variant::Exact,
            iterations: 1_000,
            burn_in: 200,
            thin: 10,
            proposal_var: 1e-3,
            mh_steps: 50,
            init_factors: 100,
            init_density: 0.1,
            init_noise_var: 1.0,
            init_alpha: 1.0,
            init_gamma: 2.0,
            alpha_prior: [1.0, 1.0],
            gamma_prior: [1.0, 1.0],
            data: None,
        }
    }
}

impl McmcSection {
    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.iterations, self.burn_in, self.thin).map_err(|e| CliError::config(format!("mcmc: {e}")))
    }

    pub fn sampler(&self, quad: QuadratureConfig) -> McmcConfig {
        let sd = self.proposal_var.sqrt();
        McmcConfig {
            variant: match self.variant {
                Variant::Exact => SamplerVariant::Exact,
                Variant::Paper => SamplerVariant::Paper,
            },
            hyper: Hyperparameters {
                tau1: self.alpha_prior[0],
                tau2: self.alpha_prior[1],
                kappa1: self.gamma_prior[0],
                kappa2: self.gamma_prior[1],
            },
            pi_proposal_sd: sd,
            w_proposal_sd: sd,
            pi_steps: self.mh_steps,
            w_steps: self.mh_steps,
            quad,
            ..McmcConfig::default()
        }
    }
}

/// Collects every violated constraint instead of stopping at the first.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.0.push(format!("{name}: must be finite and > 0, got {v}"));
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }
}

impl RunConfig {
    /// Parses a JSON document; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = format!("line {} column {}", inner.line(), inner.column());
            CliError::config(if path == "." {
                format!("{inner}")
            } else {
                format!("{path}: {inner} ({at})")
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msgs) => {
                CliError::Config(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Problems::default();
        p.positive("alpha", self.alpha);
        p.positive("gamma", self.gamma);
        p.check(self.rounds >= 1, || "rounds: must be >= 1".into());
        p.check(self.bounds.r_min <= self.bounds.r_max, || {
            format!(
                "bounds: r_min {} exceeds r_max {}",
                self.bounds.r_min, self.bounds.r_max
            )
        });
        if let Some(g) = &self.bounds.grid {
            p.check(
                !g.alphas.is_empty() && !g.gammas.is_empty() && !g.draws.is_empty(),
                || "bounds.grid: alphas, gammas and draws must be non-empty".into(),
            );
            for &a in &g.alphas {
                p.positive("bounds.grid.alphas[]", a);
            }
            for &c in &g.gammas {
                p.positive("bounds.grid.gammas[]", c);
            }
        }
        if let Err(e) = self.quadrature.build() {
            p.0.extend(match e {
                CliError::Config(m) => m,
                other => vec![other.to_string()],
            });
        }
        let s = &self.synth;
        p.check(s.dim == 16, || {
            format!("synth.dim: the 4x4 patterns need 16, got {}", s.dim)
        });
        p.check(s.n >= 1, || "synth.n: must be >= 1".into());
        p.check((1..=20).contains(&s.k_true), || {
            format!("synth.k_true: must be in 1..=20, got {}", s.k_true)
        });
        p.positive("synth.alpha", s.alpha);
        p.positive("synth.noise_var", s.noise_var);
        let m = &self.mcmc;
        if let Err(e) = m.schedule() {
            p.0.push(e.to_string());
        }
        p.positive("mcmc.proposal_var", m.proposal_var);
        p.check(m.init_factors >= 1, || "mcmc.init_factors: must be >= 1".into());
        p.check(m.init_density > 0.0 && m.init_density <= 1.0, || {
            format!("mcmc.init_density: must be in (0, 1], got {}", m.init_density)
        });
        p.positive("mcmc.init_noise_var", m.init_noise_var);
        p.positive("mcmc.init_alpha", m.init_alpha);
        p.positive("mcmc.init_gamma", m.init_gamma);
        for (name, v) in [("mcmc.alpha_prior", m.alpha_prior), ("mcmc.gamma_prior", m.gamma_prior)] {
            p.positive(&format!("{name}[0]"), v[0]);
            p.positive(&format!("{name}[1]"), v[1]);
        }
        if p.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(p.0))
        }
    }

    /// Output directory: the config value, then the environment, then `.`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// `out` if set, else `default_name` inside the output directory.
    pub fn output_path(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.output_dir().join(default_name))
    }
}

/// The bundled full-scale synthetic-experiment configuration.
pub const PAPER_CONFIG: &str = include_str!("../configs/paper.json");
/// The bundled reduced-scale variant of [`PAPER_CONFIG`].
pub const CI_CONFIG: &str = include_str!("../configs/ci.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_are_valid() {
        for text in [PAPER_CONFIG, CI_CONFIG] {
            RunConfig::from_json(text).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = RunConfig::from_json(r#"{"mcmc": {"iteratons": 5}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mcmc.iteratons"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn validation_reports_every_problem() {
        let cfg = RunConfig {
            alpha: -1.0,
            gamma: 0.0,
            ..RunConfig::default()
        };
        match cfg.validate() {
            Err(CliError::Config(msgs)) => assert_eq!(msgs.len(), 2, "{msgs:?}"),
            other => panic!("{other:?}"),
        }
    }
}
