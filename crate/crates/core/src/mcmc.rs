//! Posterior inference for the atoms of a stick-breaking beta process that
//! were hit by at least one of `M` Bernoulli draws.
//!
//! Each observed atom carries its weight `π`, its round `d` and, for `d > 1`,
//! the auxiliary `w = e^{-T}` of the construction. A sweep updates `π` and `w`
//! by random-walk Metropolis-Hastings, resamples `d`, draws `α` and `γ`,
//! completes the unobserved part of every round and finally hands control to
//! a [`LikelihoodHook`] that resamples the binary matrix.
//!
//! Two samplers are provided. [`SamplerVariant::Paper`] uses the original
//! updates: a `d` prior proportional to `ξ_i` and an `α` conditional that
//! ignores the `α` dependence of the void probability. [`SamplerVariant::Exact`]
//! targets the posterior exactly: `d` is drawn from its full conditional given
//! `(π, w)`, where a round-one atom carries a `Uniform(π, 1)` placeholder for
//! `w`, and `α` is updated by an independence Metropolis step whose proposal
//! is the paper's gamma conditional.

use alloc::vec::Vec;

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;
use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::{Gamma, Normal};

use crate::construct::{beta1, clamp_weight, poisson_count, round_gamma};
use crate::error::{Error, Result};
use crate::measure::{check_alpha, ln_round_density, ObservedRateTable, RoundIndex};
use crate::quad::QuadratureConfig;
use crate::special::{harmonic_rate, ln_add_exp, ln_factorial, ln_gamma};

/// Which transition kernels a sweep uses for `d` and `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerVariant {
    #[default]
    Exact,
    Paper,
}

/// `Gamma(τ₁, τ₂)` prior on `α` and `Gamma(κ₁, κ₂)` prior on `γ` (shape,
/// rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub tau1: f64,
    pub tau2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            tau1: 1.0,
            tau2: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
        }
    }
}

/// Per-sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub variant: SamplerVariant,
    pub hyper: Hyperparameters,
    /// Standard deviation of the random-walk proposal for `π`.
    pub pi_proposal_sd: f64,
    /// Standard deviation of the random-walk proposal for `w`.
    pub w_proposal_sd: f64,
    pub pi_steps: u32,
    pub w_steps: u32,
    /// Steps given to a freshly initialised `w`.
    pub w_init_steps: u32,
    /// Independence Metropolis steps for `α` (exact variant).
    pub alpha_steps: u32,
    /// Random-walk steps on `ln α` that move the weights along with it
    /// (exact variant).
    pub alpha_log_steps: u32,
    pub alpha_log_sd: f64,
    /// Rounds completed beyond the deepest observed atom.
    pub extra_rounds: u32,
    /// Rounds are added until the expected number of ones among atoms of
    /// later rounds, `γ M (α/(1+α))^R`, is below this.
    pub new_atom_tol: f64,
    /// Quadrature used by the paper variant's marginal likelihood.
    pub quad: QuadratureConfig,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            variant: SamplerVariant::Exact,
            hyper: Hyperparameters::default(),
            pi_proposal_sd: 1e-3f64.sqrt(),
            w_proposal_sd: 1e-3f64.sqrt(),
            pi_steps: 50,
            w_steps: 50,
            w_init_steps: 200,
            alpha_steps: 5,
            alpha_log_steps: 5,
            alpha_log_sd: 0.5,
            extra_rounds: 5,
            new_atom_tol: 1e-3,
            quad: QuadratureConfig::new(1e-8, 1e-14, 12).expect("valid defaults"),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        for (name, v) in [
            ("tau1", h.tau1),
            ("tau2", h.tau2),
            ("kappa1", h.kappa1),
            ("kappa2", h.kappa2),
            ("pi_proposal_sd", self.pi_proposal_sd),
            ("w_proposal_sd", self.w_proposal_sd),
            ("new_atom_tol", self.new_atom_tol),
            ("alpha_log_sd", self.alpha_log_sd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(alloc::format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Iteration count, burn-in and thinning of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
}

impl Schedule {
    pub fn new(iterations: u64, burn_in: u64, thin: u64) -> Result<Self> {
        if thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if burn_in > iterations {
            return Err(Error::Config(alloc::format!(
                "burn-in {burn_in} exceeds the {iterations} iterations"
            )));
        }
        Ok(Self {
            iterations,
            burn_in,
            thin,
        })
    }

    fn keeps(&self, iteration: u64) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in).is_multiple_of(self.thin)
    }
}

/// One atom of the chain state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcAtomState {
    pub theta: f64,
    pub pi: f64,
    /// Present exactly when `d > 1`; then `π < w <= 1`.
    pub w: Option<f64>,
    pub d: RoundIndex,
    /// Number of draws that use the atom.
    pub m1: u64,
    pub m0: u64,
}

impl McmcAtomState {
    /// A round-one atom with the given counts.
    pub fn round_one(theta: f64, pi: f64, m1: u64, m0: u64) -> Self {
        Self {
            theta,
            pi,
            w: None,
            d: RoundIndex::FIRST,
            m1,
            m0,
        }
    }

    pub fn is_observed(&self) -> bool {
        self.m1 > 0
    }

    /// Checks the support constraints.
    pub fn is_valid(&self) -> bool {
        let pi_ok = self.pi > 0.0 && self.pi < 1.0;
        match (self.d.get(), self.w) {
            (1, None) => pi_ok,
            (d, Some(w)) if d > 1 => pi_ok && self.pi < w && w <= 1.0,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcState {
    pub atoms: Vec<McmcAtomState>,
    pub alpha: f64,
    pub gamma: f64,
    pub iteration: u64,
}

impl McmcState {
    pub fn new(atoms: Vec<McmcAtomState>, alpha: f64, gamma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain("gamma", gamma, "finite and > 0"));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_valid()) {
            return Err(Error::domain("pi", a.pi, "atom violates 0 < pi < w <= 1"));
        }
        Ok(Self {
            atoms,
            alpha,
            gamma,
            iteration: 0,
        })
    }

    /// Number of observed atoms `T`.
    pub fn num_observed(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_observed()).count()
    }
}

fn ln_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    u.ln()
}

fn ln_beta_kernel(pi: f64, m1: u64, m0: u64) -> f64 {
    m1 as f64 * pi.ln() + m0 as f64 * (-pi).ln_1p()
}

/// Unnormalised log target of `π` given `(w, d, α)` and the counts; `-∞`
/// outside the support.
pub fn ln_pi_target(atom: &McmcAtomState, pi: f64, alpha: f64) -> f64 {
    let upper = atom.w.unwrap_or(1.0);
    if !(pi > 0.0 && pi < upper) {
        return f64::NEG_INFINITY;
    }
    let prior = match atom.w {
        Some(w) => (alpha - 1.0) * (w - pi).ln(),
        None => (alpha - 1.0) * (-pi).ln_1p(),
    };
    ln_beta_kernel(pi, atom.m1, atom.m0) + prior
}

/// Unnormalised log target of `w` given `(π, d, α)`: `w⁻¹ (-ln w)^(d-2)
/// (w-π)^(α-1)` on `(π, 1)`.
pub fn ln_w_target(pi: f64, w: f64, d: RoundIndex, alpha: f64) -> f64 {
    if !(w > pi && w < 1.0) {
        return f64::NEG_INFINITY;
    }
    let p = (d.get() - 2) as f64;
    let log_term = if p == 0.0 { 0.0 } else { p * (-w.ln()).ln() };
    -w.ln() + log_term + (alpha - 1.0) * (w - pi).ln()
}

/// Random-walk updates of `π`; returns the number of accepted moves.
pub fn mh_update_pi<R: Rng + ?Sized>(atom: &mut McmcAtomState, alpha: f64, sd: f64, steps: u32, rng: &mut R) -> u32 {
    let step = Normal::new(0.0, sd).expect("validated proposal scale");
    let mut current = ln_pi_target(atom, atom.pi, alpha);
    let mut accepted = 0;
    for _ in 0..steps {
        let proposal = atom.pi + step.sample(rng);
        let next = ln_pi_target(atom, proposal, alpha);
        if next > f64::NEG_INFINITY && ln_uniform(rng) < next - current {
            atom.pi = proposal;
            current = next;
            accepted += 1;
        }
    }
    accepted
}

/// Random-walk updates of `w`; a no-op for round-one atoms.
pub fn mh_update_w<R: Rng + ?Sized>(atom: &mut McmcAtomState, alpha: f64, sd: f64, steps: u32, rng: &mut R) -> u32 {
    let Some(mut w) = atom.w else {
        return 0;
    };
    let step = Normal::new(0.0, sd).expect("validated proposal scale");
    let mut current = ln_w_target(atom.pi, w, atom.d, alpha);
    let mut accepted = 0;
    for _ in 0..steps {
        let proposal = w + step.sample(rng);
        let next = ln_w_target(atom.pi, proposal, atom.d, alpha);
        if next > f64::NEG_INFINITY && ln_uniform(rng) < next - current {
            w = proposal;
            current = next;
            accepted += 1;
        }
    }
    atom.w = Some(w);
    accepted
}

fn uniform_between<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    lo + (hi - lo) * u
}

/// Exact conditional of `d` given `(π, w, α)`.
///
/// For `d = 1` a placeholder `w ~ Uniform(π, 1)` is drawn first, so the
/// joint density is `α (1-π)^(α-2)` there. For `d >= 2` the joint density
/// `α^d/(d-2)! w⁻¹ (ln 1/w)^(d-2) (w-π)^(α-1)` sums to
/// `α² w^(-1-α) (w-π)^(α-1)` and `d - 2` is `Poisson(α ln 1/w)`.
pub fn gibbs_update_d_exact<R: Rng + ?Sized>(atom: &mut McmcAtomState, alpha: f64, rng: &mut R) -> Result<()> {
    let pi = atom.pi;
    let w = match atom.w {
        Some(w) => w,
        None => uniform_between(pi, 1.0, rng),
    };
    let ln_first = alpha.ln() + (alpha - 2.0) * (-pi).ln_1p();
    let ln_later = 2.0 * alpha.ln() - (1.0 + alpha) * w.ln() + (alpha - 1.0) * (w - pi).ln();
    let p_first = 1.0 / (1.0 + (ln_later - ln_first).exp());
    let u: f64 = rng.random();
    // no representable w strictly between π and 1 leaves only round one
    if u < p_first || !(w > pi && w < 1.0) {
        atom.d = RoundIndex::FIRST;
        atom.w = None;
    } else {
        let extra = poisson_count(-alpha * w.ln(), rng)?;
        atom.d = RoundIndex::new(2 + extra as u32)?;
        atom.w = Some(w);
    }
    Ok(())
}

/// Unnormalised weights `p_i`, `i >= 1`, of a distribution over rounds,
/// with envelopes that make the infinite support searchable.
pub trait RoundWeights {
    fn ln_weight(&mut self, i: u32) -> Result<f64>;
    /// Upper bound on `max_{j >= i} ln p_j`.
    fn ln_tail_sup(&mut self, i: u32) -> Result<f64>;
    /// Upper bound on `ln Σ_{j >= i} p_j`.
    fn ln_tail_sum(&mut self, i: u32) -> Result<f64>;
}

/// Slice move for a distribution over rounds: draws a level below the
/// current weight, enumerates rounds until the envelope drops under it and
/// picks uniformly among those above the level. Returns the new round and
/// the enumeration depth.
pub fn slice_sample_round<W: RoundWeights, R: Rng + ?Sized>(
    weights: &mut W,
    current: RoundIndex,
    rng: &mut R,
) -> Result<(RoundIndex, u32)> {
    let level = weights.ln_weight(current.get())? + ln_uniform(rng);
    let mut above = Vec::new();
    let mut i = 1u32;
    loop {
        if weights.ln_tail_sup(i)? < level {
            break;
        }
        if weights.ln_weight(i)? > level {
            above.push(i);
        }
        i += 1;
        if i > 100_000 {
            return Err(Error::numerical(
                "slice_sample_round",
                "envelope did not fall below the slice",
            ));
        }
    }
    let pick = above[rng.random_range(0..above.len())];
    Ok((RoundIndex::new(pick)?, i - 1))
}

/// Normalised probabilities of rounds `1..=n`, with `n` the first round
/// whose remaining tail mass is below `rel_tol` of the total.
pub fn round_probabilities<W: RoundWeights>(weights: &mut W, rel_tol: f64) -> Result<Vec<f64>> {
    let mut logs = Vec::new();
    let mut total = f64::NEG_INFINITY;
    let mut i = 1u32;
    loop {
        let lw = weights.ln_weight(i)?;
        logs.push(lw);
        total = ln_add_exp(total, lw);
        i += 1;
        if weights.ln_tail_sum(i)? < total + rel_tol.ln() {
            break;
        }
        if i > 100_000 {
            return Err(Error::numerical("round_probabilities", "tail did not decay"));
        }
    }
    Ok(logs.into_iter().map(|l| (l - total).exp()).collect())
}

// ln of sup_{n >= m} x^n / n!
fn ln_poisson_term_sup(m: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = m.max(x.floor() as u64);
    n as f64 * x.ln() - ln_factorial(n)
}

fn ln_xi_envelope(i: u32, alpha: f64, gamma: f64, draws: u64) -> f64 {
    (gamma * draws as f64 / alpha).ln() + i as f64 * (alpha / (1.0 + alpha)).ln()
}

/// The prior `P(d = i) ∝ ξ_i` on the round of an observed atom.
pub struct XiWeights {
    gamma: f64,
    table: ObservedRateTable,
}

impl XiWeights {
    pub fn new(alpha: f64, gamma: f64, draws: u64, quad: QuadratureConfig) -> Result<Self> {
        if draws == 0 {
            return Err(Error::domain("M", 0.0, ">= 1 for a proper round prior"));
        }
        Ok(Self {
            gamma,
            table: ObservedRateTable::new(alpha, draws, quad)?,
        })
    }
}

impl RoundWeights for XiWeights {
    fn ln_weight(&mut self, i: u32) -> Result<f64> {
        Ok((self.gamma * self.table.fraction(RoundIndex::new(i)?)?).ln())
    }

    fn ln_tail_sup(&mut self, i: u32) -> Result<f64> {
        Ok(ln_xi_envelope(i, self.table.alpha(), self.gamma, self.table.draws()).min(self.gamma.ln()))
    }

    fn ln_tail_sum(&mut self, i: u32) -> Result<f64> {
        let alpha = self.table.alpha();
        Ok(ln_xi_envelope(i, alpha, self.gamma, self.table.draws()) + (1.0 + alpha).ln())
    }
}

/// The paper's conditional for `d`: prior `∝ ξ_i` times the likelihood of
/// `π`, using the retained `w` when there is one and the marginal `f_i(π)`
/// otherwise.
pub struct PaperRoundWeights {
    prior: XiWeights,
    pi: f64,
    w: Option<f64>,
    quad: QuadratureConfig,
    marginal: Vec<f64>,
}

impl PaperRoundWeights {
    pub fn new(atom: &McmcAtomState, alpha: f64, gamma: f64, draws: u64, quad: QuadratureConfig) -> Result<Self> {
        Ok(Self {
            prior: XiWeights::new(alpha, gamma, draws, quad)?,
            pi: atom.pi,
            w: atom.w,
            quad,
            marginal: Vec::new(),
        })
    }

    fn alpha(&self) -> f64 {
        self.prior.table.alpha()
    }

    fn ln_likelihood(&mut self, i: u32) -> Result<f64> {
        let (pi, alpha) = (self.pi, self.alpha());
        if i == 1 {
            return Ok(alpha.ln() + (alpha - 1.0) * (-pi).ln_1p());
        }
        match self.w {
            Some(w) => {
                let p = (i - 2) as f64;
                let log_term = if p == 0.0 { 0.0 } else { p * (-w.ln()).ln() };
                Ok(i as f64 * alpha.ln() - ln_gamma(p + 1.0) - w.ln() + log_term + (alpha - 1.0) * (w - pi).ln())
            }
            None => {
                while self.marginal.len() < i as usize - 1 {
                    let round = RoundIndex::new(self.marginal.len() as u32 + 2)?;
                    self.marginal.push(ln_round_density(pi, round, alpha, &self.quad)?);
                }
                Ok(self.marginal[i as usize - 2])
            }
        }
    }

    // Bound on max_{j >= max(i, 2)} of the likelihood.
    fn ln_likelihood_sup(&mut self, i: u32) -> Result<f64> {
        let (pi, alpha) = (self.pi, self.alpha());
        let m = i.max(2) as u64 - 2;
        match self.w {
            // α^j/(j-2)! w⁻¹ x^(j-2) (w-π)^(α-1), x = ln 1/w
            Some(w) => {
                Ok(2.0 * alpha.ln() - w.ln() + (alpha - 1.0) * (w - pi).ln() + ln_poisson_term_sup(m, -alpha * w.ln()))
            }
            // f_j <= f_2 (α ln 1/π)^(j-2)/(j-2)!
            None => Ok(self.ln_likelihood(2)? + ln_poisson_term_sup(m, -alpha * pi.ln())),
        }
    }
}

impl RoundWeights for PaperRoundWeights {
    fn ln_weight(&mut self, i: u32) -> Result<f64> {
        Ok(self.prior.ln_weight(i)? + self.ln_likelihood(i)?)
    }

    fn ln_tail_sup(&mut self, i: u32) -> Result<f64> {
        let like = if i == 1 {
            self.ln_likelihood(1)?.max(self.ln_likelihood_sup(2)?)
        } else {
            self.ln_likelihood_sup(i)?
        };
        Ok(self.prior.ln_tail_sup(i)? + like)
    }

    fn ln_tail_sum(&mut self, i: u32) -> Result<f64> {
        let like = if i == 1 {
            self.ln_likelihood(1)?.max(self.ln_likelihood_sup(2)?)
        } else {
            self.ln_likelihood_sup(i)?
        };
        Ok(self.prior.ln_tail_sum(i)? + like)
    }
}

/// The paper's `d` update. A move from round one draws `w ~ Uniform(π, 1)`
/// and gives it `w_init_steps` random-walk steps; a move to round one drops
/// `w`. Returns the enumeration depth.
pub fn gibbs_update_d_paper<R: Rng + ?Sized>(
    atom: &mut McmcAtomState,
    alpha: f64,
    gamma: f64,
    draws: u64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<u32> {
    let mut weights = PaperRoundWeights::new(atom, alpha, gamma, draws, cfg.quad)?;
    let (d, depth) = slice_sample_round(&mut weights, atom.d, rng)?;
    let was_first = atom.d.get() == 1;
    atom.d = d;
    if d.get() == 1 {
        atom.w = None;
    } else if was_first {
        atom.w = Some(uniform_between(atom.pi, 1.0, rng));
        mh_update_w(atom, alpha, cfg.w_proposal_sd, cfg.w_init_steps, rng);
    }
    Ok(depth)
}

/// Shape and rate of the gamma conditional of `α` over the observed atoms:
/// `(τ₁ + Σ d_k, τ₂ - Σ ln(w_k - π_k))` with `w_k = 1` for round-one atoms.
pub fn alpha_conditional(atoms: &[McmcAtomState], hyper: &Hyperparameters) -> Result<(f64, f64)> {
    let mut shape = hyper.tau1;
    let mut rate = hyper.tau2;
    for a in atoms.iter().filter(|a| a.is_observed()) {
        shape += a.d.get() as f64;
        rate -= match a.w {
            Some(w) => (w - a.pi).ln(),
            None => (-a.pi).ln_1p(),
        };
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::numerical(
            "alpha_conditional",
            alloc::format!("rate {rate} is not positive"),
        ));
    }
    Ok((shape, rate))
}

/// Shape and rate of the gamma conditional of `γ`:
/// `(κ₁ + T, κ₂ + Σ_{n<M} α/(α+n))`.
pub fn gamma_conditional(observed: usize, alpha: f64, draws: u64, hyper: &Hyperparameters) -> (f64, f64) {
    (
        hyper.kappa1 + observed as f64,
        hyper.kappa2 + harmonic_rate(alpha, draws),
    )
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|_| Error::numerical("gamma_draw", alloc::format!("invalid Gamma({shape}, {rate})")))?;
    Ok(dist.sample(rng).max(f64::MIN_POSITIVE))
}

/// Resamples `α`. The paper variant draws from the gamma conditional; the
/// exact variant uses it as an independence proposal corrected by the
/// `exp(-γ Σ_n α/(α+n))` void probability of unobserved atoms.
pub fn gibbs_update_alpha<R: Rng + ?Sized>(
    state: &mut McmcState,
    draws: u64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<()> {
    let (shape, rate) = alpha_conditional(&state.atoms, &cfg.hyper)?;
    match cfg.variant {
        SamplerVariant::Paper => state.alpha = gamma_draw(shape, rate, rng)?,
        SamplerVariant::Exact => {
            let mut void = harmonic_rate(state.alpha, draws);
            for _ in 0..cfg.alpha_steps {
                let proposal = gamma_draw(shape, rate, rng)?;
                let next = harmonic_rate(proposal, draws);
                if ln_uniform(rng) < -state.gamma * (next - void) {
                    state.alpha = proposal;
                    void = next;
                }
            }
        }
    }
    Ok(())
}

/// Random-walk moves on `ln α` that hold each observed atom's underlying
/// uniform and gamma variables fixed, so `π` and `w` move with `α`. Breaks
/// the coupling between `α` and weights close to one. Returns the number
/// of accepted moves.
///
/// With `V = 1 - U^{1/α}` and `T = G/α`, the prior density of `(U, G)`
/// does not involve `α`, leaving the target
/// `Gamma(α; τ₁, τ₂) exp(-γ Σ_n α/(α+n)) Π_k π_k^{m1} (1-π_k)^{m0}`.
pub fn mh_update_alpha_noncentred<R: Rng + ?Sized>(
    state: &mut McmcState,
    draws: u64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<u32> {
    let step = Normal::new(0.0, cfg.alpha_log_sd).map_err(|_| Error::Config("alpha_log_sd must be > 0".into()))?;
    // (ln(1 - V), T) per observed atom, T = 0 for round one
    let base: Vec<(f64, f64)> = state
        .atoms
        .iter()
        .filter(|a| a.is_observed())
        .map(|a| match a.w {
            Some(w) => (((w - a.pi) / w).ln(), -w.ln()),
            None => ((-a.pi).ln_1p(), 0.0),
        })
        .collect();
    let counts: Vec<(u64, u64)> = state
        .atoms
        .iter()
        .filter(|a| a.is_observed())
        .map(|a| (a.m1, a.m0))
        .collect();
    let h = &cfg.hyper;
    let gamma = state.gamma;
    let alpha0 = state.alpha;
    let weights_at = |alpha: f64| -> Option<Vec<(f64, f64)>> {
        let scale = alpha0 / alpha;
        base.iter()
            .map(|&(ln_one_minus_v, t)| {
                let v = -(scale * ln_one_minus_v).exp_m1();
                let w = (-scale * t).exp();
                let pi = v * w;
                let w_ok = t == 0.0 || w < 1.0;
                (pi > 0.0 && pi < w && pi < 1.0 && w_ok).then_some((pi, w))
            })
            .collect()
    };
    let ln_target = |alpha: f64, weights: &[(f64, f64)]| -> f64 {
        let like: f64 = weights
            .iter()
            .zip(&counts)
            .map(|(&(pi, _), &(m1, m0))| ln_beta_kernel(pi, m1, m0))
            .sum();
        h.tau1 * alpha.ln() - h.tau2 * alpha - gamma * harmonic_rate(alpha, draws) + like
    };
    let mut alpha = alpha0;
    let Some(mut weights) = weights_at(alpha) else {
        return Ok(0);
    };
    let mut current = ln_target(alpha, &weights);
    let mut accepted = 0;
    for _ in 0..cfg.alpha_log_steps {
        let proposal = alpha * step.sample(rng).exp();
        if !(proposal > 0.0 && proposal.is_finite()) {
            continue;
        }
        let Some(next_weights) = weights_at(proposal) else {
            continue;
        };
        let next = ln_target(proposal, &next_weights);
        if ln_uniform(rng) < next - current {
            alpha = proposal;
            weights = next_weights;
            current = next;
            accepted += 1;
        }
    }
    if accepted > 0 {
        state.alpha = alpha;
        for (atom, &(pi, w)) in state.atoms.iter_mut().filter(|a| a.is_observed()).zip(&weights) {
            atom.pi = pi;
            if atom.w.is_some() {
                atom.w = Some(w);
            }
        }
    }
    Ok(accepted)
}

pub fn gibbs_update_gamma<R: Rng + ?Sized>(
    state: &mut McmcState,
    draws: u64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<()> {
    let (shape, rate) = gamma_conditional(state.num_observed(), state.alpha, draws, &cfg.hyper);
    state.gamma = gamma_draw(shape, rate, rng)?;
    Ok(())
}

/// Outcome of [`sample_new_atoms`]: which old atoms survived and how many
/// were appended after them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewAtoms {
    pub kept: Vec<bool>,
    pub added: usize,
    pub rounds: u32,
}

/// Replaces the unobserved atoms by a fresh draw from their conditional.
///
/// Each round `1..=R` proposes `Poisson(γ)` atoms in the forward order
/// (count, locations, then `V` and `T` per atom) and keeps each with
/// probability `(1-π)^M`; the kept atoms form a Poisson process with mean
/// `γ - ξ_i`. `R` is the deepest observed round plus `extra_rounds`,
/// raised until the expected number of ones in later rounds is below
/// `new_atom_tol`.
pub fn sample_new_atoms<R: Rng + ?Sized>(
    state: &mut McmcState,
    draws: u64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<NewAtoms> {
    let kept: Vec<bool> = state.atoms.iter().map(|a| a.is_observed()).collect();
    state.atoms.retain(|a| a.is_observed());
    let deepest = state.atoms.iter().map(|a| a.d.get()).max().unwrap_or(0);
    let (alpha, gamma) = (state.alpha, state.gamma);
    let ratio = (alpha / (1.0 + alpha)).ln();
    let mut rounds = deepest + cfg.extra_rounds;
    while gamma * draws as f64 * (rounds as f64 * ratio).exp() > cfg.new_atom_tol {
        rounds += 1;
    }
    let before = state.atoms.len();
    for i in 1..=rounds {
        let count = poisson_count(gamma, rng)? as usize;
        let thetas: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        for theta in thetas {
            let v = beta1(alpha, rng);
            let (pi, w) = if i == 1 {
                (v, None)
            } else {
                let w = (-round_gamma(i, alpha, rng)).exp();
                let pi = clamp_weight(v * w);
                if pi >= w {
                    // weight below the smallest normal number
                    continue;
                }
                (pi, Some(w))
            };
            let survive = (draws as f64 * (-pi).ln_1p()).exp();
            let u: f64 = rng.random();
            if u < survive {
                state.atoms.push(McmcAtomState {
                    theta,
                    pi,
                    w,
                    d: RoundIndex::new(i)?,
                    m1: 0,
                    m0: draws,
                });
            }
        }
    }
    Ok(NewAtoms {
        kept,
        added: state.atoms.len() - before,
        rounds,
    })
}

/// Model-specific part of a sweep: owns the binary matrix and anything
/// else the likelihood needs, aligned with the chain's atom list.
pub trait LikelihoodHook {
    type Snapshot: Clone;

    /// Number of Bernoulli draws `M` (rows of the binary matrix).
    fn num_rows(&self) -> u64;
    /// Drops atoms whose flag is false, preserving order.
    fn retain_atoms(&mut self, kept: &[bool]);
    /// Appends `n` atoms that no row uses yet.
    fn push_atoms<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Result<()>;
    /// Resamples the binary matrix (and model parameters) given the atom
    /// weights; returns the number of rows using each atom.
    fn update<R: Rng + ?Sized>(&mut self, atoms: &[McmcAtomState], rng: &mut R) -> Result<Vec<u64>>;
    /// Model state to archive alongside the chain, if any.
    fn snapshot(&self, atoms: &[McmcAtomState]) -> Option<Self::Snapshot>;
}

/// The bare beta-Bernoulli model: every row draws `z_k ~ Bernoulli(π_k)`
/// independently, with no further data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliOnly {
    rows: u64,
}

impl BernoulliOnly {
    pub fn new(rows: u64) -> Self {
        Self { rows }
    }
}

impl LikelihoodHook for BernoulliOnly {
    type Snapshot = ();

    fn num_rows(&self) -> u64 {
        self.rows
    }

    fn retain_atoms(&mut self, _kept: &[bool]) {}

    fn push_atoms<R: Rng + ?Sized>(&mut self, _n: usize, _rng: &mut R) -> Result<()> {
        Ok(())
    }

    fn update<R: Rng + ?Sized>(&mut self, atoms: &[McmcAtomState], rng: &mut R) -> Result<Vec<u64>> {
        Ok(atoms
            .iter()
            .map(|a| (0..self.rows).filter(|_| rng.random::<f64>() < a.pi).count() as u64)
            .collect())
    }

    fn snapshot(&self, _atoms: &[McmcAtomState]) -> Option<()> {
        None
    }
}

/// One full sweep in the fixed order: `π`, `w`, `d`, `α`, `γ`, new atoms,
/// then the hook.
pub fn sweep<H: LikelihoodHook, R: Rng + ?Sized>(
    state: &mut McmcState,
    hook: &mut H,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<SweepStats> {
    let draws = hook.num_rows();
    let mut stats = SweepStats::default();
    let alpha = state.alpha;
    for atom in state.atoms.iter_mut().filter(|a| a.is_observed()) {
        stats.pi_accepted += mh_update_pi(atom, alpha, cfg.pi_proposal_sd, cfg.pi_steps, rng);
        stats.pi_proposed += cfg.pi_steps;
    }
    for atom in state.atoms.iter_mut().filter(|a| a.is_observed()) {
        if atom.w.is_some() {
            stats.w_accepted += mh_update_w(atom, alpha, cfg.w_proposal_sd, cfg.w_steps, rng);
            stats.w_proposed += cfg.w_steps;
        }
    }
    let gamma = state.gamma;
    for atom in state.atoms.iter_mut().filter(|a| a.is_observed()) {
        match cfg.variant {
            SamplerVariant::Exact => gibbs_update_d_exact(atom, alpha, rng)?,
            SamplerVariant::Paper => {
                let depth = gibbs_update_d_paper(atom, alpha, gamma, draws, cfg, rng)?;
                stats.max_depth = stats.max_depth.max(depth);
            }
        }
    }
    gibbs_update_alpha(state, draws, cfg, rng)?;
    if cfg.variant == SamplerVariant::Exact {
        mh_update_alpha_noncentred(state, draws, cfg, rng)?;
    }
    gibbs_update_gamma(state, draws, cfg, rng)?;
    let fresh = sample_new_atoms(state, draws, cfg, rng)?;
    hook.retain_atoms(&fresh.kept);
    hook.push_atoms(fresh.added, rng)?;
    let ones = hook.update(&state.atoms, rng)?;
    if ones.len() != state.atoms.len() {
        return Err(Error::numerical(
            "sweep",
            alloc::format!("hook returned {} counts for {} atoms", ones.len(), state.atoms.len()),
        ));
    }
    for (atom, m1) in state.atoms.iter_mut().zip(ones) {
        atom.m1 = m1;
        atom.m0 = draws - m1;
    }
    stats.rounds = fresh.rounds;
    state.iteration += 1;
    Ok(stats)
}

/// Acceptance counts and sizes from one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub pi_accepted: u32,
    pub pi_proposed: u32,
    pub w_accepted: u32,
    pub w_proposed: u32,
    /// Deepest slice enumeration in the paper `d` update.
    pub max_depth: u32,
    /// Rounds completed by the new-atom step.
    pub rounds: u32,
}

/// One retained state.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRecord<S> {
    pub iteration: u64,
    pub alpha: f64,
    pub gamma: f64,
    /// Weights and rounds of the observed atoms.
    pub pis: Vec<f64>,
    pub rounds: Vec<u32>,
    pub model: Option<S>,
}

impl<S> ArchiveRecord<S> {
    /// Number of observed atoms `T`.
    pub fn num_observed(&self) -> usize {
        self.pis.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleArchive<S> {
    pub records: Vec<ArchiveRecord<S>>,
    pub pi_acceptance: f64,
    pub w_acceptance: f64,
}

/// Failure inside [`run_chain`] with the state reached before it.
#[derive(Debug, Clone)]
pub struct ChainError {
    pub error: Error,
    pub iteration: u64,
    pub checkpoint: McmcState,
}

impl core::fmt::Display for ChainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "iteration {}: {}", self.iteration, self.error)
    }
}

impl core::error::Error for ChainError {}

fn record<H: LikelihoodHook>(state: &McmcState, hook: &H) -> ArchiveRecord<H::Snapshot> {
    let observed = state.atoms.iter().filter(|a| a.is_observed());
    ArchiveRecord {
        iteration: state.iteration,
        alpha: state.alpha,
        gamma: state.gamma,
        pis: observed.clone().map(|a| a.pi).collect(),
        rounds: observed.map(|a| a.d.get()).collect(),
        model: hook.snapshot(&state.atoms),
    }
}

/// Runs `schedule.iterations` sweeps, archiving every `thin`-th state
/// after burn-in. `on_sweep` sees each state as it is produced.
pub fn run_chain<H, R, F>(
    state: &mut McmcState,
    hook: &mut H,
    cfg: &McmcConfig,
    schedule: &Schedule,
    rng: &mut R,
    mut on_sweep: F,
) -> core::result::Result<SampleArchive<H::Snapshot>, ChainError>
where
    H: LikelihoodHook,
    R: Rng + ?Sized,
    F: FnMut(&McmcState, &SweepStats),
{
    let fail = |error: Error, state: &McmcState| ChainError {
        error,
        iteration: state.iteration,
        checkpoint: state.clone(),
    };
    cfg.validate().map_err(|e| fail(e, state))?;
    let mut records = Vec::new();
    let (mut pa, mut pp, mut wa, mut wp) = (0u64, 0u64, 0u64, 0u64);
    for n in 1..=schedule.iterations {
        let before = state.clone();
        let stats = sweep(state, hook, cfg, rng).map_err(|e| fail(e, &before))?;
        pa += stats.pi_accepted as u64;
        pp += stats.pi_proposed as u64;
        wa += stats.w_accepted as u64;
        wp += stats.w_proposed as u64;
        on_sweep(state, &stats);
        if schedule.keeps(n) {
            records.push(record(state, hook));
        }
    }
    let rate = |a: u64, p: u64| if p == 0 { 0.0 } else { a as f64 / p as f64 };
    Ok(SampleArchive {
        records,
        pi_acceptance: rate(pa, pp),
        w_acceptance: rate(wa, wp),
    })
}

/// Chain state for a fresh run: one round-one atom per used column of the
/// initial binary matrix, with `π = (m1 + 1)/(M + 2)`.
pub fn initial_state(column_counts: &[u64], draws: u64, alpha: f64, gamma: f64, thetas: &[f64]) -> Result<McmcState> {
    let atoms = column_counts
        .iter()
        .zip(thetas)
        .map(|(&m1, &theta)| McmcAtomState::round_one(theta, (m1 as f64 + 1.0) / (draws as f64 + 2.0), m1, draws - m1))
        .collect();
    McmcState::new(atoms, alpha, gamma)
}

/// Joint forward draw for the bare beta-Bernoulli model: `α` and `γ` from
/// their priors, a truncated beta process, then `M` Bernoulli rows. Rounds
/// are added until the expected number of ones beyond them is below
/// `tol`. The returned state holds only the observed atoms.
pub fn forward_simulate<R: Rng + ?Sized>(
    hyper: &Hyperparameters,
    draws: u64,
    tol: f64,
    rng: &mut R,
) -> Result<McmcState> {
    let alpha = gamma_draw(hyper.tau1, hyper.tau2, rng)?;
    let gamma = gamma_draw(hyper.kappa1, hyper.kappa2, rng)?;
    let ratio = (alpha / (1.0 + alpha)).ln();
    let mut rounds = 1u32;
    while gamma * draws as f64 * (rounds as f64 * ratio).exp() > tol {
        rounds += 1;
    }
    let mut atoms = Vec::new();
    for i in 1..=rounds {
        let count = poisson_count(gamma, rng)? as usize;
        let thetas: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        for theta in thetas {
            let v = beta1(alpha, rng);
            let (pi, w) = if i == 1 {
                (v, None)
            } else {
                let w = (-round_gamma(i, alpha, rng)).exp();
                (clamp_weight(v * w), Some(w))
            };
            let m1 = (0..draws).filter(|_| rng.random::<f64>() < pi).count() as u64;
            if m1 > 0 {
                atoms.push(McmcAtomState {
                    theta,
                    pi,
                    w,
                    d: RoundIndex::new(i)?,
                    m1,
                    m0: draws - m1,
                });
            }
        }
    }
    McmcState::new(atoms, alpha, gamma)
}

/// Statistics compared by the Geweke test: `T`, `α`, `γ`, and the sums of
/// `π` and `d` over observed atoms.
pub fn geweke_statistics(state: &McmcState) -> [f64; 5] {
    let observed = state.atoms.iter().filter(|a| a.is_observed());
    let (sum_pi, sum_d) = observed
        .clone()
        .fold((0.0, 0.0), |(p, d), a| (p + a.pi, d + a.d.get() as f64));
    [observed.count() as f64, state.alpha, state.gamma, sum_pi, sum_d]
}

pub const GEWEKE_STATISTICS: [&str; 5] = ["observed atoms", "alpha", "gamma", "sum pi", "sum d"];

/// Sizes of a Geweke joint-distribution test on the bare beta-Bernoulli
/// model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeSettings {
    pub draws: u64,
    pub forward_draws: usize,
    pub chain_iterations: usize,
    pub burn_in: usize,
    pub batches: usize,
    /// Expected ones beyond the last forward round.
    pub forward_tol: f64,
}

impl Default for GewekeSettings {
    fn default() -> Self {
        Self {
            draws: 3,
            forward_draws: 100_000,
            chain_iterations: 300_000,
            burn_in: 1_000,
            batches: 100,
            forward_tol: 1e-10,
        }
    }
}

/// Compares independent forward draws of `(α, γ, H, X)` with a
/// successive-conditional chain that alternates a full sweep with a fresh
/// draw of the Bernoulli rows given the weights. Returns one comparison per
/// entry of [`GEWEKE_STATISTICS`].
pub fn geweke_test<R: Rng + ?Sized>(
    cfg: &McmcConfig,
    settings: &GewekeSettings,
    rng: &mut R,
) -> Result<Vec<crate::diagnostics::GewekeComparison>> {
    cfg.validate()?;
    let mut forward: [Vec<f64>; 5] = Default::default();
    for _ in 0..settings.forward_draws {
        let state = forward_simulate(&cfg.hyper, settings.draws, settings.forward_tol, rng)?;
        for (k, v) in geweke_statistics(&state).into_iter().enumerate() {
            forward[k].push(v);
        }
    }
    let mut state = forward_simulate(&cfg.hyper, settings.draws, settings.forward_tol, rng)?;
    // the bare hook redraws the rows given π, which is the data step
    let mut hook = BernoulliOnly::new(settings.draws);
    let mut chain: [Vec<f64>; 5] = Default::default();
    for n in 0..settings.burn_in + settings.chain_iterations {
        sweep(&mut state, &mut hook, cfg, rng)?;
        if n >= settings.burn_in {
            for (k, v) in geweke_statistics(&state).into_iter().enumerate() {
                chain[k].push(v);
            }
        }
    }
    Ok((0..5)
        .map(|k| crate::diagnostics::geweke_compare(&forward[k], &chain[k], settings.batches))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn atom(pi: f64, w: Option<f64>, d: u32, m1: u64, m0: u64) -> McmcAtomState {
        McmcAtomState {
            theta: 0.5,
            pi,
            w,
            d: RoundIndex::new(d).unwrap(),
            m1,
            m0,
        }
    }

    #[test]
    fn pi_target_support() {
        let a = atom(0.3, Some(0.6), 2, 2, 3);
        assert_eq!(ln_pi_target(&a, 0.0, 2.0), f64::NEG_INFINITY);
        assert_eq!(ln_pi_target(&a, -0.1, 2.0), f64::NEG_INFINITY);
        assert_eq!(ln_pi_target(&a, 0.6, 2.0), f64::NEG_INFINITY);
        let b = atom(0.3, None, 1, 2, 3);
        assert_eq!(ln_pi_target(&b, 1.0, 2.0), f64::NEG_INFINITY);
        assert!(ln_pi_target(&b, 0.7, 2.0).is_finite());
        assert_eq!(
            ln_w_target(0.3, 1.0, RoundIndex::new(3).unwrap(), 2.0),
            f64::NEG_INFINITY
        );
        assert_eq!(
            ln_w_target(0.3, 0.3, RoundIndex::new(3).unwrap(), 2.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn w_update_is_noop_at_round_one() {
        let mut a = atom(0.3, None, 1, 2, 3);
        let before = a;
        assert_eq!(mh_update_w(&mut a, 1.0, 0.1, 100, &mut rng(1)), 0);
        assert_eq!(a, before);
    }

    #[test]
    fn conditional_parameters() {
        let atoms = [atom(0.3, None, 1, 1, 0), atom(0.2, Some(0.8), 2, 1, 0)];
        let (shape, rate) = alpha_conditional(&atoms, &Hyperparameters::default()).unwrap();
        assert_eq!(shape, 4.0);
        assert!((rate - (1.0 - 0.7f64.ln() - 0.6f64.ln())).abs() < 1e-12);
        assert!((rate - 1.8675).abs() < 1e-4);
        let (shape, rate) = alpha_conditional(&[], &Hyperparameters::default()).unwrap();
        assert_eq!((shape, rate), (1.0, 1.0));
        let (shape, rate) = gamma_conditional(5, 1.0, 4, &Hyperparameters::default());
        assert_eq!(shape, 6.0);
        assert!((rate - (1.0 + 1.0 + 0.5 + 1.0 / 3.0 + 0.25)).abs() < 1e-12);
        assert_eq!(gamma_conditional(0, 1.0, 0, &Hyperparameters::default()), (1.0, 1.0));
    }

    #[test]
    fn exact_d_update_keeps_invariants() {
        let mut g = rng(2);
        let mut a = atom(0.05, None, 1, 1, 4);
        let mut seen_later = false;
        for _ in 0..2000 {
            gibbs_update_d_exact(&mut a, 1.5, &mut g).unwrap();
            assert!(a.is_valid());
            seen_later |= a.d.get() > 1;
            mh_update_w(&mut a, 1.5, 0.05, 5, &mut g);
        }
        assert!(seen_later);
    }

    #[test]
    fn new_atoms_without_draws_follow_the_prior() {
        let cfg = McmcConfig {
            extra_rounds: 3,
            ..McmcConfig::default()
        };
        let mut g = rng(3);
        let reps = 4000;
        let mut first = Vec::new();
        for _ in 0..reps {
            let mut s = McmcState::new(Vec::new(), 1.0, 2.0).unwrap();
            let out = sample_new_atoms(&mut s, 0, &cfg, &mut g).unwrap();
            assert_eq!(out.rounds, 3);
            first.push(s.atoms.iter().filter(|a| a.d.get() == 1).count() as f64);
            assert!(s.atoms.iter().all(|a| a.is_valid() && !a.is_observed()));
        }
        let mean = first.iter().sum::<f64>() / reps as f64;
        assert!((mean - 2.0).abs() < 4.0 * (2.0f64 / reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn schedule_archives_exactly() {
        let cfg = McmcConfig::default();
        let schedule = Schedule::new(10, 0, 1).unwrap();
        let run = |seed| {
            let mut s = McmcState::new(Vec::new(), 1.0, 1.0).unwrap();
            let mut hook = BernoulliOnly::new(3);
            run_chain(&mut s, &mut hook, &cfg, &schedule, &mut rng(seed), |_, _| {}).unwrap()
        };
        let a = run(4);
        assert_eq!(a.records.len(), 10);
        assert_eq!(a, run(4));
        assert!(Schedule::new(10, 11, 1).is_err());
        assert!(Schedule::new(10, 0, 0).is_err());
    }

    struct Capped(Vec<f64>);

    impl RoundWeights for Capped {
        fn ln_weight(&mut self, i: u32) -> Result<f64> {
            Ok(self.0.get(i as usize - 1).map_or(f64::NEG_INFINITY, |w| w.ln()))
        }
        fn ln_tail_sup(&mut self, i: u32) -> Result<f64> {
            Ok(self
                .0
                .iter()
                .skip(i as usize - 1)
                .fold(f64::NEG_INFINITY, |m, w| m.max(w.ln())))
        }
        fn ln_tail_sum(&mut self, i: u32) -> Result<f64> {
            Ok(self.0.iter().skip(i as usize - 1).sum::<f64>().ln())
        }
    }

    #[test]
    fn two_round_enumeration() {
        let probs = round_probabilities(&mut Capped(vec![0.3, 0.9]), 1e-12).unwrap();
        assert_eq!(probs.len(), 2);
        assert!((probs[0] - 0.25).abs() < 1e-10 && (probs[1] - 0.75).abs() < 1e-10);
        let mut g = rng(5);
        let mut d = RoundIndex::FIRST;
        let mut second = 0;
        let n = 40_000;
        for _ in 0..n {
            d = slice_sample_round(&mut Capped(vec![0.3, 0.9]), d, &mut g).unwrap().0;
            second += (d.get() == 2) as usize;
        }
        let f = second as f64 / n as f64;
        assert!((f - 0.75).abs() < 0.02, "{f}");
    }

    #[test]
    fn poisson_term_sup() {
        // x = 2.5: terms n = 0.. are 1, 2.5, 3.125, 2.6, ...
        assert!((ln_poisson_term_sup(0, 2.5) - 3.125f64.ln()).abs() < 1e-12);
        assert!((ln_poisson_term_sup(3, 2.5) - (2.5f64.powi(3) / 6.0).ln()).abs() < 1e-12);
        assert_eq!(ln_poisson_term_sup(0, 0.0), 0.0);
    }
}
