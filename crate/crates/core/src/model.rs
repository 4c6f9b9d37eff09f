//! Linear-Gaussian factor model with a beta-Bernoulli prior on which factors
//! each observation uses:
//! `Y = Θ (W ∘ Z) + ε`, with `W_kn ~ N(0, 1)`, `Z_kn ~ Bernoulli(π_k)`,
//! `Θ_dk ~ N(0, 1)` and `ε ~ N(0, σ²)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::construct::poisson_count;
use crate::error::{Error, Result};
use crate::mcmc::{LikelihoodHook, McmcAtomState};
use crate::measure::{expected_round_weight, RoundIndex};

/// Observations in columns: `D × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("Y", *v, "finite entries"));
        }
        Ok(Self { y })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }
}

/// Loadings `Θ` (`D × K`), weights `W` and indicators `Z` (`K × N`), and the
/// noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub theta: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub z: DMatrix<bool>,
    pub noise_var: f64,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill, matching nalgebra's storage order
    DMatrix::from_fn(rows, cols, |_, _| 0.0).map(|_: f64| normal(rng))
}

impl FactorState {
    pub fn num_factors(&self) -> usize {
        self.theta.ncols()
    }

    /// `W ∘ Z`.
    pub fn masked_weights(&self) -> DMatrix<f64> {
        self.w.zip_map(&self.z, |w, z| if z { w } else { 0.0 })
    }

    /// `Y - Θ (W ∘ Z)`.
    pub fn residual(&self, data: &Dataset) -> DMatrix<f64> {
        data.y() - &self.theta * self.masked_weights()
    }

    /// Number of observations using each factor.
    pub fn usage(&self) -> Vec<u64> {
        (0..self.z.nrows())
            .map(|k| self.z.row(k).iter().filter(|&&z| z).count() as u64)
            .collect()
    }

    /// Random starting point with `k` factors: `Θ` and `W` from their priors
    /// and each indicator on with probability `p_on`.
    pub fn initialize<R: Rng + ?Sized>(
        data: &Dataset,
        k: usize,
        p_on: f64,
        noise_var: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::domain("noise_var", noise_var, "finite and > 0"));
        }
        let theta = normal_matrix(data.dim(), k, rng);
        let w = normal_matrix(k, data.len(), rng);
        let z = DMatrix::from_fn(k, data.len(), |_, _| false).map(|_: bool| rng.random::<f64>() < p_on);
        Ok(Self { theta, w, z, noise_var })
    }

    fn keep_factors(&mut self, kept: &[bool]) {
        let drop: Vec<usize> = kept.iter().enumerate().filter(|(_, &k)| !k).map(|(i, _)| i).collect();
        if drop.is_empty() {
            return;
        }
        self.theta = self.theta.clone().remove_columns_at(&drop);
        self.w = self.w.clone().remove_rows_at(&drop);
        self.z = self.z.clone().remove_rows_at(&drop);
    }

    fn push_factors<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) {
        if n == 0 {
            return;
        }
        let (d, k, cols) = (self.theta.nrows(), self.theta.ncols(), self.w.ncols());
        let theta_new = normal_matrix(d, n, rng);
        let w_new = normal_matrix(n, cols, rng);
        self.theta = self.theta.clone().insert_columns(k, n, 0.0);
        self.theta.columns_mut(k, n).copy_from(&theta_new);
        self.w = self.w.clone().insert_rows(k, n, 0.0);
        self.w.rows_mut(k, n).copy_from(&w_new);
        self.z = self.z.clone().insert_rows(k, n, false);
    }
}

/// Gaussian log density of the data given the factors.
pub fn log_likelihood(state: &FactorState, data: &Dataset) -> f64 {
    let r = state.residual(data);
    let n = (data.dim() * data.len()) as f64;
    -0.5 * n * (core::f64::consts::TAU * state.noise_var).ln() - 0.5 * r.norm_squared() / state.noise_var
}

/// Block update of each `(Z_kn, W_kn)` pair with `W_kn` integrated out of
/// the indicator's conditional, sweeping observations then factors. Returns
/// the number of observations using each factor.
///
/// With `r` the residual excluding factor `k`, `a = |θ_k|²/σ² + 1` and
/// `b = θ_kᵀ r / σ²`, the log odds of `Z_kn = 1` are
/// `ln(π_k/(1-π_k)) - ln(a)/2 + b²/(2a)`; then `W_kn ~ N(b/a, 1/a)` if on
/// and `N(0, 1)` if off.
///
/// When no other observation uses factor `k`, the pair `(Z_kn, θ_k)` is
/// first redrawn with `θ_k` integrated out of the indicator's conditional
/// given `W_kn`. This lets an unused factor take the direction of an
/// observation's residual in one step.
pub fn gibbs_update_z<R: Rng + ?Sized>(
    state: &mut FactorState,
    pis: &[f64],
    data: &Dataset,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let k_count = state.num_factors();
    if pis.len() != k_count {
        return Err(Error::numerical(
            "gibbs_update_z",
            alloc::format!("{} weights for {k_count} factors", pis.len()),
        ));
    }
    let inv_var = 1.0 / state.noise_var;
    let dim = data.dim() as f64;
    let mut a: Vec<f64> = (0..k_count)
        .map(|k| state.theta.column(k).norm_squared() * inv_var + 1.0)
        .collect();
    let prior_logit: Vec<f64> = pis.iter().map(|&p| p.ln() - (-p).ln_1p()).collect();
    let mut usage = state.usage();
    let mut residual = state.residual(data);
    for n in 0..data.len() {
        let mut r = residual.column(n).into_owned();
        for k in 0..k_count {
            if state.z[(k, n)] {
                r.axpy(state.w[(k, n)], &state.theta.column(k), 1.0);
                usage[k] -= 1;
            }
            if usage[k] == 0 {
                // no other observation informs θ_k: integrate it out of the
                // indicator's conditional given W_kn, then redraw it
                let w = state.w[(k, n)];
                let ratio = w * w * inv_var;
                let rr = r.norm_squared();
                let logit = prior_logit[k] - 0.5 * dim * ratio.ln_1p() + 0.5 * rr * inv_var * ratio / (1.0 + ratio);
                let on = bernoulli_logit(logit, rng);
                let prec = ratio + 1.0;
                let scale = if on { w * inv_var / prec } else { 0.0 };
                let sd = if on { prec.sqrt().recip() } else { 1.0 };
                for d in 0..data.dim() {
                    state.theta[(d, k)] = scale * r[d] + sd * normal(rng);
                }
                a[k] = state.theta.column(k).norm_squared() * inv_var + 1.0;
            }
            let theta_k = state.theta.column(k);
            let b = theta_k.dot(&r) * inv_var;
            let logit = prior_logit[k] - 0.5 * a[k].ln() + 0.5 * b * b / a[k];
            let on = bernoulli_logit(logit, rng);
            state.z[(k, n)] = on;
            if on {
                let w = b / a[k] + normal(rng) / a[k].sqrt();
                state.w[(k, n)] = w;
                r.axpy(-w, &theta_k, 1.0);
                usage[k] += 1;
            } else {
                state.w[(k, n)] = normal(rng);
            }
        }
        residual.set_column(n, &r);
    }
    Ok(state.usage())
}

fn bernoulli_logit<R: Rng + ?Sized>(logit: f64, rng: &mut R) -> bool {
    match logit {
        l if l == f64::INFINITY => true,
        l if l == f64::NEG_INFINITY => false,
        l => rng.random::<f64>() < 1.0 / (1.0 + (-l).exp()),
    }
}

fn gaussian_draw<R: Rng + ?Sized>(precision: DMatrix<f64>, linear: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::numerical("gaussian_draw", "precision matrix is not positive definite"))?;
    let mean = chol.solve(linear);
    let eps = DVector::from_fn(linear.len(), |_, _| 0.0).map(|_: f64| normal(rng));
    // L Lᵀ = P, so Lᵀ x = ε gives x ~ N(0, P⁻¹)
    let offset = chol
        .l()
        .transpose()
        .solve_upper_triangular(&eps)
        .ok_or_else(|| Error::numerical("gaussian_draw", "singular Cholesky factor"))?;
    Ok(mean + offset)
}

/// A Gaussian in canonical form: density `∝ exp(-xᵀPx/2 + bᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCanonical {
    pub precision: DMatrix<f64>,
    pub linear: DVector<f64>,
}

impl GaussianCanonical {
    pub fn mean(&self) -> Option<DVector<f64>> {
        self.precision.clone().cholesky().map(|c| c.solve(&self.linear))
    }

    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        self.precision.clone().cholesky().map(|c| c.inverse())
    }
}

/// Conditional of `W_{A,n}` for the factors `active` (those with
/// `Z_kn = 1`) given `Θ`, `σ²` and the data.
pub fn weight_conditional(state: &FactorState, data: &Dataset, n: usize, active: &[usize]) -> GaussianCanonical {
    let inv_var = 1.0 / state.noise_var;
    let theta_a = state.theta.select_columns(active);
    GaussianCanonical {
        precision: theta_a.transpose() * &theta_a * inv_var + DMatrix::identity(active.len(), active.len()),
        linear: theta_a.transpose() * data.y().column(n) * inv_var,
    }
}

fn loading_precision(state: &FactorState) -> DMatrix<f64> {
    let k = state.num_factors();
    let x = state.masked_weights();
    &x * x.transpose() / state.noise_var + DMatrix::identity(k, k)
}

/// Conditional of row `d` of `Θ` given `W ∘ Z`, `σ²` and the data. Rows are
/// conditionally independent and share the precision.
pub fn loading_conditional(state: &FactorState, data: &Dataset, d: usize) -> GaussianCanonical {
    GaussianCanonical {
        precision: loading_precision(state),
        linear: state.masked_weights() * data.y().row(d).transpose() / state.noise_var,
    }
}

/// Conjugate updates of `W`, `Θ` and `σ²` given `Z`: each column of `W`
/// jointly over its active factors, each row of `Θ` jointly over factors,
/// then `σ² ~ InvGamma(1 + DN/2, 1 + RSS/2)`.
pub fn gibbs_update_linear_gaussian<R: Rng + ?Sized>(
    state: &mut FactorState,
    data: &Dataset,
    rng: &mut R,
) -> Result<()> {
    let k_count = state.num_factors();
    let inv_var = 1.0 / state.noise_var;
    for n in 0..data.len() {
        let active: Vec<usize> = (0..k_count).filter(|&k| state.z[(k, n)]).collect();
        for k in (0..k_count).filter(|&k| !state.z[(k, n)]) {
            state.w[(k, n)] = normal(rng);
        }
        if active.is_empty() {
            continue;
        }
        let cond = weight_conditional(state, data, n, &active);
        let w = gaussian_draw(cond.precision, &cond.linear, rng)?;
        for (i, &k) in active.iter().enumerate() {
            state.w[(k, n)] = w[i];
        }
    }

    let x = state.masked_weights();
    let precision = loading_precision(state);
    let chol = precision.cholesky().ok_or_else(|| {
        Error::numerical(
            "gibbs_update_linear_gaussian",
            "loading precision is not positive definite",
        )
    })?;
    let upper = chol.l().transpose();
    for d in 0..data.dim() {
        let linear = &x * data.y().row(d).transpose() * inv_var;
        let mean = chol.solve(&linear);
        let eps = DVector::from_fn(k_count, |_, _| 0.0).map(|_: f64| normal(rng));
        let offset = upper
            .solve_upper_triangular(&eps)
            .ok_or_else(|| Error::numerical("gibbs_update_linear_gaussian", "singular Cholesky factor"))?;
        state.theta.set_row(d, &(mean + offset).transpose());
    }

    let rss = state.residual(data).norm_squared();
    let shape = 1.0 + 0.5 * (data.dim() * data.len()) as f64;
    let rate = 1.0 + 0.5 * rss;
    let precision = Gamma::new(shape, 1.0 / rate)
        .map_err(|_| Error::numerical("noise update", alloc::format!("invalid InvGamma({shape}, {rate})")))?
        .sample(rng);
    state.noise_var = 1.0 / precision;
    Ok(())
}

/// The twenty 4×4 binary patterns used as ground-truth loadings, each
/// vectorised row by row: four rows, four columns, the four corner 2×2
/// blocks, the four 2×2 blocks at the edge midpoints, both diagonals, the
/// full square and the central 2×2 block.
pub fn canonical_patterns() -> DMatrix<f64> {
    let mut cells: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..4 {
        cells.push((0..4).map(|c| (r, c)).collect());
    }
    for c in 0..4 {
        cells.push((0..4).map(|r| (r, c)).collect());
    }
    let block = |r0: usize, c0: usize| -> Vec<(usize, usize)> {
        alloc::vec![(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)]
    };
    for (r0, c0) in [(0, 0), (0, 2), (2, 0), (2, 2), (0, 1), (2, 1), (1, 0), (1, 2)] {
        cells.push(block(r0, c0));
    }
    cells.push((0..4).map(|i| (i, i)).collect());
    cells.push((0..4).map(|i| (i, 3 - i)).collect());
    cells.push((0..16).map(|i| (i / 4, i % 4)).collect());
    cells.push(block(1, 1));
    let mut theta = DMatrix::zeros(16, cells.len());
    for (k, pattern) in cells.iter().enumerate() {
        for &(r, c) in pattern {
            theta[(r * 4 + c, k)] = 1.0;
        }
    }
    theta
}

/// Settings for the synthetic factor-model data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Observations `N`.
    pub n: usize,
    /// Ground-truth factors; at most twenty.
    pub k_true: usize,
    /// Concentration used for the factor weights.
    pub alpha: f64,
    pub noise_var: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 500,
            k_true: 20,
            alpha: 1.0,
            noise_var: 0.01,
        }
    }
}

/// A synthetic data set with the state that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub data: Dataset,
    pub truth: FactorState,
    pub pis: Vec<f64>,
}

/// Draws `Y = Θ (W ∘ Z) + ε` with the canonical patterns as `Θ`.
///
/// Factor `k` (from zero) has weight `E[π]` of a round-`⌊k/2⌋ + 1` atom,
/// that is two atoms per round. Each factor's row of `Z` is redrawn until
/// it is used at least once, so every pattern appears in the data.
pub fn generate_synthetic<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<Synthetic> {
    let patterns = canonical_patterns();
    if cfg.k_true == 0 || cfg.k_true > patterns.ncols() {
        return Err(Error::Config(alloc::format!(
            "k_true must be between 1 and {}, got {}",
            patterns.ncols(),
            cfg.k_true
        )));
    }
    if cfg.n == 0 {
        return Err(Error::Config("n must be >= 1".into()));
    }
    if !(cfg.noise_var > 0.0 && cfg.noise_var.is_finite()) {
        return Err(Error::domain("noise_var", cfg.noise_var, "finite and > 0"));
    }
    let k = cfg.k_true;
    let pis = (0..k)
        .map(|i| expected_round_weight(RoundIndex::new(i as u32 / 2 + 1)?, cfg.alpha))
        .collect::<Result<Vec<f64>>>()?;
    let theta = patterns.columns(0, k).into_owned();
    let mut z = DMatrix::from_element(k, cfg.n, false);
    for (i, &p) in pis.iter().enumerate() {
        loop {
            for n in 0..cfg.n {
                z[(i, n)] = rng.random::<f64>() < p;
            }
            if z.row(i).iter().any(|&on| on) {
                break;
            }
        }
    }
    let w = normal_matrix(k, cfg.n, rng);
    let truth = FactorState {
        theta,
        w,
        z,
        noise_var: cfg.noise_var,
    };
    let sd = cfg.noise_var.sqrt();
    let noise = normal_matrix(16, cfg.n, rng) * sd;
    let y = &truth.theta * truth.masked_weights() + noise;
    Ok(Synthetic {
        data: Dataset::new(y)?,
        truth,
        pis,
    })
}

/// What the factor-model hook archives per retained state.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSnapshot {
    /// Loadings of the observed factors, `D × T`.
    pub loadings: DMatrix<f64>,
    pub noise_var: f64,
    pub log_likelihood: f64,
}

/// Plugs the factor model into the sampler: resamples `Z` and `W` jointly,
/// then `W`, `Θ` and `σ²` from their conditionals.
#[derive(Debug, Clone)]
pub struct FactorHook {
    pub data: Dataset,
    pub state: FactorState,
}

impl FactorHook {
    pub fn new(data: Dataset, state: FactorState) -> Result<Self> {
        if state.theta.nrows() != data.dim() || state.w.ncols() != data.len() {
            return Err(Error::Config("factor state does not match the data dimensions".into()));
        }
        Ok(Self { data, state })
    }
}

impl LikelihoodHook for FactorHook {
    type Snapshot = FactorSnapshot;

    fn num_rows(&self) -> u64 {
        self.data.len() as u64
    }

    fn retain_atoms(&mut self, kept: &[bool]) {
        self.state.keep_factors(kept);
    }

    fn push_atoms<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Result<()> {
        self.state.push_factors(n, rng);
        Ok(())
    }

    fn update<R: Rng + ?Sized>(&mut self, atoms: &[McmcAtomState], rng: &mut R) -> Result<Vec<u64>> {
        let pis: Vec<f64> = atoms.iter().map(|a| a.pi).collect();
        gibbs_update_z(&mut self.state, &pis, &self.data, rng)?;
        gibbs_update_linear_gaussian(&mut self.state, &self.data, rng)?;
        Ok(self.state.usage())
    }

    fn snapshot(&self, atoms: &[McmcAtomState]) -> Option<FactorSnapshot> {
        let observed: Vec<usize> = atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_observed())
            .map(|(k, _)| k)
            .collect();
        Some(FactorSnapshot {
            loadings: self.state.theta.select_columns(&observed),
            noise_var: self.state.noise_var,
            log_likelihood: log_likelihood(&self.state, &self.data),
        })
    }
}

/// `|cos|` between two vectors; zero if either is zero.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).abs()
    }
}

/// A ground-truth loading paired with an estimated one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingMatch {
    pub truth: usize,
    pub estimate: usize,
    pub similarity: f64,
}

/// Greedy one-to-one matching of true to estimated loadings by `|cos|`,
/// best pair first; returns the pairs above `threshold`. Invariant to sign
/// and permutation of the estimates.
pub fn match_loadings(truth: &DMatrix<f64>, estimate: &DMatrix<f64>, threshold: f64) -> Vec<LoadingMatch> {
    let mut pairs = Vec::with_capacity(truth.ncols() * estimate.ncols());
    for t in 0..truth.ncols() {
        for e in 0..estimate.ncols() {
            let s = abs_cosine(truth.column(t).as_slice(), estimate.column(e).as_slice());
            pairs.push(LoadingMatch {
                truth: t,
                estimate: e,
                similarity: s,
            });
        }
    }
    pairs.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
    let mut used_t = alloc::vec![false; truth.ncols()];
    let mut used_e = alloc::vec![false; estimate.ncols()];
    let mut out = Vec::new();
    for p in pairs {
        if p.similarity <= threshold {
            break;
        }
        if !used_t[p.truth] && !used_e[p.estimate] {
            used_t[p.truth] = true;
            used_e[p.estimate] = true;
            out.push(p);
        }
    }
    out
}

/// Draws a random number of fresh factors; used to seed chains with a
/// Poisson-sized starting set.
pub fn poisson_factor_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    Ok(poisson_count(mean, rng)? as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn patterns_are_distinct_binary() {
        let p = canonical_patterns();
        assert_eq!(p.shape(), (16, 20));
        for a in 0..20 {
            assert!(p.column(a).iter().all(|&v| v == 0.0 || v == 1.0));
            for b in 0..a {
                assert_ne!(p.column(a), p.column(b));
            }
        }
        assert_eq!(p.column(18).sum(), 16.0);
        assert_eq!(p.column(0).sum(), 4.0);
    }

    #[test]
    fn synthetic_shapes_and_determinism() {
        let cfg = SynthConfig::default();
        let a = generate_synthetic(&cfg, &mut rng(1)).unwrap();
        assert_eq!(a.data.y().shape(), (16, 500));
        assert_eq!(a.truth.z.shape(), (20, 500));
        assert!(a.truth.usage().iter().all(|&u| u > 0));
        assert_eq!(a, generate_synthetic(&cfg, &mut rng(1)).unwrap());
        assert!((a.pis[0] - 0.5).abs() < 1e-15 && (a.pis[19] - 0.5f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_examples() {
        let data = Dataset::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let zero = FactorState {
            theta: DMatrix::zeros(2, 0),
            w: DMatrix::zeros(0, 2),
            z: DMatrix::from_element(0, 2, false),
            noise_var: 0.5,
        };
        let direct: f64 = data
            .y()
            .iter()
            .map(|y| -0.5 * (core::f64::consts::TAU * 0.5).ln() - 0.5 * y * y / 0.5)
            .sum();
        assert!((log_likelihood(&zero, &data) - direct).abs() < 1e-9);
        let exact = FactorState {
            theta: DMatrix::from_row_slice(2, 1, &[1.0, 3.0]),
            w: DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            z: DMatrix::from_element(1, 2, true),
            noise_var: 0.5,
        };
        let data = Dataset::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 6.0])).unwrap();
        let expect = -2.0 * (core::f64::consts::TAU * 0.5).ln();
        assert!((log_likelihood(&exact, &data) - expect).abs() < 1e-12);
    }

    #[test]
    fn degenerate_prior_odds() {
        let s = generate_synthetic(
            &SynthConfig {
                n: 30,
                ..SynthConfig::default()
            },
            &mut rng(2),
        )
        .unwrap();
        let mut state = s.truth.clone();
        let mut pis = alloc::vec![0.0; 20];
        pis[3] = 1.0;
        let counts = gibbs_update_z(&mut state, &pis, &s.data, &mut rng(3)).unwrap();
        assert_eq!(counts[3], 30);
        assert!(counts.iter().enumerate().all(|(k, &c)| k == 3 || c == 0));
    }

    #[test]
    fn matching_is_sign_and_permutation_invariant() {
        let truth = canonical_patterns();
        let mut est = truth.clone();
        est.swap_columns(0, 5);
        est.column_mut(2).neg_mut();
        let m = match_loadings(&truth, &est, 0.9);
        assert_eq!(m.len(), 20);
        assert!(m.iter().any(|p| p.truth == 0 && p.estimate == 5));
    }

    #[test]
    fn push_and_retain_keep_alignment() {
        let s = generate_synthetic(
            &SynthConfig {
                n: 10,
                ..SynthConfig::default()
            },
            &mut rng(4),
        )
        .unwrap();
        let mut state = s.truth.clone();
        state.push_factors(3, &mut rng(5));
        assert_eq!(state.num_factors(), 23);
        assert_eq!(state.w.nrows(), 23);
        assert!(state.z.rows(20, 3).iter().all(|&z| !z));
        let mut kept = alloc::vec![true; 23];
        kept[1] = false;
        kept[21] = false;
        state.keep_factors(&kept);
        assert_eq!(state.num_factors(), 21);
        assert_eq!(state.theta.column(1), s.truth.theta.column(2));
    }
}
