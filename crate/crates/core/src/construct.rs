//! Forward sampling: the round-by-round stick-breaking construction, its
//! extension to non-constant concentration over a partitioned base, the
//! Bernoulli process, and the marginal Indian buffet process.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;
use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore};
use rand_distr::{Gamma, Poisson};

use crate::error::{Error, Result};
use crate::measure::{check_alpha, ProcessParams, RoundIndex};

/// One atom of a beta process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    /// Location in `[0, 1)`.
    pub theta: f64,
    pub pi: f64,
    pub round: RoundIndex,
}

/// A draw `H^(R)` truncated after `rounds_kept` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaProcessDraw {
    /// `None` when drawn from a partitioned base with varying concentration.
    pub params: Option<ProcessParams>,
    pub total_base_mass: f64,
    pub rounds_kept: u32,
    pub atoms: Vec<Atom>,
}

impl BetaProcessDraw {
    /// `H(Ω)`, the sum of all atom weights.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.pi).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Binary matrix of observations × atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureAllocation {
    atom_ids: Vec<usize>,
    rows: usize,
    // row-major, rows × atom_ids.len()
    bits: Vec<bool>,
}

impl FeatureAllocation {
    pub fn new(atom_ids: Vec<usize>, rows: usize) -> Self {
        let bits = vec![false; rows * atom_ids.len()];
        Self { atom_ids, rows, bits }
    }

    /// Builds an allocation from rows of possibly different length; missing
    /// trailing entries are zero.
    pub fn from_ragged_rows(rows: &[Vec<bool>]) -> Self {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = Self::new((0..width).collect(), rows.len());
        for (r, row) in rows.iter().enumerate() {
            for (k, &z) in row.iter().enumerate() {
                out.set(r, k, z);
            }
        }
        out
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_atoms(&self) -> usize {
        self.atom_ids.len()
    }

    pub fn atom_ids(&self) -> &[usize] {
        &self.atom_ids
    }

    pub fn get(&self, row: usize, atom: usize) -> bool {
        self.bits[row * self.atom_ids.len() + atom]
    }

    pub fn set(&mut self, row: usize, atom: usize, value: bool) {
        let width = self.atom_ids.len();
        self.bits[row * width + atom] = value;
    }

    pub fn row(&self, row: usize) -> &[bool] {
        let width = self.atom_ids.len();
        &self.bits[row * width..(row + 1) * width]
    }

    /// Number of features held by one observation, `X_m(Ω)`.
    pub fn row_sum(&self, row: usize) -> usize {
        self.row(row).iter().filter(|&&z| z).count()
    }

    pub fn column_sum(&self, atom: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, atom)).count()
    }

    /// Atoms used by at least one observation.
    pub fn num_active(&self) -> usize {
        (0..self.num_atoms()).filter(|&k| self.column_sum(k) > 0).count()
    }
}

/// A cell `E_k` of a partition of the base space.
pub trait BaseCell {
    /// `μ(E_k)`; finite and nonnegative.
    fn mass(&self) -> f64;
    /// Concentration `α(θ)` at a location in the cell.
    fn alpha_at(&self, theta: f64) -> f64;
    /// Draws from the normalised base measure restricted to the cell.
    fn sample_location(&self, rng: &mut dyn RngCore) -> f64;
}

/// A cell with constant concentration and uniform locations on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformCell {
    pub mass: f64,
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
}

impl BaseCell for UniformCell {
    fn mass(&self) -> f64 {
        self.mass
    }

    fn alpha_at(&self, _theta: f64) -> f64 {
        self.alpha
    }

    fn sample_location(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }
}

/// A finite list of cells; the base measure is their sum.
#[derive(Default)]
pub struct PartitionedBase {
    cells: Vec<Box<dyn BaseCell>>,
}

impl PartitionedBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cell: impl BaseCell + 'static) -> Result<()> {
        let mass = cell.mass();
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::domain("cell mass", mass, "finite and >= 0"));
        }
        self.cells.push(Box::new(cell));
        Ok(())
    }

    pub fn cells(&self) -> &[Box<dyn BaseCell>] {
        &self.cells
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass()).sum()
    }
}

// 1 - U^{1/α} by inversion, never exactly 0 or 1.
pub(crate) fn beta1<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    clamp_weight(-(u.ln() / alpha).exp_m1())
}

pub(crate) fn clamp_weight(pi: f64) -> f64 {
    pi.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| Error::domain("poisson mean", mean, "finite and >= 0"))?;
    Ok(dist.sample(rng) as u64)
}

/// `T ~ Gamma(i-1, rate α)` for a round-`i` atom, `i >= 2`.
pub(crate) fn round_gamma<R: Rng + ?Sized>(round: u32, alpha: f64, rng: &mut R) -> f64 {
    let dist = Gamma::new((round - 1) as f64, 1.0 / alpha).expect("validated shape and rate");
    dist.sample(rng)
}

/// Weight of a single round-`i` atom: `V` for round one, `V e^{-T}` after.
pub fn draw_round_weight<R: Rng + ?Sized>(round: RoundIndex, alpha: f64, rng: &mut R) -> f64 {
    let v = beta1(alpha, rng);
    if round.get() == 1 {
        v
    } else {
        clamp_weight(v * (-round_gamma(round.get(), alpha, rng)).exp())
    }
}

/// Atoms of one round: a `Poisson(γ)` count, then all locations, then the
/// weights (`V` before `T` for each atom).
pub fn draw_round<R: Rng + ?Sized>(round: RoundIndex, params: &ProcessParams, rng: &mut R) -> Result<Vec<Atom>> {
    let count = poisson_count(params.gamma(), rng)? as usize;
    let thetas: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
    Ok(thetas
        .into_iter()
        .map(|theta| Atom {
            theta,
            pi: draw_round_weight(round, params.alpha(), rng),
            round,
        })
        .collect())
}

/// `H^(R)`: rounds `1..=R` concatenated.
pub fn draw_beta_process<R: Rng + ?Sized>(params: &ProcessParams, rounds: u32, rng: &mut R) -> Result<BetaProcessDraw> {
    if rounds == 0 {
        return Err(Error::domain("rounds", 0.0, ">= 1"));
    }
    let mut atoms = Vec::new();
    for i in 1..=rounds {
        atoms.extend(draw_round(RoundIndex::new(i)?, params, rng)?);
    }
    Ok(BetaProcessDraw {
        params: Some(*params),
        total_base_mass: params.gamma(),
        rounds_kept: rounds,
        atoms,
    })
}

/// Superposition of independent constructions on each cell, with every
/// atom breaking its stick under its own `α(θ)`. Cells are visited in order,
/// each running all `R` rounds.
pub fn draw_beta_process_general<R: Rng>(base: &PartitionedBase, rounds: u32, rng: &mut R) -> Result<BetaProcessDraw> {
    if rounds == 0 {
        return Err(Error::domain("rounds", 0.0, ">= 1"));
    }
    let mut atoms = Vec::new();
    for cell in base.cells() {
        let mass = cell.mass();
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::domain("cell mass", mass, "finite and >= 0"));
        }
        for i in 1..=rounds {
            let round = RoundIndex::new(i)?;
            let count = poisson_count(mass, rng)? as usize;
            let thetas: Vec<f64> = (0..count).map(|_| cell.sample_location(rng)).collect();
            for theta in thetas {
                let alpha = cell.alpha_at(theta);
                check_alpha(alpha)?;
                atoms.push(Atom {
                    theta,
                    pi: draw_round_weight(round, alpha, rng),
                    round,
                });
            }
        }
    }
    Ok(BetaProcessDraw {
        params: None,
        total_base_mass: base.total_mass(),
        rounds_kept: rounds,
        atoms,
    })
}

/// `n` independent rows with `z_mk ~ Bernoulli(π_k)`, filled row by row.
pub fn draw_bernoulli_process<R: Rng + ?Sized>(
    h: &BetaProcessDraw,
    n: usize,
    rng: &mut R,
) -> Result<FeatureAllocation> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, ">= 1"));
    }
    let mut out = FeatureAllocation::new((0..h.atoms.len()).collect(), n);
    for r in 0..n {
        for (k, atom) in h.atoms.iter().enumerate() {
            let u: f64 = rng.random();
            out.set(r, k, u < atom.pi);
        }
    }
    Ok(out)
}

/// Sequential marginal sampler: after `m` rows, the next row takes feature
/// `k` with probability `m_k / (α + m)` and adds `Poisson(αγ / (α + m))` new
/// features.
pub fn draw_ibp<R: Rng + ?Sized>(n: usize, params: &ProcessParams, rng: &mut R) -> Result<FeatureAllocation> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, ">= 1"));
    }
    let (alpha, gamma) = (params.alpha(), params.gamma());
    let mut counts: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<bool>> = Vec::with_capacity(n);
    for m in 0..n {
        let denom = alpha + m as f64;
        let mut row: Vec<bool> = counts.iter().map(|&c| rng.random::<f64>() < c as f64 / denom).collect();
        let fresh = poisson_count(alpha * gamma / denom, rng)? as usize;
        row.resize(row.len() + fresh, true);
        counts.resize(row.len(), 0);
        for (c, &z) in counts.iter_mut().zip(&row) {
            *c += z as usize;
        }
        rows.push(row);
    }
    Ok(FeatureAllocation::from_ragged_rows(&rows))
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
    fn round_one_counts_and_weights() {
        let params = ProcessParams::new(1.0, 2.0).unwrap();
        let mut g = rng(1);
        let reps = 10_000;
        let (mut count, mut weight, mut atoms) = (0usize, 0.0, 0usize);
        for _ in 0..reps {
            let round = draw_round(RoundIndex::FIRST, &params, &mut g).unwrap();
            count += round.len();
            for a in &round {
                weight += a.pi;
                atoms += 1;
                assert!(a.pi > 0.0 && a.pi < 1.0 && (0.0..1.0).contains(&a.theta));
            }
        }
        let mean = count as f64 / reps as f64;
        assert!((mean - 2.0).abs() < 3.0 * (2.0f64 / reps as f64).sqrt(), "{mean}");
        let wmean = weight / atoms as f64;
        assert!((wmean - 0.5).abs() < 4.0 * (1.0 / 12.0 / atoms as f64).sqrt());
    }

    #[test]
    fn round_four_weight_mean() {
        let mut g = rng(2);
        let r4 = RoundIndex::new(4).unwrap();
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| draw_round_weight(r4, 2.0, &mut g)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expect = 0.5 * (2.0f64 / 3.0).powi(4);
        assert!(
            (mean - expect).abs() < 4.0 * (var / n as f64).sqrt(),
            "{mean} vs {expect}"
        );
    }

    #[test]
    fn beta_process_structure_and_determinism() {
        let params = ProcessParams::new(1.5, 3.0).unwrap();
        let h = draw_beta_process(&params, 1, &mut rng(3)).unwrap();
        assert!(h.atoms.iter().all(|a| a.round == RoundIndex::FIRST));
        let a = draw_beta_process(&params, 30, &mut rng(4)).unwrap();
        let b = draw_beta_process(&params, 30, &mut rng(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.atoms.iter().all(|x| x.round.get() <= 30));
        assert!(draw_beta_process(&params, 0, &mut rng(4)).is_err());
    }

    #[test]
    fn single_cell_matches_constant_construction() {
        let params = ProcessParams::new(0.8, 2.5).unwrap();
        let mut base = PartitionedBase::new();
        base.push(UniformCell {
            mass: 2.5,
            alpha: 0.8,
            lo: 0.0,
            hi: 1.0,
        })
        .unwrap();
        let a = draw_beta_process(&params, 12, &mut rng(5)).unwrap();
        let b = draw_beta_process_general(&base, 12, &mut rng(5)).unwrap();
        assert_eq!(a.atoms, b.atoms);
    }

    #[test]
    fn empty_and_invalid_cells() {
        let mut base = PartitionedBase::new();
        base.push(UniformCell {
            mass: 0.0,
            alpha: 1.0,
            lo: 0.0,
            hi: 1.0,
        })
        .unwrap();
        let h = draw_beta_process_general(&base, 5, &mut rng(6)).unwrap();
        assert!(h.is_empty());
        assert!(base
            .push(UniformCell {
                mass: f64::INFINITY,
                alpha: 1.0,
                lo: 0.0,
                hi: 1.0
            })
            .is_err());
    }

    #[test]
    fn bernoulli_process_shapes() {
        let h = BetaProcessDraw {
            params: None,
            total_base_mass: 1.0,
            rounds_kept: 1,
            atoms: vec![Atom {
                theta: 0.5,
                pi: 1.0 - 1e-12,
                round: RoundIndex::FIRST,
            }],
        };
        let z = draw_bernoulli_process(&h, 200, &mut rng(7)).unwrap();
        assert_eq!(z.column_sum(0), 200);
        assert!(draw_bernoulli_process(&h, 0, &mut rng(7)).is_err());
    }

    #[test]
    fn ibp_first_row_and_unique_counts() {
        let params = ProcessParams::new(1.0, 1.0).unwrap();
        let mut g = rng(8);
        let reps = 20_000;
        let mut uniques = 0usize;
        let mut first = 0usize;
        for _ in 0..reps {
            let z = draw_ibp(3, &params, &mut g).unwrap();
            uniques += z.num_atoms();
            first += z.row_sum(0);
            assert_eq!(z.num_atoms(), z.num_active());
        }
        let mean = uniques as f64 / reps as f64;
        let expect = 1.0 + 0.5 + 1.0 / 3.0;
        assert!((mean - expect).abs() < 4.0 * (expect / reps as f64).sqrt(), "{mean}");
        let mean_first = first as f64 / reps as f64;
        assert!((mean_first - 1.0).abs() < 4.0 * (1.0 / reps as f64).sqrt());
    }
}
