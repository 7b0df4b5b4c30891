//! Synthetic ground-truth noise: local decoherence per qubit, static ZZ
//! crosstalk per coupling edge, and seeded full-weight residual correlations.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`; uniforms are
//! built from the top 53 bits of `next_u64` and bounded indices use the
//! 128-bit multiply-shift reduction, so outputs do not depend on the
//! sampling helpers of any particular `rand` release.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mask::{materialize, MaskSet, MaskSpec};
use crate::ptm::{compose_global, effective_ptm, ptm_from_kraus, Coo, Edge, SparsePtm, TopologyGraph};

/// Name recorded in model files produced from seeded generation.
pub const GENERATOR_NAME: &str = "chacha8/seed_from_u64/u53-uniform";

pub const DEFAULT_RESIDUAL_DENSITY: f64 = 0.05;

fn default_density() -> f64 {
    DEFAULT_RESIDUAL_DENSITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Per-qubit depolarizing probability.
    pub p_depol: f64,
    /// Per-qubit amplitude-damping rate.
    pub gamma_ad: f64,
    /// ZZ rotation angle per coupling edge, radians.
    pub theta_zz: f64,
    /// Half-width of the uniform distribution of injected residual values.
    pub residual_magnitude: f64,
    /// Fraction of residual-mask entries that receive a value.
    #[serde(default = "default_density")]
    pub residual_density: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            p_depol: 0.0,
            gamma_ad: 0.0,
            theta_zz: 0.0,
            residual_magnitude: 0.0,
            residual_density: DEFAULT_RESIDUAL_DENSITY,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("p_depol", self.p_depol)?;
        check_unit("gamma_ad", self.gamma_ad)?;
        check_unit("residual_density", self.residual_density)?;
        if !self.theta_zz.is_finite() {
            return Err(invalid("theta_zz must be finite"));
        }
        if !self.residual_magnitude.is_finite() || self.residual_magnitude < 0.0 {
            return Err(invalid("residual_magnitude must be finite and nonnegative"));
        }
        Ok(())
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// Single-qubit depolarizing channel: X, Y, Z coefficients shrink by `1 - p`.
pub fn depolarizing_ptm(p: f64) -> Result<SparsePtm> {
    check_unit("p", p)?;
    SparsePtm::from_entries(1, (1..4).map(|k| (k, k, -p)).collect())
}

/// Amplitude damping with Kraus pair `diag(1, √(1-γ))` and `√γ |0><1|`.
pub fn amplitude_damping_ptm(gamma: f64) -> Result<SparsePtm> {
    check_unit("gamma", gamma)?;
    let z = Complex64::new(0.0, 0.0);
    let k0 =
        DMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), z, z, Complex64::new((1.0 - gamma).sqrt(), 0.0)]);
    let k1 = DMatrix::from_row_slice(2, 2, &[z, Complex64::new(gamma.sqrt(), 0.0), z, z]);
    ptm_from_kraus(1, &[k0, k1])
}

/// PTM of `exp(-i θ Z⊗Z / 2)`.
pub fn zz_crosstalk_ptm(theta: f64) -> Result<SparsePtm> {
    if !theta.is_finite() {
        return Err(invalid("theta must be finite"));
    }
    let u = DMatrix::from_fn(4, 4, |r, c| {
        if r != c {
            return Complex64::new(0.0, 0.0);
        }
        let parity = ((r & 1) ^ (r >> 1)) as f64;
        // ZZ eigenvalue +1 on even parity, -1 on odd
        let eig = 1.0 - 2.0 * parity;
        Complex64::from_polar(1.0, -theta * eig / 2.0)
    });
    ptm_from_kraus(2, &[u])
}

/// `first ⊗ second` as a 2-qubit PTM, `first` on qubit 0.
pub fn product_ptm(first: &SparsePtm, second: &SparsePtm) -> Result<SparsePtm> {
    let dense = second.to_dense().kronecker(&first.to_dense());
    SparsePtm::from_dense(first.num_qubits() + second.num_qubits(), &dense)
}

/// Local decoherence on one qubit: depolarizing followed by amplitude damping.
pub fn local_channel_ptm(p_depol: f64, gamma_ad: f64) -> Result<SparsePtm> {
    amplitude_damping_ptm(gamma_ad)?.compose(&depolarizing_ptm(p_depol)?)
}

/// The 2-qubit block applied on each coupling edge: local decoherence on both
/// qubits followed by ZZ crosstalk.
pub fn edge_block_ptm(params: &NoiseParams) -> Result<SparsePtm> {
    params.validate()?;
    let local = local_channel_ptm(params.p_depol, params.gamma_ad)?;
    zz_crosstalk_ptm(params.theta_zz)?.compose(&product_ptm(&local, &local)?)
}

/// Portable seeded stream used for all synthetic draws.
pub struct SeededStream(ChaCha8Rng);

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random()
    }

    /// Uniform in `[-half_width, half_width)`.
    pub fn symmetric(&mut self, half_width: f64) -> f64 {
        half_width * (2.0 * self.uniform() - 1.0)
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.0.random_range(0..bound)
    }

    /// Standard normal.
    pub fn gaussian(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// Values uniform in `[-magnitude, magnitude)` on a seeded subset of the mask
/// (a `density` fraction of its non-row-0 pairs), sorted by coordinate.
pub fn random_residual(mask: &MaskSet, magnitude: f64, density: f64, seed: u64) -> Result<Vec<Coo>> {
    check_unit("density", density)?;
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(invalid("magnitude must be finite and nonnegative"));
    }
    let mut eligible: Vec<(usize, usize)> = mask.pairs().iter().copied().filter(|&(i, _)| i != 0).collect();
    let count = ((density * eligible.len() as f64).round() as usize).min(eligible.len());
    let mut rng = SeededStream::new(seed);
    for k in 0..count {
        let pick = k + rng.below(eligible.len() - k);
        eligible.swap(k, pick);
    }
    let mut chosen: Vec<(usize, usize)> = eligible[..count].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|(i, j)| (i, j, rng.symmetric(magnitude))).collect())
}

/// A synthetic device: the per-edge blocks it was built from, the composed
/// base channel, the injected residual and the full channel.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub graph: TopologyGraph,
    pub edge_blocks: BTreeMap<Edge, SparsePtm>,
    pub base: SparsePtm,
    pub residual: Vec<Coo>,
    pub channel: SparsePtm,
}

impl GroundTruth {
    /// Assembles a ground truth from explicit edge blocks and a residual on the
    /// full-weight mask (empty residual allowed).
    pub fn from_parts(
        graph: &TopologyGraph,
        edge_blocks: BTreeMap<Edge, SparsePtm>,
        residual: Vec<Coo>,
    ) -> Result<Self> {
        let base = compose_global(graph, &edge_blocks)?;
        let channel = if residual.is_empty() {
            base.clone()
        } else {
            let mask = materialize(&MaskSpec::residual(graph.num_qubits()))?;
            effective_ptm(&base, &residual, &mask)?
        };
        Ok(Self { graph: graph.clone(), edge_blocks, base, residual, channel })
    }

    /// The ideal device.
    pub fn identity(graph: &TopologyGraph) -> Result<Self> {
        let id = SparsePtm::identity(2)?;
        let blocks = graph.edges().iter().map(|&e| (e, id.clone())).collect();
        Self::from_parts(graph, blocks, Vec::new())
    }

    pub fn num_qubits(&self) -> usize {
        self.graph.num_qubits()
    }
}

/// Builds the synthetic device for `graph`. The residual is injected only for
/// `n >= 3`, where a separate full-weight stage exists.
pub fn synthesize(graph: &TopologyGraph, params: &NoiseParams) -> Result<GroundTruth> {
    params.validate()?;
    let block = edge_block_ptm(params)?;
    let blocks = graph.edges().iter().map(|&e| (e, block.clone())).collect();
    let n = graph.num_qubits();
    let residual = if n >= 3 && params.residual_magnitude > 0.0 {
        let mask = materialize(&MaskSpec::residual(n))?;
        random_residual(&mask, params.residual_magnitude, params.residual_density, params.seed)?
    } else {
        Vec::new()
    };
    GroundTruth::from_parts(graph, blocks, residual)
}

pub fn ground_truth_channel(graph: &TopologyGraph, params: &NoiseParams) -> Result<SparsePtm> {
    synthesize(graph, params).map(|t| t.channel)
}
