//! Tomographic probe data, the MSE loss and its masked gradient.

use crate::error::{invalid, HpoError, Result};
use crate::mask::MaskSet;
use crate::noise::SeededStream;
use crate::pauli::basis_size;
use crate::ptm::{Coo, SparsePtm};

/// One data point: the expectation of Pauli observable `observable_row`
/// after the channel acts on the (sparse) input Pauli vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub observable_row: usize,
    pub input: Vec<(usize, f64)>,
    pub target: f64,
}

impl ProbeRecord {
    pub fn predict(&self, model: &SparsePtm) -> f64 {
        model.row_dot_sparse(self.observable_row, &self.input)
    }
}

/// Training probes (one per mask entry) plus held-out dense validation probes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub training: Vec<ProbeRecord>,
    pub validation: Vec<ProbeRecord>,
}

/// Direct-entry probes for every mask pair (`input = e_j`, observable `i`,
/// target `R_ij`) and `n_validation` probes with dense random inputs on rows
/// drawn from the mask. Optional Gaussian noise of width `sigma` is added to
/// every target.
pub fn generate_probes(
    truth: &SparsePtm,
    mask: &MaskSet,
    n_validation: usize,
    seed: u64,
    sigma: f64,
) -> Result<ProbeSet> {
    if truth.num_qubits() != mask.num_qubits() {
        return Err(HpoError::DimensionMismatch { expected: truth.num_qubits(), found: mask.num_qubits() });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(invalid("observation noise must be finite and nonnegative"));
    }
    let mut rng = SeededStream::new(seed);
    let noise = |rng: &mut SeededStream| if sigma > 0.0 { sigma * rng.gaussian() } else { 0.0 };

    let training = mask
        .pairs()
        .iter()
        .map(|&(i, j)| ProbeRecord { observable_row: i, input: vec![(j, 1.0)], target: truth.entry(i, j) })
        .collect::<Vec<_>>();

    let mut rows: Vec<usize> = mask.pairs().iter().map(|&(i, _)| i).collect();
    rows.dedup();
    let dim = basis_size(truth.num_qubits());
    let mut validation = Vec::with_capacity(n_validation);
    if !rows.is_empty() {
        for _ in 0..n_validation {
            let row = rows[rng.below(rows.len())];
            let input: Vec<(usize, f64)> = (0..dim).map(|j| (j, rng.symmetric(1.0))).collect();
            let target = truth.row_dot_sparse(row, &input);
            validation.push(ProbeRecord { observable_row: row, input, target });
        }
    }

    let mut training = training;
    for p in training.iter_mut().chain(validation.iter_mut()) {
        p.target += noise(&mut rng);
    }
    Ok(ProbeSet { training, validation })
}

/// `(1/|S|) Σ (pred_k - target_k)^2`.
pub fn mse_loss(model: &SparsePtm, probes: &[ProbeRecord]) -> Result<f64> {
    if probes.is_empty() {
        return Err(invalid("MSE over an empty probe set"));
    }
    let total: f64 = probes
        .iter()
        .map(|p| {
            let r = p.predict(model) - p.target;
            r * r
        })
        .sum();
    Ok(total / probes.len() as f64)
}

/// `∂L/∂Δ_ij` for every mask pair, in mask order. Coordinates outside the
/// mask never appear.
pub fn analytic_gradient(model: &SparsePtm, probes: &[ProbeRecord], mask: &MaskSet) -> Result<Vec<Coo>> {
    if probes.is_empty() {
        return Err(invalid("gradient over an empty probe set"));
    }
    let mut grad = vec![0.0; mask.len()];
    let scale = 2.0 / probes.len() as f64;
    for p in probes {
        let r = p.predict(model) - p.target;
        for &(j, x) in &p.input {
            if let Some(pos) = mask.position(p.observable_row, j) {
                grad[pos] += scale * r * x;
            }
        }
    }
    Ok(mask.pairs().iter().zip(grad).map(|(&(i, j), g)| (i, j, g)).collect())
}

/// Probes compiled into an affine map of the masked parameters:
/// `pred_k = offset_k + Σ_p a_kp θ_p`, where the offset carries the identity
/// and any frozen entries.
#[derive(Debug, Clone)]
pub(crate) struct CompiledProbes {
    offset: Vec<f64>,
    targets: Vec<f64>,
    row_ptr: Vec<usize>,
    coef: Vec<(usize, f64)>,
}

impl CompiledProbes {
    pub(crate) fn new(frozen: &SparsePtm, probes: &[ProbeRecord], mask: &MaskSet) -> Self {
        let mut row_ptr = Vec::with_capacity(probes.len() + 1);
        row_ptr.push(0);
        let mut coef = Vec::new();
        let mut offset = Vec::with_capacity(probes.len());
        for p in probes {
            offset.push(p.predict(frozen));
            for &(j, x) in &p.input {
                if let Some(pos) = mask.position(p.observable_row, j) {
                    coef.push((pos, x));
                }
            }
            row_ptr.push(coef.len());
        }
        Self { offset, targets: probes.iter().map(|p| p.target).collect(), row_ptr, coef }
    }

    pub(crate) fn len(&self) -> usize {
        self.targets.len()
    }

    pub(crate) fn residuals(&self, params: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for k in 0..self.targets.len() {
            let mut pred = self.offset[k];
            for &(pos, x) in &self.coef[self.row_ptr[k]..self.row_ptr[k + 1]] {
                pred += x * params[pos];
            }
            out.push(pred - self.targets[k]);
        }
    }

    pub(crate) fn mse(residuals: &[f64]) -> f64 {
        residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
    }

    pub(crate) fn gradient(&self, residuals: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 2.0 / self.targets.len() as f64;
        for (k, r) in residuals.iter().enumerate() {
            for &(pos, x) in &self.coef[self.row_ptr[k]..self.row_ptr[k + 1]] {
                grad[pos] += scale * r * x;
            }
        }
    }
}
