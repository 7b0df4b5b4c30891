//! Global-depolarizing and learned-model mitigation, and the four-scenario report.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::circuit::run_pauli;
use super::{
    build_mini_qpe, check_density_qubits, density_from_pauli_vector, execute, execute_mitigated,
    state_fidelity_detailed, CircuitPlan, DensityMatrix,
};
use crate::error::{invalid, HpoError, Result};
use crate::hpo::{run_hpo, HpoConfig};
use crate::noise::{synthesize, NoiseParams};
use crate::pauli::PauliVector;
use crate::ptm::{SparsePtm, TopologyGraph};

/// Learned models with a larger condition number are refused.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Dense inverse of a learned PTM, refused when ill-conditioned.
pub fn invert_model(learned: &SparsePtm) -> Result<DMatrix<f64>> {
    check_density_qubits(learned.num_qubits())?;
    let dense = learned.to_dense();
    let sv = dense.clone().svd(false, false).singular_values;
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    // also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(condition < CONDITION_LIMIT) {
        return Err(HpoError::IllConditioned { condition, limit: CONDITION_LIMIT });
    }
    dense.lu().try_inverse().ok_or(HpoError::IllConditioned { condition: f64::INFINITY, limit: CONDITION_LIMIT })
}

/// Per-injection depolarizing strength implied by the noisy vector's overall
/// contraction, assuming the ideal output is pure: a pure state has
/// `Σ_{j>0} v_j^2 = 2^n - 1`, so the fitted contraction is
/// `c = |v_noisy,non-id| / sqrt(2^n - 1)` and `p = 1 - c^(1/L)`.
pub fn estimate_depolarizing(noisy: &PauliVector, injections: usize) -> Result<f64> {
    if injections == 0 {
        return Err(invalid("depolarizing estimate needs at least one injection point"));
    }
    let n = noisy.num_qubits();
    let norm = noisy.coeffs()[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
    let contraction = norm / (((1usize << n) - 1) as f64).sqrt();
    if contraction <= 0.0 {
        return Err(HpoError::Validation("noisy state carries no signal to rescale".into()));
    }
    Ok((1.0 - contraction.powf(1.0 / injections as f64)).max(0.0))
}

/// Divides every non-identity coefficient by `(1 - p_est)^L`.
pub fn mitigate_global_depolarizing(noisy: &PauliVector, p_est: f64, injections: usize) -> Result<PauliVector> {
    if !(0.0..1.0).contains(&p_est) {
        return Err(invalid(format!("depolarizing estimate {p_est} outside [0, 1)")));
    }
    let scale = (1.0 - p_est).powi(-(injections as i32));
    let mut out = noisy.clone();
    out.coeffs_mut()[1..].iter_mut().for_each(|c| *c *= scale);
    Ok(out)
}

/// Applies the learned model's inverse `injections` times to a final noisy
/// vector. Exact only when the noise commutes with the gates after each
/// injection; [`execute_mitigated`] inverts inside the circuit instead.
pub fn mitigate_hpo(noisy: &PauliVector, learned: &SparsePtm, injections: usize) -> Result<PauliVector> {
    if learned.num_qubits() != noisy.num_qubits() {
        return Err(HpoError::DimensionMismatch { expected: noisy.num_qubits(), found: learned.num_qubits() });
    }
    let inverse = invert_model(learned)?;
    let mut v = nalgebra::DVector::from_column_slice(noisy.coeffs());
    for _ in 0..injections {
        v = &inverse * v;
    }
    let mut coeffs: Vec<f64> = v.iter().copied().collect();
    coeffs[0] = 1.0;
    PauliVector::new(noisy.num_qubits(), coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub ideal: f64,
    pub raw: f64,
    pub depol: f64,
    pub hpo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub n: usize,
    pub phase: f64,
    pub fidelity: FidelityRow,
    pub delta_hpo_vs_depol: f64,
    pub clamped_eigenvalues: usize,
    /// Fitted per-injection depolarizing strength.
    pub p_est: f64,
}

/// Scores ideal, raw, depolarizing-mitigated and learned-model-mitigated
/// runs of `plan` under `noise` against the noiseless output.
pub fn evaluate_scenarios(plan: &CircuitPlan, noise: &SparsePtm, learned: &SparsePtm) -> Result<FidelityReport> {
    let injections = plan.injection_points();
    let ideal = execute(plan, None)?;
    let raw_vec = run_pauli(plan, Some(noise), None)?;
    let raw = density_from_pauli_vector(&raw_vec)?;
    let p_est = estimate_depolarizing(&raw_vec, injections)?;
    let depol = density_from_pauli_vector(&mitigate_global_depolarizing(&raw_vec, p_est, injections)?)?;
    let hpo = execute_mitigated(plan, Some(noise), learned)?;

    let mut clamped = 0;
    let mut score = |state: &DensityMatrix| -> Result<f64> {
        let (f, c) = state_fidelity_detailed(&ideal, state)?;
        clamped += c;
        Ok(f)
    };
    let fidelity = FidelityRow { ideal: score(&ideal)?, raw: score(&raw)?, depol: score(&depol)?, hpo: score(&hpo)? };
    Ok(FidelityReport {
        n: plan.num_qubits(),
        phase: plan.phase(),
        delta_hpo_vs_depol: fidelity.hpo - fidelity.depol,
        fidelity,
        clamped_eigenvalues: clamped,
        p_est,
    })
}

/// End to end on a chain of `n` qubits: synthesize the ground truth, learn
/// it with the two-stage fit, and score the mini-QPE scenarios.
pub fn fidelity_report(n: usize, phase: f64, params: &NoiseParams, config: &HpoConfig) -> Result<FidelityReport> {
    let plan = build_mini_qpe(n, phase)?;
    let truth = synthesize(&TopologyGraph::chain(n)?, params)?;
    let run = run_hpo(&truth, config)?;
    evaluate_scenarios(&plan, &truth.channel, &run.model)
}
