//! Stage drivers: per-edge baseline fits, freezing, residual fit.

use std::collections::BTreeMap;

use super::adam::{cosine_annealing_lr, ProjectedAdam};
use super::probes::{generate_probes, mse_loss, CompiledProbes, ProbeRecord};
use super::{ExperimentTrace, HpoConfig, TraceRow};
use crate::error::{invalid, HpoError, Result};
use crate::mask::{materialize, MaskSet, MaskSpec};
use crate::noise::GroundTruth;
use crate::ptm::{compose_global, effective_ptm, Coo, Edge, SparsePtm};

/// Stage-2 audit hooks fire every this many epochs (and once after the last).
pub const AUDIT_INTERVAL: usize = 100;

/// Largest register the full two-stage pipeline accepts.
pub const MAX_PIPELINE_QUBITS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub model: SparsePtm,
    pub trace: ExperimentTrace,
    pub validation_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFit {
    /// `I + W_frozen + Δ_res ⊙ M`.
    pub model: SparsePtm,
    /// Nonzero fitted residual coordinates.
    pub residual: Vec<Coo>,
    pub trace: ExperimentTrace,
    pub validation_mse: Option<f64>,
    pub active_parameters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpoRun {
    pub baselines: BTreeMap<Edge, BaselineFit>,
    pub frozen: SparsePtm,
    pub residual: Option<ResidualFit>,
    pub model: SparsePtm,
    /// Size of the last stage's mask (Table-style active count).
    pub active_parameters: u64,
}

impl HpoRun {
    pub fn traces(&self) -> Vec<&ExperimentTrace> {
        let mut out: Vec<&ExperimentTrace> = self.baselines.values().map(|b| &b.trace).collect();
        out.extend(self.residual.as_ref().map(|r| &r.trace));
        out
    }
}

type Audit<'a> = Option<&'a mut dyn FnMut(usize, &MaskSet, &[f64])>;

fn optimize(
    problem: &CompiledProbes,
    mask: &MaskSet,
    config: &HpoConfig,
    stage: String,
    mut audit: Audit<'_>,
) -> Result<(Vec<f64>, ExperimentTrace)> {
    let mut params = vec![0.0; mask.len()];
    let mut adam = ProjectedAdam::new(mask.len(), config);
    let mut residuals = Vec::with_capacity(problem.len());
    let mut grad = vec![0.0; mask.len()];
    let mut rows = Vec::new();
    let mut converged = false;
    for epoch in 0..config.epochs {
        problem.residuals(&params, &mut residuals);
        let mse = CompiledProbes::mse(&residuals);
        if !mse.is_finite() {
            return Err(HpoError::Validation(format!("{stage}: loss diverged at epoch {epoch}")));
        }
        let lr = cosine_annealing_lr(epoch, config)?;
        rows.push(TraceRow { epoch, mse, lr });
        if let Some(hook) = audit.as_mut() {
            if epoch % AUDIT_INTERVAL == 0 {
                hook(epoch, mask, &params);
            }
        }
        if mse <= config.convergence_threshold {
            converged = true;
            break;
        }
        problem.gradient(&residuals, &mut grad);
        adam.step(&mut params, &grad, lr);
    }
    problem.residuals(&params, &mut residuals);
    let final_mse = CompiledProbes::mse(&residuals);
    if let Some(hook) = audit.as_mut() {
        hook(rows.len(), mask, &params);
    }
    let parameters = mask.pairs().iter().zip(&params).map(|(&(i, j), &v)| (i, j, v)).collect();
    Ok((
        params,
        ExperimentTrace {
            stage,
            rows,
            final_mse,
            converged: converged || final_mse <= config.convergence_threshold,
            parameters,
        },
    ))
}

fn validation(model: &SparsePtm, probes: &[ProbeRecord]) -> Result<Option<f64>> {
    if probes.is_empty() {
        Ok(None)
    } else {
        mse_loss(model, probes).map(Some)
    }
}

fn fit_baseline_labeled(truth_2q: &SparsePtm, config: &HpoConfig, seed: u64, stage: String) -> Result<BaselineFit> {
    config.validate()?;
    if truth_2q.num_qubits() != 2 {
        return Err(HpoError::DimensionMismatch { expected: 2, found: truth_2q.num_qubits() });
    }
    let mask = materialize(&MaskSpec::baseline(2))?.without_row_zero();
    let probes = generate_probes(truth_2q, &mask, config.validation_probes, seed, config.observation_noise)?;
    let identity = SparsePtm::identity(2)?;
    let problem = CompiledProbes::new(&identity, &probes.training, &mask);
    let (params, trace) = optimize(&problem, &mask, config, stage, None)?;
    let entries = mask.pairs().iter().zip(params).map(|(&(i, j), v)| (i, j, v)).collect();
    let model = SparsePtm::from_entries(2, entries)?;
    let validation_mse = validation(&model, &probes.validation)?;
    Ok(BaselineFit { model, trace, validation_mse })
}

/// Fits all baseline-mask coordinates of a 2-qubit channel (row 0 stays
/// fixed by trace preservation), starting from the identity.
pub fn fit_baseline(truth_2q: &SparsePtm, config: &HpoConfig) -> Result<BaselineFit> {
    fit_baseline_labeled(truth_2q, config, config.seed, "baseline".into())
}

/// Fits `Δ_res` on the weight-n residual mask with `frozen` held fixed.
pub fn fit_residual(truth: &SparsePtm, frozen: &SparsePtm, n: usize, config: &HpoConfig) -> Result<ResidualFit> {
    fit_residual_inner(truth, frozen, n, config, config.seed, None)
}

/// [`fit_residual`] with a hook receiving `(epoch, mask, parameters)` every
/// [`AUDIT_INTERVAL`] epochs and once at the end.
pub fn fit_residual_audited(
    truth: &SparsePtm,
    frozen: &SparsePtm,
    n: usize,
    config: &HpoConfig,
    audit: &mut dyn FnMut(usize, &MaskSet, &[f64]),
) -> Result<ResidualFit> {
    fit_residual_inner(truth, frozen, n, config, config.seed, Some(audit))
}

fn fit_residual_inner(
    truth: &SparsePtm,
    frozen: &SparsePtm,
    n: usize,
    config: &HpoConfig,
    seed: u64,
    audit: Audit<'_>,
) -> Result<ResidualFit> {
    config.validate()?;
    if n < 3 {
        return Err(invalid(format!("residual stage needs at least 3 qubits, got {n}")));
    }
    for found in [truth.num_qubits(), frozen.num_qubits()] {
        if found != n {
            return Err(HpoError::DimensionMismatch { expected: n, found });
        }
    }
    let mask = materialize(&MaskSpec::residual(n))?.without_row_zero();
    let probes = generate_probes(truth, &mask, config.validation_probes, seed, config.observation_noise)?;
    let problem = CompiledProbes::new(frozen, &probes.training, &mask);
    let (_, trace) = optimize(&problem, &mask, config, format!("residual-{n}"), audit)?;
    let residual: Vec<Coo> = trace.parameters.iter().copied().filter(|c| c.2 != 0.0).collect();
    let model = effective_ptm(frozen, &residual, &mask)?;
    let validation_mse = validation(&model, &probes.validation)?;
    Ok(ResidualFit { model, residual, trace, validation_mse, active_parameters: mask.len() })
}

/// Full pipeline: per-edge baseline fits against the ground truth's edge
/// blocks, lift and freeze, then the residual stage against the global
/// channel. At n = 2 the baseline already covers every coordinate and the
/// residual stage is skipped.
pub fn run_hpo(truth: &GroundTruth, config: &HpoConfig) -> Result<HpoRun> {
    config.validate()?;
    let graph = &truth.graph;
    let n = graph.num_qubits();
    if n > MAX_PIPELINE_QUBITS {
        return Err(HpoError::Capacity {
            what: "HPO pipeline",
            n,
            limit: MAX_PIPELINE_QUBITS,
            hint: "dense probes and mitigation are sized for small registers",
        });
    }
    if n < 2 {
        return Err(invalid("HPO pipeline needs at least 2 qubits"));
    }
    let mut baselines = BTreeMap::new();
    for (k, &edge) in graph.edges().iter().enumerate() {
        let block = truth
            .edge_blocks
            .get(&edge)
            .ok_or_else(|| invalid(format!("ground truth has no block for edge ({}, {})", edge.0, edge.1)))?;
        let stage = format!("baseline:{}-{}", edge.0, edge.1);
        let fit = fit_baseline_labeled(block, config, config.seed.wrapping_add(k as u64), stage)?;
        baselines.insert(edge, fit);
    }
    let fitted: BTreeMap<Edge, SparsePtm> = baselines.iter().map(|(&e, f)| (e, f.model.clone())).collect();
    let frozen = compose_global(graph, &fitted)?;

    if n == 2 {
        let model = frozen.clone();
        return Ok(HpoRun { baselines, frozen, residual: None, model, active_parameters: 256 });
    }
    let seed = config.seed.wrapping_add(graph.edges().len() as u64);
    let residual = fit_residual_inner(&truth.channel, &frozen, n, config, seed, None)?;
    let model = residual.model.clone();
    let active_parameters = residual.active_parameters as u64;
    Ok(HpoRun { baselines, frozen, residual: Some(residual), model, active_parameters })
}
