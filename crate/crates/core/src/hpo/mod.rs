//! Two-stage hierarchical progressive optimization.
//!
//! Stage 1 fits every coupling edge's 2-qubit channel on the baseline mask.
//! The fitted blocks are lifted, composed and frozen. Stage 2 fits only the
//! residual-mask coordinates on top of the frozen model. Both stages run
//! full-batch projected Adam with a cosine learning-rate schedule.

mod adam;
mod fit;
mod probes;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ptm::Coo;

pub use adam::{cosine_annealing_lr, projected_adam_step, MaskedParameters, ProjectedAdam};
pub use fit::{
    fit_baseline, fit_residual, fit_residual_audited, run_hpo, BaselineFit, HpoRun, ResidualFit, AUDIT_INTERVAL,
};
pub use probes::{analytic_gradient, generate_probes, mse_loss, ProbeRecord, ProbeSet};

/// Optimizer settings. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpoConfig {
    pub learning_rate: f64,
    pub eta_min: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub convergence_threshold: f64,
    /// Standard deviation of Gaussian noise added to probe targets.
    pub observation_noise: f64,
    /// Number of dense held-out probes per stage.
    pub validation_probes: usize,
}

impl Default for HpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            eta_min: 1e-5,
            epochs: 3000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            convergence_threshold: 1e-13,
            observation_noise: 0.0,
            validation_probes: 32,
        }
    }
}

impl HpoConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.learning_rate,
            self.eta_min,
            self.adam_beta1,
            self.adam_beta2,
            self.adam_epsilon,
            self.convergence_threshold,
            self.observation_noise,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("HPO config values must be finite"));
        }
        if !(self.eta_min > 0.0 && self.eta_min <= self.learning_rate) {
            return Err(invalid("eta_min must satisfy 0 < eta_min <= learning_rate"));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1)")));
            }
        }
        if self.adam_epsilon <= 0.0 {
            return Err(invalid("adam_epsilon must be positive"));
        }
        if self.convergence_threshold < 0.0 {
            return Err(invalid("convergence_threshold must be nonnegative"));
        }
        if self.observation_noise < 0.0 {
            return Err(invalid("observation_noise must be nonnegative"));
        }
        Ok(())
    }
}

/// One epoch of a fitting stage. `mse` is the training loss before that
/// epoch's update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub mse: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub stage: String,
    pub rows: Vec<TraceRow>,
    /// Training loss of the returned parameters.
    pub final_mse: f64,
    pub converged: bool,
    /// Fitted coordinates, one per active mask pair.
    pub parameters: Vec<Coo>,
}

impl ExperimentTrace {
    pub fn epochs_run(&self) -> usize {
        self.rows.len()
    }
}
