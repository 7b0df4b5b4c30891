//! Adam restricted to the masked coordinates, plus the cosine learning-rate schedule.

use std::f64::consts::PI;

use super::HpoConfig;
use crate::error::{invalid, HpoError, Result};
use crate::mask::MaskSet;
use crate::ptm::Coo;

/// `η_min + (η - η_min)(1 + cos(π t / (T - 1))) / 2`.
pub fn cosine_annealing_lr(epoch: usize, config: &HpoConfig) -> Result<f64> {
    if epoch >= config.epochs {
        return Err(invalid(format!("epoch {epoch} outside schedule of {} epochs", config.epochs)));
    }
    if config.epochs == 1 {
        return Ok(config.learning_rate);
    }
    let phase = PI * epoch as f64 / (config.epochs - 1) as f64;
    Ok(config.eta_min + (config.learning_rate - config.eta_min) * (1.0 + phase.cos()) / 2.0)
}

/// Adam moments, one slot per mask coordinate.
#[derive(Debug, Clone)]
pub struct ProjectedAdam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl ProjectedAdam {
    pub fn new(len: usize, config: &HpoConfig) -> Self {
        Self {
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            epsilon: config.adam_epsilon,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Bias-corrected Adam update on mask-aligned parameters and gradients.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Parameter values living on a mask; nothing outside the mask exists.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedParameters {
    mask: MaskSet,
    values: Vec<f64>,
}

impl MaskedParameters {
    pub fn zeros(mask: MaskSet) -> Self {
        let values = vec![0.0; mask.len()];
        Self { mask, values }
    }

    pub fn mask(&self) -> &MaskSet {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.mask.position(i, j).map(|p| self.values[p])
    }

    pub fn to_coo(&self) -> Vec<Coo> {
        self.mask.pairs().iter().zip(&self.values).map(|(&(i, j), &v)| (i, j, v)).collect()
    }
}

/// One projected step: gradient entries outside the mask are multiplied by
/// zero (dropped) before the Adam update.
pub fn projected_adam_step(
    state: &mut ProjectedAdam,
    params: &mut MaskedParameters,
    grads: &[Coo],
    lr: f64,
) -> Result<()> {
    if state.m.len() != params.values.len() {
        return Err(HpoError::DimensionMismatch { expected: params.values.len(), found: state.m.len() });
    }
    let mut aligned = vec![0.0; params.values.len()];
    for &(i, j, g) in grads {
        if let Some(p) = params.mask.position(i, j) {
            aligned[p] += g;
        }
    }
    state.step(&mut params.values, &aligned, lr);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(epochs: usize) -> HpoConfig {
        HpoConfig { epochs, ..HpoConfig::default() }
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let c = config(3000);
        assert_eq!(cosine_annealing_lr(0, &c).unwrap(), 0.002);
        assert!((cosine_annealing_lr(2999, &c).unwrap() - 1e-5).abs() < 1e-18);
        assert!(cosine_annealing_lr(3000, &c).is_err());
        let odd = config(101);
        assert!((cosine_annealing_lr(50, &odd).unwrap() - (0.002 + 1e-5) / 2.0).abs() < 1e-18);
        assert_eq!(cosine_annealing_lr(0, &config(1)).unwrap(), 0.002);
    }

    #[test]
    fn schedule_is_monotone() {
        let c = config(500);
        let lrs: Vec<f64> = (0..500).map(|e| cosine_annealing_lr(e, &c).unwrap()).collect();
        assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
    }

    fn mask() -> MaskSet {
        MaskSet::from_pairs(1, vec![(1, 1), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let c = HpoConfig::default();
        let mut params = MaskedParameters::zeros(mask());
        let mut adam = ProjectedAdam::new(3, &c);
        projected_adam_step(&mut adam, &mut params, &[], 0.002).unwrap();
        assert_eq!(params.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn off_mask_gradient_is_projected_out() {
        let c = HpoConfig::default();
        let mut params = MaskedParameters::zeros(mask());
        let before = params.clone();
        let mut adam = ProjectedAdam::new(3, &c);
        projected_adam_step(&mut adam, &mut params, &[(1, 2, 5.0), (3, 3, -1.0)], 0.002).unwrap();
        assert_eq!(params, before);
        assert_eq!(params.get(1, 2), None);
        assert_eq!(params.to_coo().len(), 3);
    }

    #[test]
    fn constant_gradient_descends() {
        let c = HpoConfig::default();
        let mut params = MaskedParameters::zeros(mask());
        let mut adam = ProjectedAdam::new(3, &c);
        for _ in 0..200 {
            projected_adam_step(&mut adam, &mut params, &[(2, 3, 0.5), (3, 0, -0.01)], 0.002).unwrap();
        }
        assert!(params.get(2, 3).unwrap() < 0.0);
        assert!(params.get(3, 0).unwrap() > 0.0);
        assert_eq!(params.get(1, 1).unwrap(), 0.0);
        // first Adam step has magnitude lr regardless of gradient scale
        let mut fresh = MaskedParameters::zeros(mask());
        let mut adam = ProjectedAdam::new(3, &c);
        projected_adam_step(&mut adam, &mut fresh, &[(2, 3, 1e-3)], 0.002).unwrap();
        assert!((fresh.get(2, 3).unwrap() + 0.002).abs() < 1e-7);
    }
}
