//! Mini phase-estimation circuit executed in Pauli-vector space.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{density_from_pauli_vector, DensityMatrix};
use crate::error::{invalid, HpoError, Result};
use crate::pauli::PauliVector;
use crate::ptm::{ptm_from_kraus, SparsePtm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageRole {
    StatePrep,
    Hadamard,
    ControlledPhase,
    InverseQft,
}

#[derive(Debug, Clone)]
pub struct CircuitStage {
    pub role: StageRole,
    pub label: String,
    pub unitary: DMatrix<Complex64>,
    pub ptm: SparsePtm,
    /// Apply the noise channel right after this stage.
    pub inject_noise: bool,
}

/// Clock qubits `0..n-1` (clock `k` is bit `k` of the readout), target
/// qubit `n - 1` prepared in `|1>`.
#[derive(Debug, Clone)]
pub struct CircuitPlan {
    n: usize,
    phase: f64,
    stages: Vec<CircuitStage>,
}

impl CircuitPlan {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn clock_qubits(&self) -> usize {
        self.n - 1
    }

    pub fn stages(&self) -> &[CircuitStage] {
        &self.stages
    }

    pub fn injection_points(&self) -> usize {
        self.stages.iter().filter(|s| s.inject_noise).count()
    }

    /// Product of all stage unitaries applied to `|0...0>`.
    pub fn ideal_statevector(&self) -> DVector<Complex64> {
        let mut psi = DVector::zeros(1 << self.n);
        psi[0] = Complex64::new(1.0, 0.0);
        for stage in &self.stages {
            psi = &stage.unitary * psi;
        }
        psi
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Tensor product of single-qubit gates (identity elsewhere), qubit `k` on bit `k`.
fn local_layer(n: usize, gates: &[(usize, [[Complex64; 2]; 2])]) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |r, col| {
        let mut amp = c(1.0);
        for q in 0..n {
            let (rb, cb) = ((r >> q) & 1, (col >> q) & 1);
            match gates.iter().find(|g| g.0 == q) {
                Some((_, g)) => amp *= g[rb][cb],
                None if rb != cb => return c(0.0),
                None => {}
            }
        }
        amp
    })
}

fn stage(
    role: StageRole,
    label: String,
    unitary: DMatrix<Complex64>,
    n: usize,
    inject_noise: bool,
) -> Result<CircuitStage> {
    let ptm = ptm_from_kraus(n, std::slice::from_ref(&unitary))?;
    Ok(CircuitStage { role, label, unitary, ptm, inject_noise })
}

/// State prep, Hadamards on the clocks, one controlled-`U^(2^k)` per clock
/// (each followed by a noise injection point), then the inverse QFT on the
/// clocks. `U` multiplies the target's `|1>` by `exp(2πi·phase)`.
pub fn build_mini_qpe(n: usize, phase: f64) -> Result<CircuitPlan> {
    if !(3..=5).contains(&n) {
        return Err(invalid(format!("mini-QPE needs 3 to 5 qubits, got {n}")));
    }
    if !phase.is_finite() {
        return Err(invalid("phase must be finite"));
    }
    let m = n - 1;
    let target = n - 1;
    let dim = 1usize << n;
    let x = [[c(0.0), c(1.0)], [c(1.0), c(0.0)]];
    let h = 1.0 / 2f64.sqrt();
    let hadamard = [[c(h), c(h)], [c(h), c(-h)]];

    let mut stages = vec![stage(StageRole::StatePrep, "prep-target".into(), local_layer(n, &[(target, x)]), n, false)?];
    let layer: Vec<_> = (0..m).map(|q| (q, hadamard)).collect();
    stages.push(stage(StageRole::Hadamard, "hadamard-clocks".into(), local_layer(n, &layer), n, false)?);
    for k in 0..m {
        let angle = 2.0 * PI * phase * (1u64 << k) as f64;
        let u = DMatrix::from_fn(dim, dim, |r, col| {
            if r != col {
                c(0.0)
            } else if (r >> k) & 1 == 1 && (r >> target) & 1 == 1 {
                Complex64::from_polar(1.0, angle)
            } else {
                c(1.0)
            }
        });
        stages.push(stage(StageRole::ControlledPhase, format!("controlled-u^{}", 1u64 << k), u, n, true)?);
    }
    let clocks = 1usize << m;
    let norm = 1.0 / (clocks as f64).sqrt();
    let iqft = DMatrix::from_fn(dim, dim, |r, col| {
        if r >> m != col >> m {
            return c(0.0);
        }
        let (y, xx) = (r & (clocks - 1), col & (clocks - 1));
        Complex64::from_polar(norm, -2.0 * PI * (xx * y) as f64 / clocks as f64)
    });
    stages.push(stage(StageRole::InverseQft, "inverse-qft".into(), iqft, n, false)?);
    Ok(CircuitPlan { n, phase, stages })
}

fn apply_dense(m: &DMatrix<f64>, v: &PauliVector) -> Result<PauliVector> {
    let out = m * DVector::from_column_slice(v.coeffs());
    PauliVector::new(v.num_qubits(), out.iter().copied().collect())
}

/// Runs the plan in Pauli space. After each injection the noise channel is
/// applied, followed by `correction` when given.
pub(crate) fn run_pauli(
    plan: &CircuitPlan,
    noise: Option<&SparsePtm>,
    correction: Option<&DMatrix<f64>>,
) -> Result<PauliVector> {
    let n = plan.n;
    if let Some(noise) = noise {
        if noise.num_qubits() != n {
            return Err(HpoError::DimensionMismatch { expected: n, found: noise.num_qubits() });
        }
    }
    if let Some(corr) = correction {
        if corr.nrows() != 1 << (2 * n) {
            return Err(HpoError::DimensionMismatch { expected: 1 << (2 * n), found: corr.nrows() });
        }
    }
    let mut v = PauliVector::zero_state(n)?;
    for stage in &plan.stages {
        v = stage.ptm.apply(&v)?;
        if stage.inject_noise {
            if let Some(noise) = noise {
                v = noise.apply(&v)?;
            }
            if let Some(corr) = correction {
                v = apply_dense(corr, &v)?;
            }
        }
    }
    Ok(v)
}

/// Final state from `|0...0>`, with `noise` applied at every injection point.
pub fn execute(plan: &CircuitPlan, noise: Option<&SparsePtm>) -> Result<DensityMatrix> {
    density_from_pauli_vector(&run_pauli(plan, noise, None)?)
}

/// Like [`execute`], but the inverse of `learned` follows every noise
/// injection inside the circuit.
pub fn execute_mitigated(plan: &CircuitPlan, noise: Option<&SparsePtm>, learned: &SparsePtm) -> Result<DensityMatrix> {
    let inverse = super::invert_model(learned)?;
    let mut v = run_pauli(plan, noise, Some(&inverse))?;
    v.coeffs_mut()[0] = 1.0;
    density_from_pauli_vector(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::depolarizing_ptm;
    use crate::qem::state_fidelity;

    /// Analytic output for an exactly representable phase: clock register in
    /// `|phase·2^m>`, target in `|1>`.
    fn analytic_state(n: usize, phase: f64) -> DensityMatrix {
        let m = n - 1;
        let y = (phase * (1 << m) as f64).round() as usize % (1 << m);
        DensityMatrix::basis_state(n, y | (1 << m)).unwrap()
    }

    #[test]
    fn quarter_phase_reads_01() {
        let plan = build_mini_qpe(3, 0.25).unwrap();
        let rho = execute(&plan, None).unwrap();
        let probs = rho.probabilities();
        // clock qubit 0 = 1, clock qubit 1 = 0, target = 1
        assert!((probs[0b101] - 1.0).abs() < 1e-12);
        assert!((state_fidelity(&analytic_state(3, 0.25), &rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ideal_runs_match_analytic_states() {
        for n in 3..=4 {
            for phase in [0.0f64, 0.25, 0.5, 0.75, 0.125, 0.375] {
                if n == 3 && phase * 4.0 != (phase * 4.0).round() {
                    continue;
                }
                let plan = build_mini_qpe(n, phase).unwrap();
                let f = state_fidelity(&analytic_state(n, phase), &execute(&plan, None).unwrap()).unwrap();
                assert!((f - 1.0).abs() < 1e-10, "n={n} phase={phase} f={f}");
            }
        }
    }

    #[test]
    fn zero_phase_keeps_clocks_zero() {
        let plan = build_mini_qpe(4, 0.0).unwrap();
        let probs = execute(&plan, None).unwrap().probabilities();
        assert!((probs[0b1000] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plan_structure() {
        for n in 3..=5 {
            let plan = build_mini_qpe(n, 0.25).unwrap();
            assert_eq!(plan.stages().len(), n + 2);
            assert_eq!(plan.injection_points(), n - 1);
            assert!(plan.stages().iter().all(|s| s.ptm.num_qubits() == n));
        }
        assert!(build_mini_qpe(2, 0.25).is_err());
        assert!(build_mini_qpe(6, 0.25).is_err());
    }

    #[test]
    fn identity_noise_matches_noiseless() {
        let plan = build_mini_qpe(3, 0.25).unwrap();
        let clean = execute(&plan, None).unwrap();
        let id = execute(&plan, Some(&SparsePtm::identity(3).unwrap())).unwrap();
        assert_eq!(clean, id);
    }

    #[test]
    fn depolarizing_fidelity_decreases() {
        let plan = build_mini_qpe(3, 0.25).unwrap();
        let ideal = execute(&plan, None).unwrap();
        let mut last = 1.0;
        for p in [0.01, 0.05, 0.1] {
            // one depolarizing channel per qubit
            let d = depolarizing_ptm(p).unwrap();
            let d2 = crate::noise::product_ptm(&d, &d).unwrap();
            let d3 = SparsePtm::from_dense(3, &d.to_dense().kronecker(&d2.to_dense())).unwrap();
            let f = state_fidelity(&ideal, &execute(&plan, Some(&d3)).unwrap()).unwrap();
            assert!(f < last, "p={p} f={f}");
            last = f;
        }
    }

    #[test]
    fn wrong_noise_size() {
        let plan = build_mini_qpe(3, 0.25).unwrap();
        assert!(execute(&plan, Some(&SparsePtm::identity(2).unwrap())).is_err());
    }
}
