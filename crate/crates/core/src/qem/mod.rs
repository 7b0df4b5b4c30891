//! Error-mitigation benchmark: density matrices, Uhlmann fidelity, a small
//! phase-estimation circuit in PTM form, and two mitigation schemes.

mod circuit;
mod mitigate;

pub use circuit::{build_mini_qpe, execute, execute_mitigated, CircuitPlan, CircuitStage, StageRole};
pub use mitigate::{
    estimate_depolarizing, evaluate_scenarios, fidelity_report, invert_model, mitigate_global_depolarizing,
    mitigate_hpo, FidelityReport, FidelityRow, CONDITION_LIMIT,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, HpoError, Result};
use crate::pauli::{basis_size, check_qubits, PauliVector};
use crate::ptm::PauliOperator;

/// Largest register for dense density-matrix work.
pub const MAX_DENSITY_QUBITS: usize = 5;

const HERMITIAN_TOLERANCE: f64 = 1e-10;
const TRACE_TOLERANCE: f64 = 1e-10;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Eigenvalues below this count as genuinely negative when clamped.
pub const PSD_SLACK: f64 = 1e-9;
/// Eigenvalues below this are round-off and contribute nothing to square
/// roots (otherwise `sqrt(1e-17)` noise shows up at the 1e-8 level).
const ROUNDOFF_FLOOR: f64 = 1e-13;

fn root(l: f64) -> f64 {
    if l < ROUNDOFF_FLOOR {
        0.0
    } else {
        l.sqrt()
    }
}

fn check_density_qubits(n: usize) -> Result<()> {
    check_qubits(n)?;
    if n > MAX_DENSITY_QUBITS {
        return Err(HpoError::Capacity {
            what: "dense density matrices",
            n,
            limit: MAX_DENSITY_QUBITS,
            hint: "mitigation benchmarks run on small registers only",
        });
    }
    Ok(())
}

/// Hermitian, unit-trace `2^n × 2^n` matrix. Small negative eigenvalues are
/// tolerated because mitigated states need not be physical.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(n: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        check_density_qubits(n)?;
        let dim = 1usize << n;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(HpoError::DimensionMismatch { expected: dim, found: entries.nrows() });
        }
        let skew = (&entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > HERMITIAN_TOLERANCE {
            return Err(HpoError::Validation(format!("density matrix not Hermitian (deviation {skew:e})")));
        }
        let trace = entries.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOLERANCE {
            return Err(HpoError::Validation(format!("density matrix trace {trace} is not 1")));
        }
        Ok(Self { n, entries })
    }

    /// `|ψ><ψ|` for a normalized amplitude vector.
    pub fn pure(n: usize, amplitudes: &[Complex64]) -> Result<Self> {
        check_density_qubits(n)?;
        if amplitudes.len() != 1 << n {
            return Err(HpoError::DimensionMismatch { expected: 1 << n, found: amplitudes.len() });
        }
        let psi = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(n, &psi * psi.adjoint())
    }

    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        check_density_qubits(n)?;
        if index >= 1 << n {
            return Err(invalid(format!("basis state {index} out of range for {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::pure(n, &amps)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_density_qubits(n)?;
        let dim = 1usize << n;
        Self::new(n, DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.entries).0
    }

    /// Diagonal of the matrix, i.e. computational-basis outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `V diag(sqrt(λ)) V†` with negative and round-off eigenvalues zeroed, plus the number of eigenvalues below `-PSD_SLACK`.
fn psd_sqrt(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, usize) {
    let (vals, vecs) = hermitian_eigen(m);
    let clamped = vals.iter().filter(|&&l| l < -PSD_SLACK).count();
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let mut col = scaled.column_mut(k);
        col *= Complex64::new(root(l), 0.0);
    }
    (&scaled * vecs.adjoint(), clamped)
}

/// Uhlmann fidelity with the count of clamped negative eigenvalues (across
/// both inputs and the inner product matrix).
pub fn state_fidelity_detailed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(f64, usize)> {
    if rho.n != sigma.n {
        return Err(HpoError::DimensionMismatch { expected: rho.n, found: sigma.n });
    }
    let (sqrt_rho, c_rho) = psd_sqrt(&rho.entries);
    let c_sigma = sigma.eigenvalues().iter().filter(|&&l| l < -PSD_SLACK).count();
    let inner = &sqrt_rho * &sigma.entries * &sqrt_rho;
    let (vals, _) = hermitian_eigen(&inner);
    let c_inner = vals.iter().filter(|&&l| l < -PSD_SLACK).count();
    let root_sum: f64 = vals.iter().map(|&l| root(l)).sum();
    Ok(((root_sum * root_sum).clamp(0.0, 1.0), c_rho + c_sigma + c_inner))
}

/// `F(ρ, σ) = (Tr sqrt(sqrt(ρ) σ sqrt(ρ)))^2`, clamped to `[0, 1]`.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    state_fidelity_detailed(rho, sigma).map(|(f, _)| f)
}

/// `v_j = Tr[P_j ρ]`.
pub fn pauli_vector_from_density(rho: &DensityMatrix) -> Result<PauliVector> {
    let n = rho.n;
    let coeffs = (0..basis_size(n)).map(|j| PauliOperator::new(j, n).trace_with(&rho.entries).re).collect();
    PauliVector::new(n, coeffs)
}

/// `ρ = 2^-n Σ_j v_j P_j`; requires `v_0 = 1`.
pub fn density_from_pauli_vector(v: &PauliVector) -> Result<DensityMatrix> {
    let n = v.num_qubits();
    check_density_qubits(n)?;
    let c0 = v.coeffs()[0];
    if (c0 - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(HpoError::Validation(format!("Pauli vector not normalized: identity coefficient {c0}")));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (j, &vj) in v.coeffs().iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let p = PauliOperator::new(j, n);
        for (c, ph) in p.phase.iter().enumerate() {
            m[(c ^ p.flip, c)] += ph * vj;
        }
    }
    m /= Complex64::new(dim as f64, 0.0);
    DensityMatrix::new(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SeededStream;

    fn random_pure(n: usize, seed: u64) -> DensityMatrix {
        let mut rng = SeededStream::new(seed);
        let mut amps: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(rng.gaussian(), rng.gaussian())).collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|z| *z /= norm);
        DensityMatrix::pure(n, &amps).unwrap()
    }

    fn random_mixed(n: usize, seed: u64) -> DensityMatrix {
        let a = random_pure(n, seed);
        let b = random_pure(n, seed + 1000);
        let m = a.matrix() * Complex64::new(0.7, 0.0) + b.matrix() * Complex64::new(0.3, 0.0);
        DensityMatrix::new(n, m).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::basis_state(1, 0).unwrap();
        let one = DensityMatrix::basis_state(1, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((state_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-10);
        assert!(state_fidelity(&zero, &one).unwrap().abs() < 1e-10);
        assert!((state_fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-10);
        let psi = random_pure(3, 4);
        assert!((state_fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_of_pure_state_is_expectation() {
        // closed form F(|ψ><ψ|, σ) = <ψ|σ|ψ>
        for seed in 0..5 {
            let psi = random_pure(2, seed);
            let sigma = random_mixed(2, seed + 50);
            let expect = (psi.matrix() * sigma.matrix()).trace().re;
            let got = state_fidelity(&psi, &sigma).unwrap();
            assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded() {
        for seed in 0..5 {
            let a = random_mixed(2, seed);
            let b = random_mixed(2, seed + 7);
            let ab = state_fidelity(&a, &b).unwrap();
            let ba = state_fidelity(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-10);
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn fidelity_errors() {
        let a = DensityMatrix::basis_state(1, 0).unwrap();
        let b = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(matches!(state_fidelity(&a, &b), Err(HpoError::DimensionMismatch { .. })));
        let mut m = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.0, 0.3);
        assert!(DensityMatrix::new(1, m).is_err());
        assert!(DensityMatrix::new(1, DMatrix::identity(2, 2)).is_err());
        assert!(matches!(DensityMatrix::maximally_mixed(6), Err(HpoError::Capacity { .. })));
    }

    #[test]
    fn clamping_is_reported() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.1, 0.0);
        m[(1, 1)] = Complex64::new(-0.1, 0.0);
        let unphysical = DensityMatrix::new(1, m).unwrap();
        let zero = DensityMatrix::basis_state(1, 0).unwrap();
        let (f, clamped) = state_fidelity_detailed(&zero, &unphysical).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn pauli_vector_examples() {
        let v = pauli_vector_from_density(&DensityMatrix::maximally_mixed(3).unwrap()).unwrap();
        assert!((v.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!(v.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
        let z = pauli_vector_from_density(&DensityMatrix::basis_state(1, 0).unwrap()).unwrap();
        assert_eq!(z.coeffs(), &[1.0, 0.0, 0.0, 1.0]);
        let zs = PauliVector::zero_state(3).unwrap();
        let from_rho = pauli_vector_from_density(&DensityMatrix::basis_state(3, 0).unwrap()).unwrap();
        assert_eq!(zs, from_rho);
    }

    #[test]
    fn density_round_trip() {
        for n in 1..=4 {
            let rho = random_mixed(n, 30 + n as u64);
            let back = density_from_pauli_vector(&pauli_vector_from_density(&rho).unwrap()).unwrap();
            let err = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn unnormalized_vector_rejected() {
        let v = PauliVector::new(1, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(density_from_pauli_vector(&v).is_err());
    }
}
