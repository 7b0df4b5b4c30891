//! PTM entries straight from a Kraus decomposition,
//! `R_ij = Tr[P_i Σ_k K_k P_j K_k†] / 2^n`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Coo, SparsePtm, PRUNE_TOLERANCE};
use crate::error::{invalid, HpoError, Result};
use crate::pauli::{basis_size, check_qubits, digit_at};

/// Largest register handled by the Kraus route (dense `2^n` matrices).
pub const MAX_KRAUS_QUBITS: usize = 5;

const TP_TOLERANCE: f64 = 1e-10;
const IMAG_TOLERANCE: f64 = 1e-10;

/// An `n`-qubit Pauli operator as a signed permutation:
/// `P |c> = phase[c] |c ^ flip>`, with qubit `k` on bit `k` of `c`.
#[derive(Debug, Clone)]
pub struct PauliOperator {
    pub flip: usize,
    pub phase: Vec<Complex64>,
}

impl PauliOperator {
    pub fn new(index: usize, n: usize) -> Self {
        let dim = 1usize << n;
        let mut flip = 0usize;
        for q in 0..n {
            if matches!(digit_at(index, q), 1 | 2) {
                flip |= 1 << q;
            }
        }
        let phase = (0..dim)
            .map(|c| {
                let mut ph = Complex64::new(1.0, 0.0);
                for q in 0..n {
                    let bit = (c >> q) & 1;
                    ph *= match digit_at(index, q) {
                        0 | 1 => Complex64::new(1.0, 0.0),
                        // Y|0> = i|1>, Y|1> = -i|0>
                        2 => Complex64::new(0.0, if bit == 0 { 1.0 } else { -1.0 }),
                        _ => Complex64::new(if bit == 0 { 1.0 } else { -1.0 }, 0.0),
                    };
                }
                ph
            })
            .collect();
        Self { flip, phase }
    }

    /// `Tr[P M]` in `O(2^n)`.
    pub fn trace_with(&self, m: &DMatrix<Complex64>) -> Complex64 {
        self.phase.iter().enumerate().map(|(c, ph)| ph * m[(c, c ^ self.flip)]).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.phase.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (c, ph) in self.phase.iter().enumerate() {
            m[(c ^ self.flip, c)] = *ph;
        }
        m
    }
}

/// Dense matrix of the Pauli string with the given index.
pub fn pauli_matrix(index: usize, n: usize) -> DMatrix<Complex64> {
    PauliOperator::new(index, n).to_dense()
}

/// `Tr[P_index M]`.
pub fn pauli_trace(index: usize, n: usize, m: &DMatrix<Complex64>) -> Complex64 {
    PauliOperator::new(index, n).trace_with(m)
}

/// PTM of the channel `ρ -> Σ_k K_k ρ K_k†`.
pub fn ptm_from_kraus(n: usize, kraus: &[DMatrix<Complex64>]) -> Result<SparsePtm> {
    check_qubits(n)?;
    if n > MAX_KRAUS_QUBITS {
        return Err(HpoError::Capacity {
            what: "Kraus-to-PTM conversion",
            n,
            limit: MAX_KRAUS_QUBITS,
            hint: "build larger channels by lifting and composing smaller blocks",
        });
    }
    if kraus.is_empty() {
        return Err(invalid("empty Kraus set"));
    }
    let dim = 1usize << n;
    if let Some(k) = kraus.iter().find(|k| k.nrows() != dim || k.ncols() != dim) {
        return Err(HpoError::DimensionMismatch { expected: dim, found: k.nrows().max(k.ncols()) });
    }
    let mut completeness = DMatrix::<Complex64>::zeros(dim, dim);
    for k in kraus {
        completeness += k.adjoint() * k;
    }
    let deviation =
        (completeness - DMatrix::<Complex64>::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > TP_TOLERANCE {
        return Err(HpoError::Validation(format!(
            "Kraus operators are not trace preserving (max deviation {deviation:.3e})"
        )));
    }

    let size = basis_size(n);
    let paulis: Vec<PauliOperator> = (0..size).map(|j| PauliOperator::new(j, n)).collect();
    let adjoints: Vec<DMatrix<Complex64>> = kraus.iter().map(|k| k.adjoint()).collect();
    let norm = 1.0 / dim as f64;
    let mut entries: Vec<Coo> = Vec::new();
    let mut p_kdag = DMatrix::<Complex64>::zeros(dim, dim);
    for (j, pj) in paulis.iter().enumerate() {
        let mut image = DMatrix::<Complex64>::zeros(dim, dim);
        for (k, kdag) in kraus.iter().zip(&adjoints) {
            // rows of P_j K† are phased, permuted rows of K†
            for c in 0..dim {
                let target = c ^ pj.flip;
                let ph = pj.phase[c];
                for col in 0..dim {
                    p_kdag[(target, col)] = ph * kdag[(c, col)];
                }
            }
            image += k * &p_kdag;
        }
        for (i, pi) in paulis.iter().enumerate() {
            let t = pi.trace_with(&image) * norm;
            if t.im.abs() > IMAG_TOLERANCE {
                return Err(HpoError::Validation(format!("PTM entry ({i}, {j}) has imaginary part {:.3e}", t.im)));
            }
            let delta = t.re - if i == j { 1.0 } else { 0.0 };
            if delta.abs() >= PRUNE_TOLERANCE {
                entries.push((i, j, delta));
            }
        }
    }
    SparsePtm::from_entries(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m2(a: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
    }

    /// Explicit single-qubit Pauli matrices, written out by hand.
    fn sigma(k: usize) -> DMatrix<Complex64> {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match k {
            0 => m2([[l, o], [o, l]]),
            1 => m2([[o, l], [l, o]]),
            2 => m2([[o, -i], [i, o]]),
            _ => m2([[l, o], [o, -l]]),
        }
    }

    /// Reference evaluation of every entry by explicit 2x2 algebra.
    fn explicit_ptm(kraus: &[DMatrix<Complex64>]) -> [[f64; 4]; 4] {
        let mut r = [[0.0; 4]; 4];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut image = DMatrix::<Complex64>::zeros(2, 2);
                for k in kraus {
                    image += k * sigma(j) * k.adjoint();
                }
                *cell = (sigma(i) * image).trace().re / 2.0;
            }
        }
        r
    }

    fn assert_matches(ptm: &SparsePtm, reference: &[[f64; 4]; 4]) {
        for (i, row) in reference.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((ptm.entry(i, j) - v).abs() < 1e-12, "({i},{j}): {} vs {v}", ptm.entry(i, j));
            }
        }
    }

    #[test]
    fn pauli_matrices_match_hand_written() {
        for k in 0..4 {
            assert_eq!(pauli_matrix(k, 1), sigma(k));
        }
        // "XZ": X on qubit 0 (bit 0), Z on qubit 1 (bit 1)
        let xz = pauli_matrix(1 + 4 * 3, 2);
        let expected = sigma(3).kronecker(&sigma(1));
        assert_eq!(xz, expected);
    }

    #[test]
    fn identity_kraus() {
        let ptm = ptm_from_kraus(1, &[sigma(0)]).unwrap();
        assert!(ptm.is_identity());
    }

    #[test]
    fn depolarizing_kraus() {
        let p: f64 = 0.1;
        let kraus = vec![
            sigma(0) * c((1.0 - 3.0 * p / 4.0).sqrt(), 0.0),
            sigma(1) * c((p / 4.0).sqrt(), 0.0),
            sigma(2) * c((p / 4.0).sqrt(), 0.0),
            sigma(3) * c((p / 4.0).sqrt(), 0.0),
        ];
        let ptm = ptm_from_kraus(1, &kraus).unwrap();
        let reference = explicit_ptm(&kraus);
        assert_matches(&ptm, &reference);
        for (k, row) in reference.iter().enumerate().skip(1) {
            assert!((row[k] - 0.9).abs() < 1e-15);
        }
        assert_eq!(ptm.nnz(), 3);
    }

    #[test]
    fn z_rotation_kraus() {
        let theta: f64 = 0.37;
        let u = m2([
            [Complex64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, theta / 2.0)],
        ]);
        let ptm = ptm_from_kraus(1, std::slice::from_ref(&u)).unwrap();
        assert_matches(&ptm, &explicit_ptm(&[u]));
        let (cs, sn) = (theta.cos(), theta.sin());
        assert!((ptm.entry(1, 1) - cs).abs() < 1e-12);
        assert!((ptm.entry(2, 2) - cs).abs() < 1e-12);
        assert!((ptm.entry(2, 1) - sn).abs() < 1e-12);
        assert!((ptm.entry(1, 2) + sn).abs() < 1e-12);
        assert_eq!(ptm.entry(3, 3), 1.0);
        assert!(ptm.row(3).is_empty());
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let err = ptm_from_kraus(1, &[sigma(0) * c(0.9, 0.0)]).unwrap_err();
        assert!(matches!(err, HpoError::Validation(_)));
        assert!(ptm_from_kraus(1, &[]).is_err());
        assert!(matches!(ptm_from_kraus(2, &[sigma(0)]), Err(HpoError::DimensionMismatch { .. })));
    }
}
