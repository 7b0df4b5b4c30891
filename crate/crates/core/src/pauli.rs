//! Pauli strings as basis labels.
//!
//! An `n`-qubit Pauli string is a word over `{I, X, Y, Z}`. Its canonical
//! index is the base-4 number whose digit `k` is the letter on qubit `k`
//! (`I = 0, X = 1, Y = 2, Z = 3`), so qubit 0 is the least-significant digit.
//! Text form lists qubit 0 first: `"XI"` has `X` on qubit 0 and index 1.
//!
//! Each base-4 digit occupies two bits of the index, which lets weight and
//! Hamming distance be computed with a couple of bit operations.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, HpoError, Result};

/// Largest supported string length.
pub const MAX_QUBITS: usize = 12;

const LOW_BITS: u64 = 0x5555_5555_5555_5555;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn from_digit(d: usize) -> PauliLetter {
        Self::ALL[d & 3]
    }

    pub fn from_char(c: char) -> Result<PauliLetter> {
        match c {
            'I' => Ok(PauliLetter::I),
            'X' => Ok(PauliLetter::X),
            'Y' => Ok(PauliLetter::Y),
            'Z' => Ok(PauliLetter::Z),
            other => Err(invalid(format!("'{other}' is not a Pauli letter (expected I, X, Y or Z)"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// Number of non-identity digits in a base-4 packed index.
#[inline]
pub fn index_weight(index: usize) -> usize {
    let i = index as u64;
    ((i | (i >> 1)) & LOW_BITS).count_ones() as usize
}

/// Number of qubits on which two packed indices carry different letters.
#[inline]
pub fn index_hamming(a: usize, b: usize) -> usize {
    index_weight(a ^ b)
}

/// Letter (as a digit) on `qubit` of a packed index.
#[inline]
pub fn digit_at(index: usize, qubit: usize) -> usize {
    (index >> (2 * qubit)) & 3
}

/// `4^n`, the Pauli basis size.
#[inline]
pub fn basis_size(n: usize) -> usize {
    1usize << (2 * n)
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    index: usize,
}

impl PauliString {
    pub fn from_letters(letters: &[PauliLetter]) -> Result<Self> {
        check_qubits(letters.len())?;
        let index = letters.iter().enumerate().fold(0usize, |acc, (k, l)| acc | (l.digit() << (2 * k)));
        Ok(Self { n: letters.len(), index })
    }

    /// Inverse of [`PauliString::index`].
    pub fn decode(index: usize, n: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= basis_size(n) {
            return Err(invalid(format!("index {index} out of range for {n} qubits")));
        }
        Ok(Self { n, index })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        PauliLetter::from_digit(digit_at(self.index, qubit))
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (0..self.n).map(|k| self.letter(k)).collect()
    }

    pub fn weight(&self) -> usize {
        index_weight(self.index)
    }

    pub fn hamming_distance(&self, other: &PauliString) -> Result<usize> {
        if self.n != other.n {
            return Err(HpoError::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(index_hamming(self.index, other.index))
    }
}

impl FromStr for PauliString {
    type Err = HpoError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s.chars().map(PauliLetter::from_char).collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(invalid("empty Pauli string"));
        }
        Self::from_letters(&letters)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n {
            write!(f, "{}", self.letter(k).as_char())?;
        }
        Ok(())
    }
}

/// Index of a Pauli string given as text.
pub fn encode(text: &str) -> Result<usize> {
    text.parse::<PauliString>().map(|p| p.index())
}

pub fn weight(p: &PauliString) -> usize {
    p.weight()
}

pub fn hamming_distance(p: &PauliString, q: &PauliString) -> Result<usize> {
    p.hamming_distance(q)
}

/// All `4^n` strings in ascending index order.
pub fn enumerate_basis(n: usize) -> Result<Vec<PauliString>> {
    check_qubits(n)?;
    Ok((0..basis_size(n)).map(|index| PauliString { n, index }).collect())
}

/// Real Pauli-coefficient vector of a state or observable: entry `j` is
/// `Tr[P_j rho]`, so a normalized state has `coeffs[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliVector {
    n: usize,
    coeffs: Vec<f64>,
}

impl PauliVector {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_qubits(n)?;
        if coeffs.len() != basis_size(n) {
            return Err(HpoError::DimensionMismatch { expected: basis_size(n), found: coeffs.len() });
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coefficient {k} is not finite")));
        }
        Ok(Self { n, coeffs })
    }

    /// The maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut coeffs = vec![0.0; basis_size(n)];
        coeffs[0] = 1.0;
        Self::new(n, coeffs)
    }

    /// `|0...0><0...0|`: every string built from `I` and `Z` has expectation +1.
    pub fn zero_state(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let coeffs = (0..basis_size(n))
            .map(|j| {
                let is_z_type = (0..n).all(|k| matches!(digit_at(j, k), 0 | 3));
                if is_z_type {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(n, coeffs)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}
