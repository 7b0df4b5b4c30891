//! Sparse Pauli transfer matrices stored as `R = I + Δ`.
//!
//! Only the delta is kept, in coordinate form sorted by `(row, col)`. Every
//! constructed matrix is trace preserving: row 0 of the delta is empty.

mod kraus;
mod lift;
mod topology;

pub use kraus::{pauli_matrix, pauli_trace, ptm_from_kraus, PauliOperator, MAX_KRAUS_QUBITS};
pub use lift::{compose_global, lift_edge};
pub use topology::{Edge, TopologyGraph};

use nalgebra::DMatrix;

use crate::error::{invalid, HpoError, Result};
use crate::mask::MaskSet;
use crate::pauli::{basis_size, check_qubits, PauliVector};

/// Largest qubit count for sparse PTM storage.
pub const MAX_PTM_QUBITS: usize = 6;

/// Delta entries this close to zero are dropped.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// One `(row, col, value)` triple.
pub type Coo = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePtm {
    n: usize,
    entries: Vec<Coo>,
    row_ptr: Vec<usize>,
}

fn check_ptm_qubits(n: usize) -> Result<()> {
    check_qubits(n)?;
    if n > MAX_PTM_QUBITS {
        return Err(HpoError::Capacity {
            what: "sparse PTM storage",
            n,
            limit: MAX_PTM_QUBITS,
            hint: "PTMs above this size are not representable",
        });
    }
    Ok(())
}

impl SparsePtm {
    /// The ideal channel: empty delta.
    pub fn identity(n: usize) -> Result<Self> {
        check_ptm_qubits(n)?;
        Ok(Self::from_sorted_unchecked(n, Vec::new()))
    }

    /// Validates and canonicalizes a delta list: sorts it, prunes values below
    /// [`PRUNE_TOLERANCE`], and rejects duplicates, non-finite values and row-0 entries.
    pub fn from_entries(n: usize, mut entries: Vec<Coo>) -> Result<Self> {
        check_ptm_qubits(n)?;
        let size = basis_size(n);
        for &(i, j, v) in &entries {
            if i >= size || j >= size {
                return Err(invalid(format!("entry ({i}, {j}) out of range for {n} qubits")));
            }
            if !v.is_finite() {
                return Err(invalid(format!("entry ({i}, {j}) is not finite")));
            }
        }
        entries.sort_by_key(|c| (c.0, c.1));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid(format!("duplicate coordinate ({}, {})", w[0].0, w[0].1)));
        }
        entries.retain(|e| e.2.abs() >= PRUNE_TOLERANCE);
        if let Some(&(_, j, v)) = entries.first().filter(|e| e.0 == 0) {
            return Err(HpoError::Validation(format!("not trace preserving: row 0 has delta {v:e} at column {j}")));
        }
        Ok(Self::from_sorted_unchecked(n, entries))
    }

    /// Builds from a dense matrix `R` (not `Δ`).
    pub fn from_dense(n: usize, dense: &DMatrix<f64>) -> Result<Self> {
        check_ptm_qubits(n)?;
        let size = basis_size(n);
        if dense.nrows() != size || dense.ncols() != size {
            return Err(HpoError::DimensionMismatch { expected: size, found: dense.nrows() });
        }
        let mut entries = Vec::new();
        for i in 0..size {
            for j in 0..size {
                let delta = dense[(i, j)] - if i == j { 1.0 } else { 0.0 };
                if delta.abs() >= PRUNE_TOLERANCE {
                    entries.push((i, j, delta));
                }
            }
        }
        Self::from_entries(n, entries)
    }

    fn from_sorted_unchecked(n: usize, entries: Vec<Coo>) -> Self {
        let size = basis_size(n);
        let mut row_ptr = vec![0usize; size + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for r in 0..size {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, entries, row_ptr }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Matrix dimension `4^n`.
    pub fn dim(&self) -> usize {
        basis_size(self.n)
    }

    /// Stored delta entries, sorted by `(row, col)`.
    pub fn delta(&self) -> &[Coo] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_identity(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Coo] {
        &self.entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Delta value at `(i, j)`; zero when not stored.
    pub fn delta_at(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        row.binary_search_by(|e| e.1.cmp(&j)).map(|k| row[k].2).unwrap_or(0.0)
    }

    /// Full matrix entry `R_ij = δ_ij + Δ_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.delta_at(i, j) + if i == j { 1.0 } else { 0.0 }
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.row(0).is_empty()
    }

    /// `out = v + Δ v`.
    pub fn apply(&self, v: &PauliVector) -> Result<PauliVector> {
        if v.num_qubits() != self.n {
            return Err(HpoError::DimensionMismatch { expected: self.n, found: v.num_qubits() });
        }
        let x = v.coeffs();
        let mut out = x.to_vec();
        for &(i, j, d) in &self.entries {
            out[i] += d * x[j];
        }
        PauliVector::new(self.n, out)
    }

    /// Row `i` of `R` applied to a sparse input, `Σ_j R_ij x_j`.
    pub fn row_dot_sparse(&self, i: usize, input: &[(usize, f64)]) -> f64 {
        let row = self.row(i);
        input
            .iter()
            .map(|&(j, x)| {
                let identity = if i == j { 1.0 } else { 0.0 };
                let delta = row.binary_search_by(|e| e.1.cmp(&j)).map(|k| row[k].2).unwrap_or(0.0);
                (identity + delta) * x
            })
            .sum()
    }

    /// Matrix product `self · first`: the channel `first` followed by `self`.
    pub fn compose(&self, first: &SparsePtm) -> Result<SparsePtm> {
        if self.n != first.n {
            return Err(HpoError::DimensionMismatch { expected: self.n, found: first.n });
        }
        let size = self.dim();
        let mut acc = vec![0.0f64; size];
        let mut touched = vec![false; size];
        let mut cols: Vec<usize> = Vec::new();
        let mut entries = Vec::new();
        let mark = |j: usize, cols: &mut Vec<usize>, touched: &mut Vec<bool>| {
            if !touched[j] {
                touched[j] = true;
                cols.push(j);
            }
        };
        for i in 0..size {
            // (I + A)(I + B) = I + A + B + AB
            for &(_, j, a) in self.row(i) {
                acc[j] += a;
                mark(j, &mut cols, &mut touched);
            }
            for &(_, j, b) in first.row(i) {
                acc[j] += b;
                mark(j, &mut cols, &mut touched);
            }
            for &(_, k, a) in self.row(i) {
                for &(_, j, b) in first.row(k) {
                    acc[j] += a * b;
                    mark(j, &mut cols, &mut touched);
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if acc[j].abs() >= PRUNE_TOLERANCE {
                    entries.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
                touched[j] = false;
            }
            cols.clear();
        }
        SparsePtm::from_entries(self.n, entries)
    }

    /// Dense `R`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let size = self.dim();
        let mut m = DMatrix::<f64>::identity(size, size);
        for &(i, j, d) in &self.entries {
            m[(i, j)] += d;
        }
        m
    }

    /// Largest absolute entry-wise difference between two PTMs.
    pub fn max_abs_diff(&self, other: &SparsePtm) -> Result<f64> {
        if self.n != other.n {
            return Err(HpoError::DimensionMismatch { expected: self.n, found: other.n });
        }
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut worst = 0.0f64;
        loop {
            let diff = match (a.peek().copied(), b.peek().copied()) {
                (None, None) => break,
                (Some(x), None) => {
                    a.next();
                    x.2
                }
                (None, Some(y)) => {
                    b.next();
                    y.2
                }
                (Some(x), Some(y)) => match (x.0, x.1).cmp(&(y.0, y.1)) {
                    std::cmp::Ordering::Less => {
                        a.next();
                        x.2
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                        y.2
                    }
                    std::cmp::Ordering::Equal => {
                        let d = x.2 - y.2;
                        a.next();
                        b.next();
                        d
                    }
                },
            };
            worst = worst.max(diff.abs());
        }
        Ok(worst)
    }
}

/// Effective model `I + W_frozen + (Δ_res ⊙ M)`.
///
/// Residual coordinates outside `mask` are rejected rather than dropped.
pub fn effective_ptm(frozen: &SparsePtm, residual: &[Coo], mask: &MaskSet) -> Result<SparsePtm> {
    let n = frozen.num_qubits();
    if mask.num_qubits() != n {
        return Err(HpoError::DimensionMismatch { expected: n, found: mask.num_qubits() });
    }
    let mut sorted: Vec<Coo> = residual.to_vec();
    sorted.sort_by_key(|c| (c.0, c.1));
    if let Some(w) = sorted.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(invalid(format!("duplicate residual coordinate ({}, {})", w[0].0, w[0].1)));
    }
    if let Some(&(i, j, _)) = sorted.iter().find(|&&(i, j, _)| !mask.contains(i, j)) {
        return Err(HpoError::ContractViolation(format!("residual coordinate ({i}, {j}) lies outside the mask")));
    }
    let mut merged = Vec::with_capacity(frozen.nnz() + sorted.len());
    let (mut a, mut b) = (frozen.delta().iter().peekable(), sorted.iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&&x), None) => {
                merged.push(x);
                a.next();
            }
            (None, Some(&&y)) => {
                merged.push(y);
                b.next();
            }
            (Some(&&x), Some(&&y)) => match (x.0, x.1).cmp(&(y.0, y.1)) {
                std::cmp::Ordering::Less => {
                    merged.push(x);
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    merged.push(y);
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    merged.push((x.0, x.1, x.2 + y.2));
                    a.next();
                    b.next();
                }
            },
        }
    }
    SparsePtm::from_entries(n, merged)
}
