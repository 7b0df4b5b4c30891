//! Embedding 2-qubit PTMs into the global register and combining them over a topology.

use std::collections::BTreeMap;

use super::{Coo, Edge, SparsePtm, TopologyGraph};
use crate::error::{invalid, HpoError, Result};
use crate::pauli::basis_size;

/// `Λ_e(R) = R ⊗ I` on the spectators: digit 0 of a 2-qubit index lands on
/// qubit `u`, digit 1 on qubit `v`, and every other qubit carries the same
/// letter in row and column.
pub fn lift_edge(r2: &SparsePtm, edge: Edge, n_global: usize) -> Result<SparsePtm> {
    if r2.num_qubits() != 2 {
        return Err(HpoError::DimensionMismatch { expected: 2, found: r2.num_qubits() });
    }
    let (u, v) = edge;
    if u == v || u >= n_global || v >= n_global {
        return Err(invalid(format!("edge ({u}, {v}) invalid for {n_global} qubits")));
    }
    // identity on the edge qubits leaves a spectator-only index
    let spectators: Vec<usize> = (0..n_global).filter(|&q| q != u && q != v).collect();
    let mut padding = Vec::with_capacity(basis_size(spectators.len().max(1)));
    for s in 0..(1usize << (2 * spectators.len())) {
        let mut idx = 0usize;
        for (k, &q) in spectators.iter().enumerate() {
            idx |= ((s >> (2 * k)) & 3) << (2 * q);
        }
        padding.push(idx);
    }
    let place = |i2: usize| ((i2 & 3) << (2 * u)) | (((i2 >> 2) & 3) << (2 * v));
    let mut entries: Vec<Coo> = Vec::with_capacity(r2.nnz() * padding.len());
    for &(i2, j2, val) in r2.delta() {
        let (gi, gj) = (place(i2), place(j2));
        for &pad in &padding {
            entries.push((gi | pad, gj | pad, val));
        }
    }
    SparsePtm::from_entries(n_global, entries)
}

/// Global base model: lifted edge PTMs multiplied in ascending edge order,
/// `R = Λ_{e_k}(R_k) ··· Λ_{e_1}(R_1)`. For edge-disjoint graphs this is the
/// plain tensor product of the edge blocks.
pub fn compose_global(graph: &TopologyGraph, edge_ptms: &BTreeMap<Edge, SparsePtm>) -> Result<SparsePtm> {
    let n = graph.num_qubits();
    let mut global = SparsePtm::identity(n)?;
    for &edge in graph.edges() {
        let r2 =
            edge_ptms.get(&edge).ok_or_else(|| invalid(format!("no PTM assigned to edge ({}, {})", edge.0, edge.1)))?;
        let lifted = lift_edge(r2, edge, n)?;
        global = lifted.compose(&global)?;
    }
    Ok(global)
}
