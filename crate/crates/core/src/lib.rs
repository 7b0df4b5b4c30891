//! Sparse Pauli noise modeling by hierarchical progressive optimization.
//!
//! A 2-qubit baseline channel is fitted per coupling edge under a Hamming
//! distance mask, lifted onto the device topology and frozen. The remaining
//! full-weight correlations are then fitted inside a combinatorial residual
//! mask with projected Adam. A small phase-estimation benchmark scores how
//! well the learned model mitigates noise compared with a global
//! depolarizing model.
//!
//! Module map:
//!
//! - [`pauli`]: Pauli strings, indexing, weight and Hamming distance.
//! - [`mask`]: baseline and residual masks, closed-form and brute-force counts.
//! - [`ptm`]: sparse PTMs, Kraus conversion, edge lifting, composition.
//! - [`noise`]: synthetic ground-truth channels.
//! - [`hpo`]: probes, loss, gradients, projected Adam, the two-stage fit.
//! - [`qem`]: density matrices, fidelity, mini-QPE circuits, mitigation.
//! - [`io`]: model, topology and trace file formats.

pub mod error;
pub mod hpo;
pub mod io;
pub mod mask;
pub mod noise;
pub mod pauli;
pub mod ptm;
pub mod qem;

pub use error::{HpoError, Result};
