//! Combinatorial sparsity masks over the `4^n x 4^n` PTM grid.
//!
//! The baseline mask keeps entries touching a string of weight at most
//! `w_max` within Hamming distance `d_max`; the residual mask keeps entries
//! touching a full-weight string within Hamming distance `d_max`. Counting is
//! available three ways: closed form (inclusion-exclusion), neighborhood
//! materialization, and an exhaustive scan used as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::error::{HpoError, Result};
use crate::pauli::{basis_size, check_qubits, index_hamming, index_weight, PauliString};
use crate::ptm::TopologyGraph;

/// Largest `n` for which masks are enumerated (`16^6` grid entries).
pub const MAX_ENUMERATION_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MaskKind {
    Baseline { w_max: usize, d_max: usize },
    Residual { w_exact: usize, d_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub n: usize,
    #[serde(flatten)]
    pub kind: MaskKind,
}

impl MaskSpec {
    pub fn baseline(n: usize) -> Self {
        Self { n, kind: MaskKind::Baseline { w_max: 2, d_max: 2 } }
    }

    pub fn residual(n: usize) -> Self {
        Self { n, kind: MaskKind::Residual { w_exact: n, d_max: 2 } }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MaskKind::Baseline { .. } => "baseline",
            MaskKind::Residual { .. } => "residual",
        }
    }

    /// Mask predicate on packed indices.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (wi, wj) = (index_weight(i), index_weight(j));
        match self.kind {
            MaskKind::Baseline { w_max, d_max } => (wi <= w_max || wj <= w_max) && index_hamming(i, j) <= d_max,
            MaskKind::Residual { w_exact, d_max } => (wi == w_exact || wj == w_exact) && index_hamming(i, j) <= d_max,
        }
    }

    fn check_enumerable(&self, what: &'static str) -> Result<()> {
        check_qubits(self.n)?;
        if self.n > MAX_ENUMERATION_QUBITS {
            return Err(HpoError::Capacity {
                what,
                n: self.n,
                limit: MAX_ENUMERATION_QUBITS,
                hint: "use the closed-form counts instead",
            });
        }
        Ok(())
    }
}

/// Materialized mask: sorted, duplicate-free `(row, col)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl MaskSet {
    /// Builds a mask from arbitrary pairs, sorting and deduplicating them.
    pub fn from_pairs(n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        check_qubits(n)?;
        let size = basis_size(n);
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= size || j >= size) {
            return Err(HpoError::InvalidInput(format!("pair ({i}, {j}) out of range for {n} qubits")));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self { n, pairs })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.position(i, j).is_some()
    }

    /// Position of `(i, j)` in the sorted pair list.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i, j)).ok()
    }

    /// Same mask with every row-0 pair removed (row 0 is fixed by trace preservation).
    pub fn without_row_zero(&self) -> MaskSet {
        MaskSet { n: self.n, pairs: self.pairs.iter().copied().filter(|&(i, _)| i != 0).collect() }
    }
}

/// Every string within Hamming distance `d_max` of `center` (including itself).
fn neighborhood(center: usize, n: usize, d_max: usize, out: &mut Vec<usize>) {
    fn recurse(current: usize, start: usize, left: usize, n: usize, out: &mut Vec<usize>) {
        out.push(current);
        if left == 0 {
            return;
        }
        for q in start..n {
            let shift = 2 * q;
            let own = (current >> shift) & 3;
            for d in 0..4 {
                if d != own {
                    let next = (current & !(3 << shift)) | (d << shift);
                    recurse(next, q + 1, left - 1, n, out);
                }
            }
        }
    }
    recurse(center, 0, d_max.min(n), n, out);
}

/// Exact set of index pairs where the mask value is 1.
///
/// Instead of scanning the full grid, this seeds from the strings that can
/// satisfy the weight condition and walks their Hamming neighborhoods.
pub fn materialize(spec: &MaskSpec) -> Result<MaskSet> {
    spec.check_enumerable("mask materialization")?;
    let n = spec.n;
    let (seed_ok, d_max): (Box<dyn Fn(usize) -> bool>, usize) = match spec.kind {
        MaskKind::Baseline { w_max, d_max } => (Box::new(move |s| index_weight(s) <= w_max), d_max),
        MaskKind::Residual { w_exact, d_max } => (Box::new(move |s| index_weight(s) == w_exact), d_max),
    };
    let mut pairs = Vec::new();
    let mut hood = Vec::new();
    for s in (0..basis_size(n)).filter(|&s| seed_ok(s)) {
        hood.clear();
        neighborhood(s, n, d_max, &mut hood);
        for &t in &hood {
            pairs.push((s, t));
            pairs.push((t, s));
        }
    }
    MaskSet::from_pairs(n, pairs)
}

/// Counts mask entries by evaluating the predicate letter-by-letter over all
/// `16^n` pairs. Deliberately shares no code with the packed-index helpers.
pub fn brute_force_count(spec: &MaskSpec) -> Result<u64> {
    spec.check_enumerable("brute-force counting")?;
    let n = spec.n;
    let strings: Vec<Vec<char>> = (0..basis_size(n))
        .map(|k| PauliString::decode(k, n).map(|p| p.to_string().chars().collect()))
        .collect::<Result<_>>()?;
    let weights: Vec<usize> = strings.iter().map(|s| s.iter().filter(|&&c| c != 'I').count()).collect();
    let weight_ok = |w: usize| match spec.kind {
        MaskKind::Baseline { w_max, .. } => w <= w_max,
        MaskKind::Residual { w_exact, .. } => w == w_exact,
    };
    let d_max = match spec.kind {
        MaskKind::Baseline { d_max, .. } | MaskKind::Residual { d_max, .. } => d_max,
    };
    let mut count = 0u64;
    for (a, sa) in strings.iter().enumerate() {
        let a_ok = weight_ok(weights[a]);
        for (b, sb) in strings.iter().enumerate() {
            if !(a_ok || weight_ok(weights[b])) {
                continue;
            }
            let dist = sa.iter().zip(sb).filter(|(x, y)| x != y).count();
            if dist <= d_max {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Counts mask entries without enumerating pairs: a dynamic program over
/// qubit positions tracking (row weight, column weight, distance). Valid up
/// to the full 12-qubit index range.
pub fn count_by_letters(spec: &MaskSpec) -> Result<u64> {
    check_qubits(spec.n)?;
    let n = spec.n;
    let d_max = match spec.kind {
        MaskKind::Baseline { d_max, .. } | MaskKind::Residual { d_max, .. } => d_max,
    };
    let d_cap = d_max + 1;
    let idx = |wa: usize, wb: usize, d: usize| (wa * (n + 1) + wb) * (d_cap + 1) + d;
    let mut table = vec![0u64; (n + 1) * (n + 1) * (d_cap + 1)];
    table[idx(0, 0, 0)] = 1;
    // (row letter non-I, column letter non-I, differs, multiplicity)
    const CLASSES: [(usize, usize, usize, u64); 5] =
        [(0, 0, 0, 1), (0, 1, 1, 3), (1, 0, 1, 3), (1, 1, 0, 3), (1, 1, 1, 6)];
    for pos in 0..n {
        let mut next = vec![0u64; table.len()];
        for wa in 0..=pos {
            for wb in 0..=pos {
                for d in 0..=d_cap {
                    let c = table[idx(wa, wb, d)];
                    if c == 0 {
                        continue;
                    }
                    for &(da, db, dd, mult) in &CLASSES {
                        next[idx(wa + da, wb + db, (d + dd).min(d_cap))] += c * mult;
                    }
                }
            }
        }
        table = next;
    }
    let weight_ok = |w: usize| match spec.kind {
        MaskKind::Baseline { w_max, .. } => w <= w_max,
        MaskKind::Residual { w_exact, .. } => w == w_exact,
    };
    let mut total = 0u64;
    for wa in 0..=n {
        for wb in 0..=n {
            if weight_ok(wa) || weight_ok(wb) {
                total += (0..=d_max.min(d_cap)).map(|d| table[idx(wa, wb, d)]).sum::<u64>();
            }
        }
    }
    Ok(total)
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// `|A|`: pairs whose row string has full weight and whose column is within distance 2.
pub fn count_a(n: usize) -> u64 {
    let n = n as u64;
    3u64.pow(n as u32) * (1 + 3 * n + 9 * choose2(n))
}

/// `|A ∩ B|`: both strings have full weight and are within distance 2.
pub fn count_intersection(n: usize) -> u64 {
    let n = n as u64;
    3u64.pow(n as u32) * (1 + 2 * n + 4 * choose2(n))
}

/// Active residual parameter count, `3^n (1 + 4n + 14 C(n,2))`.
pub fn k_res_closed_form(n: usize) -> u64 {
    let m = n as u64;
    3u64.pow(m as u32) * (1 + 4 * m + 14 * choose2(m))
}

/// Full PTM entry count, `16^n`.
pub fn full_parameter_count(n: usize) -> u64 {
    16u64.pow(n as u32)
}

/// Active parameters of the stage that is optimized at size `n`: the full
/// 2-qubit baseline at `n = 2`, the residual mask above it.
pub fn active_parameter_count(n: usize) -> u64 {
    if n <= 2 {
        full_parameter_count(n)
    } else {
        k_res_closed_form(n)
    }
}

/// `1 - active / 16^n`; zero at `n = 2` where the baseline stage is the active stage.
pub fn compression_rate(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(HpoError::InvalidInput(format!("compression rate needs n >= 2, got {n}")));
    }
    Ok(1.0 - active_parameter_count(n) as f64 / full_parameter_count(n) as f64)
}

/// Upper bound on baseline parameters, 256 per coupling edge.
pub fn base_complexity(graph: &TopologyGraph) -> u64 {
    256 * graph.edges().len() as u64
}
