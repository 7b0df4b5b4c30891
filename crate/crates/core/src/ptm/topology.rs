use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pauli::check_qubits;

/// A coupling edge `(u, v)` with `u < v`.
pub type Edge = (usize, usize);

/// Qubit count plus coupling edges, kept in ascending lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology")]
pub struct TopologyGraph {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct RawTopology {
    n: usize,
    edges: Vec<Edge>,
}

impl TryFrom<RawTopology> for TopologyGraph {
    type Error = crate::error::HpoError;

    fn try_from(raw: RawTopology) -> Result<Self> {
        TopologyGraph::new(raw.n, raw.edges)
    }
}

impl TopologyGraph {
    pub fn new(n: usize, mut edges: Vec<Edge>) -> Result<Self> {
        check_qubits(n)?;
        for e in edges.iter_mut() {
            if e.0 == e.1 {
                return Err(invalid(format!("edge ({}, {}) is a self-loop", e.0, e.1)));
            }
            if e.0 >= n || e.1 >= n {
                return Err(invalid(format!("edge ({}, {}) out of range for {n} qubits", e.0, e.1)));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self { n, edges })
    }

    /// Nearest-neighbour line `0-1-...-(n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|k| (k - 1, k)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_edges() {
        assert!(TopologyGraph::new(3, vec![(0, 0)]).is_err());
        assert!(TopologyGraph::new(3, vec![(0, 3)]).is_err());
        assert!(TopologyGraph::new(3, vec![(0, 1), (1, 0)]).is_err());
        let g = TopologyGraph::new(4, vec![(2, 3), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn json_form() {
        let g: TopologyGraph = serde_json::from_str(r#"{"n":5,"edges":[[0,1],[1,2],[2,3],[3,4]]}"#).unwrap();
        assert_eq!(g, TopologyGraph::chain(5).unwrap());
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"n":5,"edges":[[0,1],[1,2],[2,3],[3,4]]}"#);
        assert!(serde_json::from_str::<TopologyGraph>(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
    }
}
