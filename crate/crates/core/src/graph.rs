//! Minimal undirected graph used by the hardness fixtures and the
//! independent-set oracle.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    /// Adjacency bitmask per node.
    adj: Vec<u64>,
}

impl Graph {
    /// Builds a simple undirected graph. Self-loops and out-of-range
    /// endpoints are rejected; duplicate edges collapse.
    pub fn new(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if nodes > 64 {
            return Err(Error::SizeLimit {
                detail: "graph nodes".into(),
                limit: 64,
                requested: nodes as u64,
            });
        }
        let mut adj = vec![0u64; nodes];
        for &(u, v) in edges {
            if u >= nodes || v >= nodes {
                return Err(Error::Domain(format!(
                    "edge ({u},{v}) out of range for {nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Ok(Graph { nodes, adj })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors_mask(&self, u: usize) -> u64 {
        self.adj[u]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.nodes {
            for v in (u + 1)..self.nodes {
                if self.are_adjacent(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}
