//! Multigraphs with loops and parallel edges.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::{Error, Result};

/// An edge of a multigraph; loops have `tail == head`. The stored
/// (tail, head) order is the edge's designated orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub fn new(tail: usize, head: usize) -> Edge {
        Edge { tail, head }
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    /// Endpoints as an unordered key.
    pub fn key(&self) -> (usize, usize) {
        (self.tail.min(self.head), self.tail.max(self.head))
    }

    /// The endpoint other than `v` (equals `v` for loops).
    pub fn other(&self, v: usize) -> usize {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }
}

/// Multigraph with dense vertex indices `0..n` and edge ids `0..|E|`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl MultiGraph {
    pub fn new(n: usize) -> MultiGraph {
        MultiGraph { n, edges: Vec::new() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<MultiGraph> {
        let mut g = MultiGraph::new(n);
        for &(t, h) in edges {
            g.add_edge(t, h)?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<Edge> {
        self.edges
            .get(e)
            .copied()
            .ok_or(Error::BadEdge { edge: e, edges: self.edges.len() })
    }

    pub fn add_vertex(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn add_edge(&mut self, tail: usize, head: usize) -> Result<usize> {
        for v in [tail, head] {
            if v >= self.n {
                return Err(Error::BadVertex { vertex: v, vertices: self.n });
            }
        }
        self.edges.push(Edge::new(tail, head));
        Ok(self.edges.len() - 1)
    }

    /// Degree of `v`, counting loops twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.tail == v) as usize + (e.head == v) as usize)
            .sum()
    }

    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].tail == v || self.edges[e].head == v)
            .collect()
    }

    pub fn loops_at(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].is_loop() && self.edges[e].tail == v)
            .collect()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|e| e.is_loop())
    }

    /// Number of edges induced by the vertex set `mask` (bit i = vertex i).
    pub fn induced_count(&self, mask: u64) -> usize {
        self.edges
            .iter()
            .filter(|e| mask >> e.tail & 1 == 1 && mask >> e.head & 1 == 1)
            .count()
    }

    /// Edge ids grouped by unordered endpoint pair, loops included.
    pub fn bundles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            map.entry(e.key()).or_default().push(i);
        }
        map
    }

    /// Largest number of parallel non-loop edges between any vertex pair.
    pub fn max_parallel_bundle(&self) -> usize {
        self.bundles()
            .iter()
            .filter(|((a, b), _)| a != b)
            .map(|(_, ids)| ids.len())
            .max()
            .unwrap_or(0)
    }

    /// Connected components as vertex lists (singletons included).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        let mut out = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            comp[start] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Removes vertex `v` and all incident edges; the last vertex takes
    /// index `v`. Returns the edge ids that were removed (in old ids).
    pub fn remove_vertex(&mut self, v: usize) -> Vec<usize> {
        let removed: Vec<usize> = self.incident_edges(v);
        let mut keep = Vec::with_capacity(self.edges.len() - removed.len());
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail != v && e.head != v {
                keep.push(*e);
                let _ = i;
            }
        }
        let last = self.n - 1;
        for e in &mut keep {
            if e.tail == last {
                e.tail = v;
            }
            if e.head == last {
                e.head = v;
            }
        }
        self.edges = keep;
        self.n -= 1;
        removed
    }

    /// Multiset of edge keys; two graphs with equal vertex counts and
    /// equal multisets are identical up to edge reordering.
    pub fn edge_multiset(&self) -> Vec<(usize, usize)> {
        let mut keys: Vec<(usize, usize)> = self.edges.iter().map(|e| e.key()).collect();
        keys.sort_unstable();
        keys
    }

    /// Disjoint union; `other`'s vertices are shifted by `self.n`.
    pub fn disjoint_union(&self, other: &MultiGraph) -> MultiGraph {
        let mut g = self.clone();
        let off = self.n;
        g.n += other.n;
        for e in &other.edges {
            g.edges.push(Edge::new(e.tail + off, e.head + off));
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_and_bundles() {
        let mut g = MultiGraph::new(3);
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 0).unwrap();
        g.add_edge(2, 2).unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(2), 2);
        assert_eq!(g.max_parallel_bundle(), 2);
        assert_eq!(g.loops_at(2), vec![2]);
    }

    #[test]
    fn components_split() {
        let g = MultiGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.components().len(), 2);
        assert!(!g.is_connected());
    }

    #[test]
    fn remove_vertex_swaps_last() {
        let mut g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        g.remove_vertex(0);
        assert_eq!(g.vertex_count(), 2);
        // old vertex 2 now sits at index 0
        assert_eq!(g.edge_multiset(), vec![(0, 1)]);
    }

    #[test]
    fn bad_vertex_rejected() {
        let mut g = MultiGraph::new(1);
        assert!(g.add_edge(0, 1).is_err());
    }
}
