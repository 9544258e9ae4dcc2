//! Gain graphs: multigraphs labelled by group elements.
//!
//! Gains are stored for each edge's designated (tail → head) orientation;
//! reading an edge against its orientation yields the inverse, so the
//! reversal condition holds by construction. The other two gain-map
//! conditions — distinct gains across a parallel bundle, no identity
//! loops — are checked by [`GainGraph::validate`].

use nalgebra::DVector;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::prelude::*;
use std::collections::HashMap;

use crate::graph::MultiGraph;
use crate::groups::{GroupElement, SymmetryGroup};
use crate::{Error, Result};

/// Orbit placement: one point of R^d per base vertex.
pub type Placement = Vec<DVector<f64>>;

/// A violated gain-map condition, reported by [`GainGraph::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Condition (ii): two parallel edges carry equal gains in a common
    /// orientation.
    ParallelDuplicate { edges: (usize, usize) },
    /// Condition (iii): a loop carries the identity gain.
    IdentityLoop { edge: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ParallelDuplicate { edges } => write!(
                f,
                "condition (ii): edges {} and {} are parallel with equal gains",
                edges.0, edges.1
            ),
            Violation::IdentityLoop { edge } => {
                write!(f, "condition (iii): loop {edge} has identity gain")
            }
        }
    }
}

/// A multigraph together with a group and one gain per edge.
#[derive(Clone, Debug)]
pub struct GainGraph {
    graph: MultiGraph,
    group: SymmetryGroup,
    gains: Vec<GroupElement>,
}

impl GainGraph {
    pub fn new(
        graph: MultiGraph,
        group: SymmetryGroup,
        gains: Vec<GroupElement>,
    ) -> Result<GainGraph> {
        if gains.len() != graph.edge_count() {
            return Err(Error::InvalidGainMap(format!(
                "{} gains for {} edges",
                gains.len(),
                graph.edge_count()
            )));
        }
        for g in &gains {
            if g.group() != &group {
                return Err(Error::MixedGroups);
            }
        }
        Ok(GainGraph { graph, group, gains })
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn gains(&self) -> &[GroupElement] {
        &self.gains
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    /// Gain of edge `e` read with source `from`; the stored value when
    /// `from` is the designated tail, its inverse otherwise.
    pub fn oriented_gain(&self, e: usize, from: usize) -> GroupElement {
        let edge = self.graph.edges()[e];
        if edge.is_loop() || edge.tail == from {
            self.gains[e].clone()
        } else {
            self.gains[e].inverse()
        }
    }

    /// Checks gain-map conditions (ii) and (iii); condition (i) is
    /// definitional here. Returns every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, ids) in sorted_bundles(&self.graph) {
            let is_loop = key.0 == key.1;
            if is_loop {
                for &e in &ids {
                    if self.gains[e].is_identity() {
                        out.push(Violation::IdentityLoop { edge: e });
                    }
                }
            }
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    let (a, b) = (ids[i], ids[j]);
                    let ga = self.oriented_gain(a, key.0);
                    let gb = self.oriented_gain(b, key.0);
                    if ga == gb {
                        out.push(Violation::ParallelDuplicate { edges: (a, b) });
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Switching at `v` by `y`: gains out of `v` are left-multiplied by
    /// `y`, gains into `v` are right-multiplied by `y⁻¹`, and loop gains
    /// at `v` are conjugated. The covering graph is unchanged up to
    /// relabelling the fiber over `v`.
    pub fn switch(&self, v: usize, y: &GroupElement) -> Result<GainGraph> {
        if y.group() != &self.group {
            return Err(Error::MixedGroups);
        }
        let y_inv = y.inverse();
        let mut gains = self.gains.clone();
        for (i, e) in self.graph.edges().iter().enumerate() {
            if e.is_loop() {
                if e.tail == v {
                    gains[i] = y.compose(&gains[i])?.compose(&y_inv)?;
                }
            } else if e.tail == v {
                gains[i] = y.compose(&gains[i])?;
            } else if e.head == v {
                gains[i] = gains[i].compose(&y_inv)?;
            }
        }
        GainGraph::new(self.graph.clone(), self.group.clone(), gains)
    }

    /// Balance of the subgraph induced by `vertices` (`None` = whole
    /// graph): per component, a spanning-tree potential must make every
    /// remaining edge's gain trivial; loops count as unbalanced walks.
    pub fn is_balanced(&self, vertices: Option<&[usize]>) -> bool {
        let n = self.graph.vertex_count();
        let in_set: Vec<bool> = match vertices {
            None => vec![true; n],
            Some(vs) => {
                let mut m = vec![false; n];
                for &v in vs {
                    m[v] = true;
                }
                m
            }
        };
        let edge_ids: Vec<usize> = (0..self.graph.edge_count())
            .filter(|&e| {
                let edge = self.graph.edges()[e];
                in_set[edge.tail] && in_set[edge.head]
            })
            .collect();
        self.is_balanced_edge_set(&edge_ids)
    }

    /// Balance of an arbitrary edge subset.
    pub fn is_balanced_edge_set(&self, edge_ids: &[usize]) -> bool {
        let n = self.graph.vertex_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &e in edge_ids {
            let edge = self.graph.edges()[e];
            if edge.is_loop() {
                if !self.gains[e].is_identity() {
                    return false;
                }
                continue;
            }
            adj[edge.tail].push(e);
            adj[edge.head].push(e);
        }
        // fiber potential: ψ(w) = ψ(v)·gain(e, v→w) along a BFS tree
        let mut potential: Vec<Option<GroupElement>> = vec![None; n];
        for start in 0..n {
            if potential[start].is_some() || adj[start].is_empty() {
                continue;
            }
            potential[start] = Some(self.group.identity());
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                let psi_v = potential[v].clone().unwrap();
                for &e in &adj[v] {
                    let edge = self.graph.edges()[e];
                    let w = edge.other(v);
                    let step = self.oriented_gain(e, v);
                    let psi_w = psi_v.compose(&step).expect("same group");
                    match &potential[w] {
                        None => {
                            potential[w] = Some(psi_w);
                            queue.push_back(w);
                        }
                        Some(existing) => {
                            if *existing != psi_w {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// The covering graph, one vertex per `(base vertex, group element)`
    /// and one lifted edge per `(base edge, group element)`.
    pub fn covering_graph(&self) -> Result<CoveringGraph> {
        let elements = self.group.enumerate()?;
        let index: HashMap<_, _> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.form().clone(), i))
            .collect();
        let m = elements.len();
        let n = self.graph.vertex_count();
        let mut cover = MultiGraph::new(n * m);
        for (e, edge) in self.graph.edges().iter().enumerate() {
            let g = &self.gains[e];
            for (a, alpha) in elements.iter().enumerate() {
                let beta = alpha.compose(g)?;
                let b = index[beta.form()];
                cover.add_edge(edge.tail * m + a, edge.head * m + b)?;
            }
        }
        Ok(CoveringGraph { graph: cover, base_vertices: n, elements })
    }

    /// Lifts an orbit placement to the symmetric placement of the cover:
    /// `p(v, γ) = γ·p(v)`.
    pub fn lift_placement(&self, p: &Placement) -> Result<Placement> {
        let cover = self.covering_graph()?;
        if p.len() != self.graph.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.vertex_count(),
                got: p.len(),
            });
        }
        let m = cover.elements.len();
        let mut out = Vec::with_capacity(p.len() * m);
        for q in p {
            for gamma in &cover.elements {
                out.push(gamma.rep().apply(q));
            }
        }
        Ok(out)
    }
}

/// Covering graph of a gain graph over a finite group.
#[derive(Clone, Debug)]
pub struct CoveringGraph {
    pub graph: MultiGraph,
    pub base_vertices: usize,
    pub elements: Vec<GroupElement>,
}

impl CoveringGraph {
    pub fn vertex_index(&self, base: usize, element: usize) -> usize {
        base * self.elements.len() + element
    }
}

fn sorted_bundles(graph: &MultiGraph) -> Vec<((usize, usize), Vec<usize>)> {
    let mut bundles: Vec<_> = graph.bundles().into_iter().collect();
    bundles.sort_by_key(|(_, ids)| ids[0]);
    bundles
}

/// One independently-assignable group of edges: a parallel bundle, a set
/// of loops at one vertex, or a single edge.
#[derive(Clone, Debug)]
struct Site {
    /// Edge ids in ascending order.
    edges: Vec<usize>,
    /// True when the site is a set of loops (alphabet excludes identity).
    loops: bool,
    /// For each edge, whether its designated tail is the bundle's
    /// common-orientation source (loops: always true).
    forwards: Vec<bool>,
}

/// The space of all gain maps of a multigraph over a finite group.
///
/// Loops range over `Γ∖{1}`, each parallel bundle over ordered tuples of
/// distinct elements, independent edges over `Γ`; this realizes gain-map
/// conditions (ii) and (iii) by construction. Assignments are indexed
/// deterministically: bundles in order of their first edge id, values in
/// element order, so enumeration order and work partitioning are
/// reproducible.
#[derive(Clone, Debug)]
pub struct GainMapSpace {
    graph: MultiGraph,
    group: SymmetryGroup,
    elements: Vec<GroupElement>,
    /// Index of each element's inverse in `elements`.
    inv_index: Vec<u32>,
    non_identity: Vec<u32>,
    sites: Vec<Site>,
    /// suffix[i] = product over sites i.. of their assignment counts
    suffix: Vec<BigUint>,
    total: BigUint,
}

impl GainMapSpace {
    pub fn new(graph: &MultiGraph, group: &SymmetryGroup) -> Result<GainMapSpace> {
        let elements = group.enumerate()?;
        let index: HashMap<_, _> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.form().clone(), i as u32))
            .collect();
        let inv_index: Vec<u32> =
            elements.iter().map(|e| index[e.inverse().form()]).collect();
        let non_identity: Vec<u32> = (0..elements.len() as u32)
            .filter(|&i| !elements[i as usize].is_identity())
            .collect();
        let mut sites = Vec::new();
        for (key, ids) in sorted_bundles(graph) {
            let loops = key.0 == key.1;
            let forwards = ids
                .iter()
                .map(|&e| loops || graph.edges()[e].tail == key.0)
                .collect();
            sites.push(Site { edges: ids, loops, forwards });
        }
        let mut site_counts = Vec::with_capacity(sites.len());
        for site in &sites {
            let n = if site.loops { non_identity.len() } else { elements.len() };
            let mut c = BigUint::one();
            for j in 0..site.edges.len() {
                if j >= n {
                    c = BigUint::ZERO;
                    break;
                }
                c *= BigUint::from(n - j);
            }
            site_counts.push(c);
        }
        let mut suffix = vec![BigUint::one(); sites.len() + 1];
        for i in (0..sites.len()).rev() {
            suffix[i] = &suffix[i + 1] * &site_counts[i];
        }
        let total = suffix[0].clone();
        Ok(GainMapSpace {
            graph: graph.clone(),
            group: group.clone(),
            elements,
            inv_index,
            non_identity,
            sites,
            suffix,
            total,
        })
    }

    /// Total number of gain maps (the product over sites of falling
    /// factorials).
    pub fn count(&self) -> &BigUint {
        &self.total
    }

    pub fn count_u64(&self) -> Option<u64> {
        self.total.to_u64()
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn inverse_index(&self) -> &[u32] {
        &self.inv_index
    }

    /// Decodes the `index`-th assignment into per-edge element indices
    /// (already flipped to each edge's designated orientation).
    pub fn decode_into(&self, index: &BigUint, out: &mut Vec<u32>) {
        debug_assert!(index < &self.total, "gain-map index out of range");
        out.clear();
        out.resize(self.graph.edge_count(), 0);
        let mut rem = index.clone();
        // most-significant digit first = site with the smallest edge id
        for (i, site) in self.sites.iter().enumerate() {
            let digit = &rem / &self.suffix[i + 1];
            rem %= &self.suffix[i + 1];
            self.assign_site(site, &digit, out);
        }
    }

    fn assign_site(&self, site: &Site, digit: &BigUint, out: &mut [u32]) {
        let mut available: Vec<u32> = if site.loops {
            self.non_identity.clone()
        } else {
            (0..self.elements.len() as u32).collect()
        };
        let s = site.edges.len();
        let n = available.len();
        let mut rem = digit.clone();
        for (j, &e) in site.edges.iter().enumerate() {
            // tuples with the first element fixed: (n-j-1)(n-j-2)…(n-s+1)
            let mut block = BigUint::one();
            for t in (j + 1)..s {
                block *= BigUint::from(n - t);
            }
            let pos = (&rem / &block).to_usize().expect("digit fits");
            rem %= &block;
            let elem_idx = available.remove(pos);
            out[e] = self.orient(site, j, elem_idx);
        }
    }

    fn orient(&self, site: &Site, j: usize, elem_idx: u32) -> u32 {
        if site.forwards[j] {
            elem_idx
        } else {
            self.inv_index[elem_idx as usize]
        }
    }

    /// Draws per-edge element indices uniformly.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        out.resize(self.graph.edge_count(), 0);
        for site in &self.sites {
            let mut available: Vec<u32> = if site.loops {
                self.non_identity.clone()
            } else {
                (0..self.elements.len() as u32).collect()
            };
            for (j, &e) in site.edges.iter().enumerate() {
                let pos = rng.random_range(0..available.len());
                let elem_idx = available.swap_remove(pos);
                out[e] = self.orient(site, j, elem_idx);
            }
        }
    }

    pub fn gain_graph_from_indices(&self, idx: &[u32]) -> GainGraph {
        let gains = idx.iter().map(|&i| self.elements[i as usize].clone()).collect();
        GainGraph::new(self.graph.clone(), self.group.clone(), gains).expect("sized correctly")
    }

    /// Decodes the `index`-th gain map (0-based, lexicographic).
    pub fn unrank(&self, index: &BigUint) -> GainGraph {
        let mut idx = Vec::new();
        self.decode_into(index, &mut idx);
        self.gain_graph_from_indices(&idx)
    }

    /// Draws one gain map uniformly, deterministically in `rng`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> GainGraph {
        let mut idx = Vec::new();
        self.sample_into(rng, &mut idx);
        self.gain_graph_from_indices(&idx)
    }

    /// Iterates every gain map in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = GainGraph> + '_ {
        let total = self.total.clone();
        let mut idx = BigUint::ZERO;
        std::iter::from_fn(move || {
            if idx < total {
                let g = self.unrank(&idx);
                idx += 1u32;
                Some(g)
            } else {
                None
            }
        })
    }
}
