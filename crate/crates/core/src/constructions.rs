//! Extension moves, construction sequences, and constructive gain
//! assignments.
//!
//! The tight graph classes are generated inductively: (2,1)-tight
//! multigraphs from `K₁¹` by 0-, 1- and loop-1-extensions, (2,0)-tight
//! multigraphs from `K₁²` with 2-, loop-2- and loop-0-extensions added.
//! Replaying a reduction sequence while choosing gains step by step
//! yields symmetrically rigid gain assignments; the higher-dimensional
//! assignments instead work through the spanning-tree and map-graph
//! decompositions.

use nalgebra::DVector;
use rand::prelude::*;
use std::collections::{HashMap, HashSet, VecDeque};

use crate::gain::{GainGraph, Placement};
use crate::graph::MultiGraph;
use crate::groups::{GroupDescriptor, GroupElement, SymmetryGroup};
use crate::rigidity::{numerical_rank, orbit_rigidity_matrix};
use crate::sparsity::{
    find_spanning_tight_subgraph, is_tight, map_decomposition, nash_williams_trees, Decomposition,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionKind {
    /// add v₀ with edges to v₁, v₂
    Zero,
    /// remove edge v₁v₂, add v₀ with edges to v₁, v₂, v₃
    One,
    /// add v₀ with a loop and an edge to v₁
    LoopOne,
    /// remove v₁v₂ and v₃v₄, add v₀ with edges to v₁…v₄
    Two,
    /// remove v₁v₂, add v₀ with edges to v₁, v₂ and a loop
    LoopTwo,
    /// add an isolated v₀ with two loops
    LoopZero,
}

impl ExtensionKind {
    pub fn attach_arity(&self) -> usize {
        match self {
            ExtensionKind::Zero => 2,
            ExtensionKind::One => 3,
            ExtensionKind::LoopOne => 1,
            ExtensionKind::Two => 4,
            ExtensionKind::LoopTwo => 2,
            ExtensionKind::LoopZero => 0,
        }
    }

    pub fn removed_arity(&self) -> usize {
        match self {
            ExtensionKind::One => 1,
            ExtensionKind::Two => 2,
            ExtensionKind::LoopTwo => 1,
            _ => 0,
        }
    }

    /// Number of new edges, in the order they are appended: the edges
    /// to the attachment vertices first, loops last.
    pub fn new_edge_count(&self) -> usize {
        match self {
            ExtensionKind::Zero => 2,
            ExtensionKind::One => 3,
            ExtensionKind::LoopOne => 2,
            ExtensionKind::Two => 4,
            ExtensionKind::LoopTwo => 3,
            ExtensionKind::LoopZero => 2,
        }
    }
}

/// One extension step; vertices and edge ids refer to the graph the
/// step is applied to, the new vertex is appended at the end.
#[derive(Clone, Debug)]
pub struct ExtensionStep {
    pub kind: ExtensionKind,
    pub attach: Vec<usize>,
    pub removed: Vec<usize>,
    /// Gains for the new edges (same order as `new_edge_count`).
    pub gains: Option<Vec<GroupElement>>,
}

impl ExtensionStep {
    pub fn new(kind: ExtensionKind, attach: Vec<usize>, removed: Vec<usize>) -> ExtensionStep {
        ExtensionStep { kind, attach, removed, gains: None }
    }

    pub fn with_gains(mut self, gains: Vec<GroupElement>) -> ExtensionStep {
        self.gains = Some(gains);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseGraph {
    K11,
    K12,
}

impl BaseGraph {
    pub fn multigraph(&self) -> MultiGraph {
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        if matches!(self, BaseGraph::K12) {
            g.add_edge(0, 0).unwrap();
        }
        g
    }
}

/// An ordered list of extension steps from a base graph; replaying it
/// reproduces the target up to the recorded vertex relabelling.
#[derive(Clone, Debug)]
pub struct ConstructionSequence {
    pub base: BaseGraph,
    pub steps: Vec<ExtensionStep>,
    /// replay vertex index → target-graph vertex index
    pub relabel: Vec<usize>,
}

fn check_attach(step: &ExtensionStep, n: usize) -> Result<()> {
    if step.attach.len() != step.kind.attach_arity() {
        return Err(Error::InvalidStep(format!(
            "{:?} takes {} attachment vertices, got {}",
            step.kind,
            step.kind.attach_arity(),
            step.attach.len()
        )));
    }
    if step.removed.len() != step.kind.removed_arity() {
        return Err(Error::InvalidStep(format!(
            "{:?} removes {} edges, got {}",
            step.kind,
            step.kind.removed_arity(),
            step.removed.len()
        )));
    }
    for &v in &step.attach {
        if v >= n {
            return Err(Error::BadVertex { vertex: v, vertices: n });
        }
    }
    Ok(())
}

fn check_removed_matches(graph: &MultiGraph, step: &ExtensionStep) -> Result<()> {
    let pairs: Vec<(usize, usize)> = match step.kind {
        ExtensionKind::One => vec![(step.attach[0], step.attach[1])],
        ExtensionKind::Two => vec![
            (step.attach[0], step.attach[1]),
            (step.attach[2], step.attach[3]),
        ],
        ExtensionKind::LoopTwo => vec![(step.attach[0], step.attach[1])],
        _ => vec![],
    };
    if step.kind == ExtensionKind::Two && step.removed[0] == step.removed[1] {
        return Err(Error::InvalidStep("a 2-extension removes two distinct edges".into()));
    }
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let e = graph.edge(step.removed[i])?;
        let want = (a.min(b), a.max(b));
        if e.key() != want {
            return Err(Error::InvalidStep(format!(
                "removed edge {} joins {:?}, expected {:?}",
                step.removed[i],
                e.key(),
                want
            )));
        }
    }
    Ok(())
}

/// New edges in append order: attachment edges (v₀ → vᵢ), then loops.
fn new_edges(step: &ExtensionStep, v0: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = step.attach.iter().map(|&v| (v0, v)).collect();
    match step.kind {
        ExtensionKind::LoopOne | ExtensionKind::LoopTwo => out.push((v0, v0)),
        ExtensionKind::LoopZero => {
            out.push((v0, v0));
            out.push((v0, v0));
        }
        _ => {}
    }
    out
}

/// Applies an (ungained) extension; the new vertex takes index `n` and
/// new edges are appended after the surviving ones.
pub fn apply_extension(graph: &MultiGraph, step: &ExtensionStep) -> Result<MultiGraph> {
    check_attach(step, graph.vertex_count())?;
    check_removed_matches(graph, step)?;
    let mut g = MultiGraph::new(graph.vertex_count() + 1);
    for (e, edge) in graph.edges().iter().enumerate() {
        if !step.removed.contains(&e) {
            g.add_edge(edge.tail, edge.head)?;
        }
    }
    let v0 = graph.vertex_count();
    for (t, h) in new_edges(step, v0) {
        g.add_edge(t, h)?;
    }
    Ok(g)
}

/// Applies a gained extension, enforcing the lift-consistency
/// constraints: a pair of new edges replacing a removed edge must carry
/// the removed gain as the walk v_tail → v₀ → v_head, loops must be
/// non-trivial, and a gained loop-0-extension needs a dihedral pair.
pub fn apply_gained_extension(gg: &GainGraph, step: &ExtensionStep) -> Result<GainGraph> {
    let gains = step
        .gains
        .as_ref()
        .ok_or_else(|| Error::InvalidStep("gained extension without gains".into()))?;
    if gains.len() != step.kind.new_edge_count() {
        return Err(Error::InvalidStep(format!(
            "{:?} adds {} edges, got {} gains",
            step.kind,
            step.kind.new_edge_count(),
            gains.len()
        )));
    }
    for g in gains {
        if g.group() != gg.group() {
            return Err(Error::MixedGroups);
        }
    }
    check_attach(step, gg.graph().vertex_count())?;
    check_removed_matches(gg.graph(), step)?;

    // composition constraints per replaced edge
    let check_pair = |i: usize, j: usize, removed: usize| -> Result<()> {
        let (vi, vj) = (step.attach[i], step.attach[j]);
        let gamma = gg.oriented_gain(removed, vi);
        let walk = gains[i].inverse().compose(&gains[j])?;
        let ok = if vi == vj {
            walk == gamma || walk == gamma.inverse()
        } else {
            walk == gamma
        };
        if !ok {
            return Err(Error::InvalidStep(format!(
                "gain constraint violated: walk v{vi} → v0 → v{vj} must carry the removed gain"
            )));
        }
        Ok(())
    };
    match step.kind {
        ExtensionKind::One => check_pair(0, 1, step.removed[0])?,
        ExtensionKind::Two => {
            check_pair(0, 1, step.removed[0])?;
            check_pair(2, 3, step.removed[1])?;
        }
        ExtensionKind::LoopTwo => check_pair(0, 1, step.removed[0])?,
        _ => {}
    }
    match step.kind {
        ExtensionKind::LoopOne | ExtensionKind::LoopTwo => {
            if gains.last().unwrap().is_identity() {
                return Err(Error::InvalidStep("new loop carries the identity".into()));
            }
        }
        ExtensionKind::LoopZero
            if !generates_dihedral(&gains[0], &gains[1]) => {
                return Err(Error::InvalidStep(
                    "loop-0-extension gains must generate a dihedral group".into(),
                ));
            }
        _ => {}
    }

    let graph = apply_extension(gg.graph(), step)?;
    let mut new_gains: Vec<GroupElement> = Vec::with_capacity(graph.edge_count());
    for (e, g) in gg.gains().iter().enumerate() {
        if !step.removed.contains(&e) {
            new_gains.push(g.clone());
        }
    }
    new_gains.extend(gains.iter().cloned());
    let out = GainGraph::new(graph, gg.group().clone(), new_gains)?;
    let violations = out.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidStep(format!(
            "resulting gain map invalid: {}",
            violations[0]
        )));
    }
    Ok(out)
}

/// Two elements generate a dihedral group iff both are non-trivial,
/// distinct, and at least one reverses orientation.
pub fn generates_dihedral(a: &GroupElement, b: &GroupElement) -> bool {
    !a.is_identity()
        && !b.is_identity()
        && a != b
        && (a.is_orientation_reversing() || b.is_orientation_reversing())
}

/// Deterministic element pool for gain searches: the full enumeration
/// for finite kinds, a product-closure prefix for infinite ones.
pub fn element_pool(group: &SymmetryGroup, want: usize) -> Vec<GroupElement> {
    if let Ok(elements) = group.enumerate() {
        return elements;
    }
    let mut seen = HashSet::new();
    let id = group.identity();
    let mut out = vec![id.clone()];
    seen.insert(id.form().clone());
    let gens = group.generators();
    let mut queue = VecDeque::from([id]);
    while let Some(e) = queue.pop_front() {
        if out.len() >= want {
            break;
        }
        for g in &gens {
            for prod in [e.compose(g), e.compose(&g.inverse())] {
                let Ok(prod) = prod else { continue };
                if seen.insert(prod.form().clone()) {
                    out.push(prod.clone());
                    queue.push_back(prod);
                    if out.len() >= want {
                        return out;
                    }
                }
            }
        }
    }
    out
}

/// Gains for a gained 0-extension: `(1, 1)` for distinct endpoints,
/// `(1, γ)` with γ non-trivial for a parallel pair.
pub fn choose_gains_0ext(gg: &GainGraph, v1: usize, v2: usize) -> Result<Vec<GroupElement>> {
    let id = gg.group().identity();
    if v1 != v2 {
        return Ok(vec![id.clone(), id]);
    }
    let pool = element_pool(gg.group(), 4);
    let gamma = pool
        .iter()
        .find(|g| !g.is_identity())
        .ok_or_else(|| Error::NoValidGains("group is trivial".into()))?;
    Ok(vec![id, gamma.clone()])
}

/// Gains for a gained 1-extension replacing `removed` (+ new edges to
/// v₁, v₂, v₃): searches `(η, γ₃)` with `μ₁ = η`, `μ₂ = η·φ(e,v₁,v₂)`.
pub fn choose_gains_1ext(
    gg: &GainGraph,
    v1: usize,
    v2: usize,
    v3: usize,
    removed: usize,
) -> Result<Vec<GroupElement>> {
    let gamma = gg.oriented_gain(removed, v1);
    let pool = element_pool(gg.group(), 8);
    let removed_is_loop = v1 == v2;
    // non-identity third gains first, mirroring the constructive proofs
    let mut third_order: Vec<&GroupElement> = pool.iter().filter(|g| !g.is_identity()).collect();
    third_order.extend(pool.iter().filter(|g| g.is_identity()));
    for eta in &pool {
        let mut mu2s = vec![eta.compose(&gamma)?];
        if removed_is_loop {
            let alt = eta.compose(&gamma.inverse())?;
            if alt != mu2s[0] {
                mu2s.push(alt);
            }
        }
        for mu2 in &mu2s {
            for &mu3 in &third_order {
                let gains = [eta.clone(), mu2.clone(), mu3.clone()];
                if distinct_on_parallel(&[v1, v2, v3], &gains) {
                    return Ok(gains.to_vec());
                }
            }
        }
    }
    Err(Error::NoValidGains(
        "no gain satisfies the 1-extension constraints (group too small)".into(),
    ))
}

/// Gains for a gained loop-1-extension: edge gain 1, loop gain any
/// non-trivial element.
pub fn choose_gains_loop1ext(gg: &GainGraph, _v: usize) -> Result<Vec<GroupElement>> {
    let pool = element_pool(gg.group(), 4);
    let gamma = pool
        .iter()
        .find(|g| !g.is_identity())
        .ok_or_else(|| Error::NoValidGains("group is trivial".into()))?;
    Ok(vec![gg.group().identity(), gamma.clone()])
}

/// Gains for a gained 2-extension replacing two edges; searches the
/// pair `(η, λ)` with `(μ₁, μ₂) = (η, η·γ₁)` and `(μ₃, μ₄) = (λ, λ·γ₂)`
/// over the endpoint-coincidence constraints.
pub fn choose_gains_2ext(
    gg: &GainGraph,
    attach: &[usize; 4],
    removed: &[usize; 2],
) -> Result<Vec<GroupElement>> {
    let gamma1 = gg.oriented_gain(removed[0], attach[0]);
    let gamma2 = gg.oriented_gain(removed[1], attach[2]);
    let pool = element_pool(gg.group(), 8);
    let pair_candidates =
        |gamma: &GroupElement, is_loop: bool| -> Result<Vec<(GroupElement, GroupElement)>> {
            let mut out = Vec::new();
            for eta in &pool {
                let first = eta.compose(gamma)?;
                out.push((eta.clone(), first.clone()));
                if is_loop {
                    let alt = eta.compose(&gamma.inverse())?;
                    if alt != first {
                        out.push((eta.clone(), alt));
                    }
                }
            }
            Ok(out)
        };
    let p1 = pair_candidates(&gamma1, attach[0] == attach[1])?;
    let p2 = pair_candidates(&gamma2, attach[2] == attach[3])?;
    for (m1, m2) in &p1 {
        for (m3, m4) in &p2 {
            let gains = [m1.clone(), m2.clone(), m3.clone(), m4.clone()];
            if distinct_on_parallel(attach, &gains) {
                return Ok(gains.to_vec());
            }
        }
    }
    Err(Error::NoValidGains(
        "no gain satisfies the 2-extension constraints (group too small)".into(),
    ))
}

/// Gains for a gained loop-2-extension: `(η, η·γ)` on the edge pair
/// plus any non-trivial loop gain.
pub fn choose_gains_loop2ext(
    gg: &GainGraph,
    v1: usize,
    v2: usize,
    removed: usize,
) -> Result<Vec<GroupElement>> {
    let gamma = gg.oriented_gain(removed, v1);
    let pool = element_pool(gg.group(), 8);
    let loop_gain = pool
        .iter()
        .find(|g| !g.is_identity())
        .ok_or_else(|| Error::NoValidGains("group is trivial".into()))?;
    for eta in &pool {
        let mut mu2s = vec![eta.compose(&gamma)?];
        if v1 == v2 {
            let alt = eta.compose(&gamma.inverse())?;
            if alt != mu2s[0] {
                mu2s.push(alt);
            }
        }
        for mu2 in &mu2s {
            let gains = [eta.clone(), mu2.clone()];
            if distinct_on_parallel(&[v1, v2], &gains) {
                return Ok(vec![eta.clone(), mu2.clone(), loop_gain.clone()]);
            }
        }
    }
    Err(Error::NoValidGains(
        "no gain satisfies the loop-2-extension constraints".into(),
    ))
}

/// A dihedral-generating pair for the two loops of a loop-0-extension.
pub fn choose_gains_loop0ext(group: &SymmetryGroup) -> Result<Vec<GroupElement>> {
    let pool = element_pool(group, 8);
    for a in &pool {
        for b in &pool {
            if generates_dihedral(a, b) {
                return Ok(vec![a.clone(), b.clone()]);
            }
        }
    }
    Err(Error::NoValidGains(
        "group contains no dihedral-generating pair".into(),
    ))
}

/// Parallel new edges (equal attachment vertices) must carry distinct
/// gains.
fn distinct_on_parallel(attach: &[usize], gains: &[GroupElement]) -> bool {
    for i in 0..attach.len() {
        for j in (i + 1)..attach.len() {
            if attach[i] == attach[j] && gains[i] == gains[j] {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Reduction search
// ---------------------------------------------------------------------------

/// Abstract reduction recorded during the search, in original vertex
/// ids; converted to concrete steps when the sequence is rebuilt.
#[derive(Clone, Debug)]
enum Reduction {
    Zero { v: usize, a: usize, b: usize },
    LoopOne { v: usize, u: usize },
    One { v: usize, x: usize, y: usize, z: usize },
    Two { v: usize, pairs: [usize; 4] },
    LoopTwo { v: usize, p: usize, q: usize },
    LoopZero { v: usize },
}

impl Reduction {
    fn removed_vertex(&self) -> usize {
        match self {
            Reduction::Zero { v, .. }
            | Reduction::LoopOne { v, .. }
            | Reduction::One { v, .. }
            | Reduction::Two { v, .. }
            | Reduction::LoopTwo { v, .. }
            | Reduction::LoopZero { v } => *v,
        }
    }
}

struct ReductionSearch {
    k20: bool,
    max_bundle: usize,
    memo_failed: HashSet<(usize, Vec<(usize, usize)>)>,
}

impl ReductionSearch {
    /// DFS for a reduction sequence to the base; `labels` carries the
    /// original vertex id of each current index. Reductions are pushed
    /// base-first.
    fn run(&mut self, graph: &MultiGraph, labels: &[usize], out: &mut Vec<Reduction>) -> bool {
        let n = graph.vertex_count();
        if n == 1 {
            let loops = graph.loops_at(0).len();
            let want = if self.k20 { 2 } else { 1 };
            return graph.edge_count() == loops && loops == want;
        }
        let key = (n, graph.edge_multiset());
        if self.memo_failed.contains(&key) {
            return false;
        }
        for red in self.candidates(graph, labels) {
            let (next, next_labels) = self.reduce(graph, labels, &red);
            if next.max_parallel_bundle() <= self.max_bundle && self.run(&next, &next_labels, out)
            {
                out.push(red);
                return true;
            }
        }
        self.memo_failed.insert(key);
        false
    }

    fn candidates(&self, graph: &MultiGraph, labels: &[usize]) -> Vec<Reduction> {
        let n = graph.vertex_count();
        let mut out = Vec::new();
        // cheap, always-tight reductions first
        for v in 0..n {
            let loops = graph.loops_at(v).len();
            let deg = graph.degree(v);
            match (deg, loops) {
                (4, 2) if self.k20 && n > 1 => out.push(Reduction::LoopZero { v: labels[v] }),
                (2, 0) => {
                    let nb: Vec<usize> = graph
                        .incident_edges(v)
                        .iter()
                        .map(|&e| graph.edges()[e].other(v))
                        .collect();
                    out.push(Reduction::Zero {
                        v: labels[v],
                        a: labels[nb[0]],
                        b: labels[nb[1]],
                    });
                }
                (3, 1) => {
                    let u = graph
                        .incident_edges(v)
                        .iter()
                        .map(|&e| graph.edges()[e])
                        .find(|e| !e.is_loop())
                        .map(|e| e.other(v))
                        .expect("degree-3 loop vertex has one plain edge");
                    out.push(Reduction::LoopOne { v: labels[v], u: labels[u] });
                }
                _ => {}
            }
        }
        for v in 0..n {
            let inc = graph.incident_edges(v);
            let loops = graph.loops_at(v).len();
            let deg = graph.degree(v);
            if deg == 3 && loops == 0 {
                let nb: Vec<usize> = inc.iter().map(|&e| graph.edges()[e].other(v)).collect();
                // choose which two incident edges merge into the new edge
                for (i, j, t) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
                    out.push(Reduction::One {
                        v: labels[v],
                        x: labels[nb[i]],
                        y: labels[nb[j]],
                        z: labels[nb[t]],
                    });
                }
            }
            if self.k20 && deg == 4 && loops == 1 {
                let nb: Vec<usize> = inc
                    .iter()
                    .map(|&e| graph.edges()[e])
                    .filter(|e| !e.is_loop())
                    .map(|e| e.other(v))
                    .collect();
                out.push(Reduction::LoopTwo {
                    v: labels[v],
                    p: labels[nb[0]],
                    q: labels[nb[1]],
                });
            }
            if self.k20 && deg == 4 && loops == 0 {
                let nb: Vec<usize> = inc.iter().map(|&e| graph.edges()[e].other(v)).collect();
                for (a, b, c, d) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
                    out.push(Reduction::Two {
                        v: labels[v],
                        pairs: [labels[nb[a]], labels[nb[b]], labels[nb[c]], labels[nb[d]]],
                    });
                }
            }
        }
        // keep only reductions whose result stays tight
        out.retain(|red| {
            let (next, _) = self.reduce(graph, labels, red);
            let l = if self.k20 { 0 } else { 1 };
            is_tight(&next, 2, l).unwrap_or(false)
        });
        out
    }

    /// Applies the reduction to the working graph.
    fn reduce(
        &self,
        graph: &MultiGraph,
        labels: &[usize],
        red: &Reduction,
    ) -> (MultiGraph, Vec<usize>) {
        let pos: HashMap<usize, usize> =
            labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let v = pos[&red.removed_vertex()];
        let mut g = graph.clone();
        g.remove_vertex(v);
        let mut new_labels = labels.to_vec();
        new_labels.swap_remove(v);
        let lpos: HashMap<usize, usize> =
            new_labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        match red {
            Reduction::One { x, y, .. } => {
                g.add_edge(lpos[x], lpos[y]).unwrap();
            }
            Reduction::LoopTwo { p, q, .. } => {
                g.add_edge(lpos[p], lpos[q]).unwrap();
            }
            Reduction::Two { pairs, .. } => {
                g.add_edge(lpos[&pairs[0]], lpos[&pairs[1]]).unwrap();
                g.add_edge(lpos[&pairs[2]], lpos[&pairs[3]]).unwrap();
            }
            _ => {}
        }
        (g, new_labels)
    }
}

/// Finds a construction sequence from `K₁¹` for a (2,1)-tight
/// multigraph; with `forbid_triples`, no intermediate graph contains a
/// triple of parallel edges.
pub fn reduction_sequence_21(
    graph: &MultiGraph,
    forbid_triples: bool,
) -> Result<ConstructionSequence> {
    if !is_tight(graph, 2, 1)? {
        return Err(Error::NotTight { k: 2, l: 1 });
    }
    reduction_sequence(graph, false, forbid_triples.then_some(2))
}

/// Finds a construction sequence from `K₁²` for a (2,0)-tight
/// multigraph; with `forbid_quadruples`, no intermediate graph contains
/// a quadruple of parallel edges.
pub fn reduction_sequence_20(
    graph: &MultiGraph,
    forbid_quadruples: bool,
) -> Result<ConstructionSequence> {
    if !is_tight(graph, 2, 0)? {
        return Err(Error::NotTight { k: 2, l: 0 });
    }
    reduction_sequence(graph, true, forbid_quadruples.then_some(3))
}

fn reduction_sequence(
    graph: &MultiGraph,
    k20: bool,
    bundle_cap: Option<usize>,
) -> Result<ConstructionSequence> {
    let max_bundle = bundle_cap.unwrap_or(usize::MAX);
    if graph.max_parallel_bundle() > max_bundle {
        return Err(Error::NoSequence(format!(
            "input contains a bundle of more than {max_bundle} parallel edges"
        )));
    }
    let labels: Vec<usize> = (0..graph.vertex_count()).collect();
    let mut search = ReductionSearch { k20, max_bundle, memo_failed: HashSet::new() };
    let mut reductions = Vec::new();
    if !search.run(graph, &labels, &mut reductions) {
        return Err(Error::NoSequence("reduction search exhausted all branches".into()));
    }
    rebuild_sequence(graph, k20, &reductions)
}

/// Converts abstract reductions into concrete replay steps and checks
/// the result against the target.
fn rebuild_sequence(
    target: &MultiGraph,
    k20: bool,
    reductions: &[Reduction],
) -> Result<ConstructionSequence> {
    let base = if k20 { BaseGraph::K12 } else { BaseGraph::K11 };
    // the surviving original vertex is the one never removed
    let removed: HashSet<usize> = reductions.iter().map(|r| r.removed_vertex()).collect();
    let survivor = (0..target.vertex_count())
        .find(|v| !removed.contains(v))
        .expect("one vertex survives");
    let mut relabel = vec![survivor];
    let mut pos: HashMap<usize, usize> = HashMap::from([(survivor, 0)]);
    let mut current = base.multigraph();
    let mut steps = Vec::new();
    for red in reductions {
        let v0_original = red.removed_vertex();
        let find_edge = |g: &MultiGraph, a: usize, b: usize, skip: &[usize]| -> Option<usize> {
            let key = (a.min(b), a.max(b));
            (0..g.edge_count()).find(|&e| g.edges()[e].key() == key && !skip.contains(&e))
        };
        let lost = || Error::NoSequence("replay lost the reduced edge".into());
        let step = match red {
            Reduction::Zero { a, b, .. } => {
                ExtensionStep::new(ExtensionKind::Zero, vec![pos[a], pos[b]], vec![])
            }
            Reduction::LoopOne { u, .. } => {
                ExtensionStep::new(ExtensionKind::LoopOne, vec![pos[u]], vec![])
            }
            Reduction::One { x, y, z, .. } => {
                let e = find_edge(&current, pos[x], pos[y], &[]).ok_or_else(lost)?;
                ExtensionStep::new(ExtensionKind::One, vec![pos[x], pos[y], pos[z]], vec![e])
            }
            Reduction::LoopTwo { p, q, .. } => {
                let e = find_edge(&current, pos[p], pos[q], &[]).ok_or_else(lost)?;
                ExtensionStep::new(ExtensionKind::LoopTwo, vec![pos[p], pos[q]], vec![e])
            }
            Reduction::Two { pairs, .. } => {
                let e1 = find_edge(&current, pos[&pairs[0]], pos[&pairs[1]], &[])
                    .ok_or_else(lost)?;
                let e2 = find_edge(&current, pos[&pairs[2]], pos[&pairs[3]], &[e1])
                    .ok_or_else(lost)?;
                ExtensionStep::new(
                    ExtensionKind::Two,
                    vec![pos[&pairs[0]], pos[&pairs[1]], pos[&pairs[2]], pos[&pairs[3]]],
                    vec![e1, e2],
                )
            }
            Reduction::LoopZero { .. } => {
                ExtensionStep::new(ExtensionKind::LoopZero, vec![], vec![])
            }
        };
        current = apply_extension(&current, &step)?;
        pos.insert(v0_original, relabel.len());
        relabel.push(v0_original);
        steps.push(step);
    }
    // verify the replay reproduces the target up to the relabelling
    let mut relabelled: Vec<(usize, usize)> = current
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (relabel[e.tail], relabel[e.head]);
            (a.min(b), a.max(b))
        })
        .collect();
    relabelled.sort_unstable();
    if relabelled != target.edge_multiset() {
        return Err(Error::NoSequence(
            "replayed sequence does not reproduce the target".into(),
        ));
    }
    Ok(ConstructionSequence { base, steps, relabel })
}

/// Replays a sequence into a multigraph.
pub fn replay_sequence(seq: &ConstructionSequence) -> Result<MultiGraph> {
    let mut g = seq.base.multigraph();
    for step in &seq.steps {
        g = apply_extension(&g, step)?;
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Constructive gain assignments
// ---------------------------------------------------------------------------

/// Constructs a rigid gain assignment for a 2D point group by replaying
/// a construction sequence with step-by-step gain choices.
///
/// Dispatch: `k(Γ) = 1` takes (2,1)-tight inputs (no triple of parallel
/// edges when |Γ| = 2); `k(Γ) = 0` takes (2,0)-tight inputs (no
/// quadruple when |Γ| = 4). The output is verified rigid.
pub fn assign_rigid_gains_2d(graph: &MultiGraph, group: &SymmetryGroup) -> Result<GainGraph> {
    if group.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: group.dim() });
    }
    let k = group.trivial_flex_dimension();
    let order = group.order();
    if let Some(n) = order {
        let max_bundle = graph.max_parallel_bundle();
        if max_bundle > n {
            return Err(Error::NoValidGains(format!(
                "a bundle of {max_bundle} parallel edges admits no gain map over {n} elements"
            )));
        }
    }
    let seq = match k {
        1 => {
            let forbid = order == Some(2);
            if forbid && graph.max_parallel_bundle() >= 3 {
                return Err(Error::NoValidGains(
                    "no rigid gain map over a 2-element group on a triple of parallel edges"
                        .into(),
                ));
            }
            reduction_sequence_21(graph, forbid)?
        }
        0 => {
            let forbid = order == Some(4);
            if forbid && graph.max_parallel_bundle() >= 4 {
                return Err(Error::NoValidGains(
                    "no rigid gain map over a 4-element group on a quadruple of parallel edges"
                        .into(),
                ));
            }
            reduction_sequence_20(graph, forbid)?
        }
        other => {
            return Err(Error::NoValidGains(format!(
                "2D groups have k(Γ) ∈ {{0,1}}, got {other}"
            )))
        }
    };
    let mut gg = seed_gain_graph(&seq.base, group)?;
    for step in &seq.steps {
        let gains = match step.kind {
            ExtensionKind::Zero => choose_gains_0ext(&gg, step.attach[0], step.attach[1])?,
            ExtensionKind::One => choose_gains_1ext(
                &gg,
                step.attach[0],
                step.attach[1],
                step.attach[2],
                step.removed[0],
            )?,
            ExtensionKind::LoopOne => choose_gains_loop1ext(&gg, step.attach[0])?,
            ExtensionKind::Two => choose_gains_2ext(
                &gg,
                &[step.attach[0], step.attach[1], step.attach[2], step.attach[3]],
                &[step.removed[0], step.removed[1]],
            )?,
            ExtensionKind::LoopTwo => {
                choose_gains_loop2ext(&gg, step.attach[0], step.attach[1], step.removed[0])?
            }
            ExtensionKind::LoopZero => choose_gains_loop0ext(group)?,
        };
        gg = apply_gained_extension(&gg, &step.clone().with_gains(gains))?;
    }
    let report = crate::rigidity::is_symmetrically_rigid(&gg, 3, 0xC0FFEE)?;
    if !report.rigid {
        return Err(Error::VerificationFailed(
            "constructed 2D assignment tested flexible".into(),
        ));
    }
    Ok(gg)
}

fn seed_gain_graph(base: &BaseGraph, group: &SymmetryGroup) -> Result<GainGraph> {
    let graph = base.multigraph();
    let gains = match base {
        BaseGraph::K11 => {
            let pool = element_pool(group, 4);
            let gamma = pool
                .iter()
                .find(|g| !g.is_identity())
                .ok_or_else(|| Error::NoValidGains("group is trivial".into()))?;
            vec![gamma.clone()]
        }
        BaseGraph::K12 => choose_gains_loop0ext(group)?,
    };
    GainGraph::new(graph, group.clone(), gains)
}

/// Gain assignment for a rank-d translation group on a (d,d)-tight
/// multigraph: the edges of the i-th Nash-Williams tree all carry the
/// i-th lattice generator. The orbit matrix at the zero placement has
/// rank d|V| − d.
pub fn assign_gains_periodic(graph: &MultiGraph, group: &SymmetryGroup) -> Result<GainGraph> {
    let d = group.dim();
    if !matches!(group.descriptor(), GroupDescriptor::Translations { basis } if basis.len() == d) {
        return Err(Error::DegenerateParameter(
            "periodic assignment needs a rank-d translation group".into(),
        ));
    }
    let decomp = nash_williams_trees(graph, d)?;
    let mut gains = vec![None; graph.edge_count()];
    for (i, class) in decomp.classes.iter().enumerate() {
        let mut coeffs = vec![0i64; d];
        coeffs[i] = 1;
        let gamma = group.translation(coeffs)?;
        for &e in class {
            gains[e] = Some(gamma.clone());
        }
    }
    let gg = GainGraph::new(
        graph.clone(),
        group.clone(),
        gains.into_iter().map(|g| g.unwrap()).collect(),
    )?;
    let zero = zero_placement(d, graph.vertex_count());
    let m = orbit_rigidity_matrix(&gg, &zero)?;
    if numerical_rank(&m, None) != d * graph.vertex_count() - d {
        return Err(Error::VerificationFailed(
            "periodic assignment misses rank d|V| − d".into(),
        ));
    }
    Ok(gg)
}

fn zero_placement(d: usize, n: usize) -> Placement {
    (0..n).map(|_| DVector::zeros(d)).collect()
}

/// Gain assignment for a translation-point product on a (d,0)-tight
/// multigraph with a spanning (d,d)-tight subgraph: tree gains on the
/// subgraph, then one `γ_{n_i} ∘ μ_i` per leftover edge chosen so the
/// vectors `(I − μ_i^{-1}) x_{n_i}` span R^d.
pub fn assign_gains_trans_point(graph: &MultiGraph, group: &SymmetryGroup) -> Result<GainGraph> {
    let d = group.dim();
    let GroupDescriptor::TransPoint { basis, .. } = group.descriptor() else {
        return Err(Error::DegenerateParameter(
            "assignment needs a translation-point product group".into(),
        ));
    };
    if basis.len() != d {
        return Err(Error::DegenerateParameter("translation part must have rank d".into()));
    }
    let point = group.point_group().expect("trans_point kind").clone();
    // point-group condition: ∩ ker(I − γ) = {0}
    let elements = point.enumerate()?;
    let mut stacked = nalgebra::DMatrix::<f64>::zeros(d * elements.len(), d);
    for (i, g) in elements.iter().enumerate() {
        let lin = g.linear_part();
        for r in 0..d {
            for c in 0..d {
                let delta = if r == c { 1.0 } else { 0.0 };
                stacked[(i * d + r, c)] = delta - lin[(r, c)];
            }
        }
    }
    if numerical_rank(&stacked, None) != d {
        return Err(Error::PointGroupCondition(
            "the point group fixes a non-zero vector".into(),
        ));
    }
    if !is_tight(graph, d, 0)? {
        return Err(Error::NotTight { k: d as i64, l: 0 });
    }
    let spanning = find_spanning_tight_subgraph(graph, d, d as i64)?
        .ok_or_else(|| Error::DecompositionImpossible("no spanning (d,d)-tight subgraph".into()))?;
    let spanning_set: HashSet<usize> = spanning.iter().copied().collect();
    let leftovers: Vec<usize> =
        (0..graph.edge_count()).filter(|e| !spanning_set.contains(e)).collect();
    debug_assert_eq!(leftovers.len(), d);

    // tree gains on the spanning subgraph
    let mut sub = MultiGraph::new(graph.vertex_count());
    for &e in &spanning {
        let edge = graph.edges()[e];
        sub.add_edge(edge.tail, edge.head)?;
    }
    let decomp = nash_williams_trees(&sub, d)?;
    let mut gains: Vec<Option<GroupElement>> = vec![None; graph.edge_count()];
    for (i, class) in decomp.classes.iter().enumerate() {
        let mut coeffs = vec![0i64; d];
        coeffs[i] = 1;
        let gamma = group.translation(coeffs)?;
        for &sub_e in class {
            gains[spanning[sub_e]] = Some(gamma.clone());
        }
    }

    // search (n_i, μ_i) per leftover edge until the stacked vectors
    // (I − μ_i^{-1}) x_{n_i} reach rank d
    let basis_vecs: Vec<DVector<f64>> =
        basis.iter().map(|b| DVector::from_vec(b.clone())).collect();
    let mut choices: Vec<(usize, GroupElement)> = Vec::new();
    if !search_leftover_gains(d, &elements, &basis_vecs, &mut choices) {
        return Err(Error::NoValidGains(
            "no generator/point-element selection spans R^d".into(),
        ));
    }
    for (slot, &e) in leftovers.iter().enumerate() {
        let (n_i, mu) = &choices[slot];
        let mut coeffs = vec![0i64; d];
        coeffs[*n_i] = 1;
        gains[e] = Some(group.trans_point_element(coeffs, mu)?);
    }
    let gg = GainGraph::new(
        graph.clone(),
        group.clone(),
        gains.into_iter().map(|g| g.unwrap()).collect(),
    )?;
    if !gg.is_valid() {
        return Err(Error::VerificationFailed(
            "translation-point assignment violates the gain conditions".into(),
        ));
    }
    let zero = zero_placement(d, graph.vertex_count());
    let m = orbit_rigidity_matrix(&gg, &zero)?;
    if numerical_rank(&m, None) != d * graph.vertex_count() {
        return Err(Error::VerificationFailed(
            "translation-point assignment misses rank d|V|".into(),
        ));
    }
    Ok(gg)
}

fn search_leftover_gains(
    d: usize,
    point_elements: &[GroupElement],
    basis: &[DVector<f64>],
    chosen: &mut Vec<(usize, GroupElement)>,
) -> bool {
    if chosen.len() == d {
        return true; // rank d certified by the partial prune below
    }
    for n_i in 0..d {
        for mu in point_elements {
            chosen.push((n_i, mu.clone()));
            let rows = chosen.len();
            let mut m = nalgebra::DMatrix::<f64>::zeros(rows, d);
            for (row, (n, g)) in chosen.iter().enumerate() {
                let lin_inv = g.inverse().linear_part();
                let v = &basis[*n] - lin_inv * &basis[*n];
                for c in 0..d {
                    m[(row, c)] = v[c];
                }
            }
            if numerical_rank(&m, None) == rows
                && search_leftover_gains(d, point_elements, basis, chosen)
            {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Gain assignment for translations plus the inversion `−I` on a
/// (d,0)-tight multigraph: within the i-th map class, tree edges carry
/// the i-th generator and the designated cycle edge carries
/// `γ_i ∘ (−I)`. The orbit matrix at the zero placement has rank d|V|.
pub fn assign_gains_trans_inversion(
    graph: &MultiGraph,
    group: &SymmetryGroup,
) -> Result<GainGraph> {
    let d = group.dim();
    if !matches!(group.descriptor(), GroupDescriptor::TransInv { basis } if basis.len() == d) {
        return Err(Error::DegenerateParameter(
            "assignment needs a translations-with-inversion group".into(),
        ));
    }
    let decomp = map_decomposition(graph, d)?;
    let mut gains: Vec<Option<GroupElement>> = vec![None; graph.edge_count()];
    for (i, class) in decomp.classes.iter().enumerate() {
        let mut coeffs = vec![0i64; d];
        coeffs[i] = 1;
        let tree_gain = group.translation(coeffs.clone())?;
        let cycle_gain = group.trans_inv_element(coeffs, true)?;
        let designated = designate_cycle_edges(graph, class);
        for &e in class {
            gains[e] = Some(if designated.contains(&e) {
                cycle_gain.clone()
            } else {
                tree_gain.clone()
            });
        }
    }
    let gg = GainGraph::new(
        graph.clone(),
        group.clone(),
        gains.into_iter().map(|g| g.unwrap()).collect(),
    )?;
    let zero = zero_placement(d, graph.vertex_count());
    let m = orbit_rigidity_matrix(&gg, &zero)?;
    if numerical_rank(&m, None) != d * graph.vertex_count() {
        return Err(Error::VerificationFailed(
            "translation-inversion assignment misses rank d|V|".into(),
        ));
    }
    Ok(gg)
}

/// One designated edge on the unique cycle of every component of a
/// (1,0)-tight edge class (the smallest id on each cycle).
fn designate_cycle_edges(graph: &MultiGraph, class: &[usize]) -> HashSet<usize> {
    // peel leaf edges; the survivors are exactly the cycles
    let n = graph.vertex_count();
    let mut alive: HashSet<usize> = class.iter().copied().collect();
    let mut deg = vec![0usize; n];
    for &e in class {
        let edge = graph.edges()[e];
        deg[edge.tail] += 1;
        deg[edge.head] += 1;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for &e in class {
            if !alive.contains(&e) {
                continue;
            }
            let edge = graph.edges()[e];
            if edge.is_loop() {
                continue;
            }
            if deg[edge.tail] == 1 || deg[edge.head] == 1 {
                alive.remove(&e);
                deg[edge.tail] -= 1;
                deg[edge.head] -= 1;
                changed = true;
            }
        }
    }
    // the cycles are vertex-disjoint: pick the smallest edge id per cycle
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut sorted: Vec<usize> = alive.iter().copied().collect();
    sorted.sort_unstable();
    for &e in &sorted {
        let edge = graph.edges()[e];
        let (ra, rb) = (find(&mut parent, edge.tail), find(&mut parent, edge.head));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut designated = HashSet::new();
    let mut taken: HashSet<usize> = HashSet::new();
    for &e in &sorted {
        let edge = graph.edges()[e];
        let root = find(&mut parent, edge.tail);
        if taken.insert(root) {
            designated.insert(e);
        }
    }
    designated
}

/// Gain assignment for a dense (or ε-dense) point group on a
/// (d,0)-tight multigraph, materialized as the finitely generated
/// closure of the rotations `R_k(θ)`, the reflections `S_k(θ)` and the
/// last-axis reflection σ. Returns the assignment with the explicit
/// placement `p(v_i) = (1 + δ(i+1)) f_d`; θ and δ are halved up to 8
/// times if the rank test fails.
pub fn assign_gains_dense(
    graph: &MultiGraph,
    d: usize,
    theta: f64,
    delta: f64,
) -> Result<(GainGraph, Placement)> {
    if theta <= 0.0 || delta <= 0.0 {
        return Err(Error::DegenerateParameter(
            "dense assignment needs θ > 0 and δ > 0".into(),
        ));
    }
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    let decomp = map_decomposition(graph, d)?;
    let n = graph.vertex_count();
    for attempt in 0..=8 {
        let scale = (1u64 << attempt) as f64;
        let (th, de) = (theta / scale, delta / scale);
        let (gg, placement) = dense_candidate(graph, d, th, de, &decomp)?;
        let m = orbit_rigidity_matrix(&gg, &placement)?;
        if numerical_rank(&m, None) == d * n {
            return Ok((gg, placement));
        }
    }
    Err(Error::RankDeficient { retries: 8 })
}

fn dense_candidate(
    graph: &MultiGraph,
    d: usize,
    theta: f64,
    delta: f64,
    decomp: &Decomposition,
) -> Result<(GainGraph, Placement)> {
    use crate::groups::{approx_reflection_rep, approx_rotation_rep, last_axis_reflection_rep};
    let mut reps = Vec::new();
    for k in 1..d {
        reps.push(approx_rotation_rep(d, k, theta));
    }
    for k in 1..d {
        reps.push(approx_reflection_rep(d, k, theta));
    }
    reps.push(last_axis_reflection_rep(d));
    let group = SymmetryGroup::generated(&reps)?;
    let rot: Vec<GroupElement> =
        (0..d - 1).map(|k| group.snapped_element(&reps[k]).unwrap()).collect();
    let refl: Vec<GroupElement> =
        (0..d - 1).map(|k| group.snapped_element(&reps[d - 1 + k]).unwrap()).collect();
    let sigma = group.snapped_element(&reps[2 * (d - 1)])?;
    let identity = group.identity();

    let mut gains: Vec<Option<GroupElement>> = vec![None; graph.edge_count()];
    for (c, class) in decomp.classes.iter().enumerate() {
        let designated = designate_cycle_edges(graph, class);
        let (tree_gain, cycle_gain) = if c + 1 < d {
            (rot[c].clone(), refl[c].clone())
        } else {
            (identity.clone(), sigma.clone())
        };
        for &e in class {
            let base = if designated.contains(&e) { &cycle_gain } else { &tree_gain };
            // gains are defined reading from the lower-indexed vertex
            let edge = graph.edges()[e];
            let value = if edge.tail <= edge.head { base.clone() } else { base.inverse() };
            gains[e] = Some(value);
        }
    }
    let gg = GainGraph::new(
        graph.clone(),
        group,
        gains.into_iter().map(|g| g.unwrap()).collect(),
    )?;
    if !gg.is_valid() {
        return Err(Error::VerificationFailed(
            "dense assignment violates the gain conditions".into(),
        ));
    }
    let placement: Placement = (0..graph.vertex_count())
        .map(|i| {
            let mut p = DVector::zeros(d);
            p[d - 1] = 1.0 + delta * (i + 1) as f64;
            p
        })
        .collect();
    Ok((gg, placement))
}

// ---------------------------------------------------------------------------
// Probability-targeting generators
// ---------------------------------------------------------------------------

/// The simple graph with `0 < P(H, Γ) < 1`: vertices `v_0…v_d` plus one
/// copy `v_{i,γ}` per vertex and group element, carrying the canonical
/// gain map (γ on the `v_{i,1} → v_{j,γ}` edges, identity elsewhere).
pub fn build_gammah(group: &SymmetryGroup, d: usize) -> Result<GainGraph> {
    if group.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: group.dim() });
    }
    let elements = group.enumerate()?;
    let m = elements.len();
    let base = d + 1;
    // vertex layout: v_i at i, v_{i,γ} at base + i·m + idx(γ)
    let copy = |i: usize, g: usize| base + i * m + g;
    let mut graph = MultiGraph::new(base + base * m);
    let mut gains = Vec::new();
    let identity = group.identity();
    let id_idx = 0usize;
    // v_{i,1} v_{j,1} triangle (γ = identity, deduplicated over i < j)
    for i in 0..base {
        for j in (i + 1)..base {
            graph.add_edge(copy(i, id_idx), copy(j, id_idx))?;
            gains.push(identity.clone());
        }
    }
    // v_{i,1} → v_{j,γ} with gain γ for γ ≠ 1
    for i in 0..base {
        for j in 0..base {
            if i == j {
                continue;
            }
            for (g, gamma) in elements.iter().enumerate() {
                if g == id_idx {
                    continue;
                }
                graph.add_edge(copy(i, id_idx), copy(j, g))?;
                gains.push(gamma.clone());
            }
        }
    }
    // v_i v_j triangle
    for i in 0..base {
        for j in (i + 1)..base {
            graph.add_edge(i, j)?;
            gains.push(identity.clone());
        }
    }
    // v_i v_{j,γ} for all γ
    for i in 0..base {
        for j in 0..base {
            if i == j {
                continue;
            }
            for g in 0..m {
                graph.add_edge(i, copy(j, g))?;
                gains.push(identity.clone());
            }
        }
    }
    GainGraph::new(graph, group.clone(), gains)
}

/// Joins two gain graphs over the same group by `k` independent edges
/// with trivial gains (vertex i of each side, i < k).
pub fn join_k_edges(gg1: &GainGraph, gg2: &GainGraph, k: usize) -> Result<GainGraph> {
    if gg1.group() != gg2.group() {
        return Err(Error::MixedGroups);
    }
    let (n1, n2) = (gg1.graph().vertex_count(), gg2.graph().vertex_count());
    if k > n1 || k > n2 {
        return Err(Error::DegenerateParameter(format!(
            "cannot join by {k} independent edges: parts have {n1} and {n2} vertices"
        )));
    }
    let graph = join_multigraphs(gg1.graph(), gg2.graph(), k);
    let mut gains: Vec<GroupElement> = gg1.gains().to_vec();
    gains.extend(gg2.gains().iter().cloned());
    gains.extend(std::iter::repeat_n(gg1.group().identity(), k));
    GainGraph::new(graph, gg1.group().clone(), gains)
}

/// Disjoint union plus a k-edge matching (vertex i ↔ vertex n1+i).
pub fn join_multigraphs(g1: &MultiGraph, g2: &MultiGraph, k: usize) -> MultiGraph {
    let mut g = g1.disjoint_union(g2);
    for i in 0..k {
        g.add_edge(i, g1.vertex_count() + i).unwrap();
    }
    g
}

/// The high-probability construction: `m` copies of `base` plus d hub
/// vertices joined to every base vertex, all copies sharing the hubs.
pub fn build_bigprob(base: &MultiGraph, m: usize, d: usize) -> MultiGraph {
    let dd = base.vertex_count();
    let mut g = MultiGraph::new(d + m * dd);
    for c in 0..m {
        let off = d + c * dd;
        for e in base.edges() {
            g.add_edge(e.tail + off, e.head + off).unwrap();
        }
        for w in 0..d {
            for v in 0..dd {
                g.add_edge(w, off + v).unwrap();
            }
        }
    }
    g
}

/// Chains copies of `base` (with per-copy probability `p_base`) by
/// k(Γ)-edge joins until the product `p_base^m` is as close to `q` as
/// the geometric grid allows; errors when even the best `m` misses `q`
/// by ε or more. Returns the chained multigraph and `m`.
pub fn build_qepsilon(
    group: &SymmetryGroup,
    q: f64,
    epsilon: f64,
    base: &MultiGraph,
    p_base: f64,
) -> Result<(MultiGraph, usize)> {
    if !(0.0 < q && q < 1.0) || epsilon <= 0.0 {
        return Err(Error::DegenerateParameter("need 0 < q < 1 and ε > 0".into()));
    }
    if !(0.0 < p_base && p_base < 1.0) {
        return Err(Error::DegenerateParameter(
            "base probability must lie strictly between 0 and 1".into(),
        ));
    }
    let k = group.trivial_flex_dimension();
    let d = group.dim();
    if base.vertex_count() < (d + 1).max(k) {
        return Err(Error::DegenerateParameter(format!(
            "base graph needs at least {} vertices",
            (d + 1).max(k)
        )));
    }
    let mut best = (1usize, (p_base - q).abs());
    let mut m = 1usize;
    let mut p = p_base;
    while p > q && m < 100_000 {
        m += 1;
        p *= p_base;
        let err = (p - q).abs();
        if err < best.1 {
            best = (m, err);
        }
    }
    if best.1 >= epsilon {
        return Err(Error::DegenerateParameter(format!(
            "closest power p^{} misses q by {:.4} ≥ ε",
            best.0, best.1
        )));
    }
    let copies = best.0;
    let mut g = base.clone();
    for c in 1..copies {
        let off = (c - 1) * base.vertex_count();
        g = g.disjoint_union(base);
        for i in 0..k {
            g.add_edge(off + i, off + base.vertex_count() + i).unwrap();
        }
    }
    Ok((g, copies))
}

/// Default base graph for the probability-chaining generator in the
/// plane: the complete graph on 5 vertices minus one edge.
pub fn qepsilon_default_base() -> MultiGraph {
    MultiGraph::from_edges(
        5,
        &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Random tight-graph generators (extension walks)
// ---------------------------------------------------------------------------

/// Random (2,1)-tight multigraph on `n` vertices via a random
/// extension walk from K₁¹, keeping parallel bundles within
/// `max_bundle`.
pub fn random_tight_21<R: Rng>(rng: &mut R, n: usize, max_bundle: usize) -> MultiGraph {
    let mut g = BaseGraph::K11.multigraph();
    while g.vertex_count() < n {
        let next = random_extension_21(rng, &g);
        if next.max_parallel_bundle() <= max_bundle {
            g = next;
        }
    }
    g
}

fn random_extension_21<R: Rng>(rng: &mut R, g: &MultiGraph) -> MultiGraph {
    let n = g.vertex_count();
    loop {
        let step = match rng.random_range(0..3) {
            0 => ExtensionStep::new(
                ExtensionKind::Zero,
                vec![rng.random_range(0..n), rng.random_range(0..n)],
                vec![],
            ),
            1 => {
                let e = rng.random_range(0..g.edge_count());
                let edge = g.edges()[e];
                ExtensionStep::new(
                    ExtensionKind::One,
                    vec![edge.tail, edge.head, rng.random_range(0..n)],
                    vec![e],
                )
            }
            _ => ExtensionStep::new(ExtensionKind::LoopOne, vec![rng.random_range(0..n)], vec![]),
        };
        if let Ok(next) = apply_extension(g, &step) {
            return next;
        }
    }
}

/// Random (2,0)-tight multigraph on `n` vertices via a random
/// extension walk from K₁².
pub fn random_tight_20<R: Rng>(rng: &mut R, n: usize, max_bundle: usize) -> MultiGraph {
    let mut g = BaseGraph::K12.multigraph();
    while g.vertex_count() < n {
        let next = random_extension_20(rng, &g);
        if next.max_parallel_bundle() <= max_bundle {
            g = next;
        }
    }
    g
}

fn random_extension_20<R: Rng>(rng: &mut R, g: &MultiGraph) -> MultiGraph {
    let n = g.vertex_count();
    loop {
        let step = match rng.random_range(0..6) {
            0 => ExtensionStep::new(
                ExtensionKind::Zero,
                vec![rng.random_range(0..n), rng.random_range(0..n)],
                vec![],
            ),
            1 => {
                let e = rng.random_range(0..g.edge_count());
                let edge = g.edges()[e];
                ExtensionStep::new(
                    ExtensionKind::One,
                    vec![edge.tail, edge.head, rng.random_range(0..n)],
                    vec![e],
                )
            }
            2 => ExtensionStep::new(ExtensionKind::LoopOne, vec![rng.random_range(0..n)], vec![]),
            3 => {
                let e1 = rng.random_range(0..g.edge_count());
                let e2 = rng.random_range(0..g.edge_count());
                if e1 == e2 {
                    continue;
                }
                let (a, b) = (g.edges()[e1], g.edges()[e2]);
                ExtensionStep::new(
                    ExtensionKind::Two,
                    vec![a.tail, a.head, b.tail, b.head],
                    vec![e1, e2],
                )
            }
            4 => {
                let e = rng.random_range(0..g.edge_count());
                let edge = g.edges()[e];
                ExtensionStep::new(ExtensionKind::LoopTwo, vec![edge.tail, edge.head], vec![e])
            }
            _ => ExtensionStep::new(ExtensionKind::LoopZero, vec![], vec![]),
        };
        if let Ok(next) = apply_extension(g, &step) {
            return next;
        }
    }
}

/// Random (d,d)-tight multigraph: the union of d random spanning trees.
pub fn random_dd_tight<R: Rng>(rng: &mut R, n: usize, d: usize) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    for _ in 0..d {
        for v in 1..n {
            let u = rng.random_range(0..v);
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

/// Random (d,0)-tight multigraph: d out-edges per vertex with random
/// targets (loops allowed).
pub fn random_d0_tight<R: Rng>(rng: &mut R, n: usize, d: usize) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    for v in 0..n {
        for _ in 0..d {
            g.add_edge(v, rng.random_range(0..n)).unwrap();
        }
    }
    g
}

/// Random (d,0)-tight multigraph containing a spanning (d,d)-tight
/// subgraph: d random spanning trees plus d extra random edges.
pub fn random_d0_with_spanning_dd<R: Rng>(rng: &mut R, n: usize, d: usize) -> MultiGraph {
    let mut g = random_dd_tight(rng, n, d);
    for _ in 0..d {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        g.add_edge(a, b).unwrap();
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::is_symmetrically_rigid;
    use rand_chacha::ChaCha8Rng;

    fn rigid(gg: &GainGraph) -> bool {
        is_symmetrically_rigid(gg, 3, 99).unwrap().rigid
    }

    fn k11_c4() -> GainGraph {
        let c4 = SymmetryGroup::cyclic(4);
        seed_gain_graph(&BaseGraph::K11, &c4).unwrap()
    }

    #[test]
    fn zero_extension_on_base_loop() {
        // attach two edges to the loop vertex: needs distinct gains
        let gg = k11_c4();
        let gains = choose_gains_0ext(&gg, 0, 0).unwrap();
        let step = ExtensionStep::new(ExtensionKind::Zero, vec![0, 0], vec![]).with_gains(gains);
        let out = apply_gained_extension(&gg, &step).unwrap();
        assert_eq!(out.graph().vertex_count(), 2);
        assert!(out.is_valid());
        assert!(rigid(&out));
    }

    /// Pins the composition convention: replacing a non-loop edge of
    /// gain γ by the path v₁ → v₀ → v₂ preserves rigidity iff
    /// μ₁⁻¹μ₂ = γ; the inverse-side choice must break it.
    #[test]
    fn gained_one_extension_direction_is_lift_consistent() {
        let c4 = SymmetryGroup::cyclic(4);
        let r = |k: u32| c4.rotation(k).unwrap();
        // rigid base: loop r at v0, double bundle v1→v0 with gains 1, r
        let mut g = MultiGraph::new(2);
        g.add_edge(0, 0).unwrap();
        g.add_edge(1, 0).unwrap();
        g.add_edge(1, 0).unwrap();
        let base = GainGraph::new(g, c4.clone(), vec![r(1), r(0), r(1)]).unwrap();
        assert!(rigid(&base));

        // remove edge 2 (v1→v0, gain r): γ read from v1 is r
        let step = |gains: Vec<GroupElement>| {
            ExtensionStep::new(ExtensionKind::One, vec![1, 0, 0], vec![2]).with_gains(gains)
        };
        // lift-consistent: μ1 = 1, μ2 = γ = r, μ3 distinct from μ2 at v0
        let good = apply_gained_extension(&base, &step(vec![r(0), r(1), r(2)])).unwrap();
        assert!(rigid(&good));
        // inverse-side choice: μ2 = γ⁻¹ = r³; validity holds, rigidity breaks
        let bad = apply_gained_extension(&base, &step(vec![r(0), r(3), r(2)]));
        match bad {
            Ok(gg) => assert!(!rigid(&gg), "inverse-side gains must not stay rigid"),
            Err(Error::InvalidStep(_)) => {} // rejected by the constraint check
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    /// Same check in a non-abelian group: μ₂ = μ₁·γ (left factor first),
    /// not γ·μ₁.
    #[test]
    fn gained_one_extension_direction_nonabelian() {
        let d4 = SymmetryGroup::dihedral(4);
        let r = d4.rotation(1).unwrap();
        let s = d4.rotation_reflection(0).unwrap();
        // rigid base over D4: build from K₁² (loops generate dihedral)
        let g = MultiGraph::from_edges(2, &[(0, 0), (0, 0), (1, 0), (1, 0)]).unwrap();
        let base = GainGraph::new(
            g,
            d4.clone(),
            vec![r.clone(), s.clone(), d4.identity(), r.clone()],
        )
        .unwrap();
        assert!(rigid(&base));
        // remove edge 3 (v1→v0, gain r): with μ1 = s, the consistent
        // second gain is s·r; the reversed product r·s must fail
        let step = |mu2: GroupElement| {
            ExtensionStep::new(ExtensionKind::One, vec![1, 0, 0], vec![3])
                .with_gains(vec![s.clone(), mu2, d4.rotation(2).unwrap()])
        };
        let good = apply_gained_extension(&base, &step(s.compose(&r).unwrap())).unwrap();
        assert!(rigid(&good));
        let reversed = r.compose(&s).unwrap();
        assert_ne!(reversed, s.compose(&r).unwrap());
        let bad = apply_gained_extension(&base, &step(reversed));
        match bad {
            Ok(gg) => assert!(!rigid(&gg)),
            Err(Error::InvalidStep(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn reduction_sequence_on_base_is_empty() {
        let seq = reduction_sequence_21(&BaseGraph::K11.multigraph(), false).unwrap();
        assert!(seq.steps.is_empty());
        let seq = reduction_sequence_20(&BaseGraph::K12.multigraph(), false).unwrap();
        assert!(seq.steps.is_empty());
    }

    #[test]
    fn triple_bundle_reduces_by_one_step() {
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        let seq = reduction_sequence_21(&g, false).unwrap();
        assert_eq!(seq.steps.len(), 1);
        // the single step is a 1-extension on the loop of K₁¹
        assert_eq!(seq.steps[0].kind, ExtensionKind::One);
        assert!(matches!(reduction_sequence_21(&g, true), Err(Error::NoSequence(_))));
    }

    #[test]
    fn five_vertex_figure_reduces_in_four_steps() {
        let g = MultiGraph::from_edges(
            5,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
        )
        .unwrap();
        let seq = reduction_sequence_21(&g, false).unwrap();
        assert_eq!(seq.steps.len(), 4);
        let replayed = replay_sequence(&seq).unwrap();
        assert_eq!(replayed.vertex_count(), 5);
        assert_eq!(replayed.edge_count(), 9);
    }

    #[test]
    fn two_k12_copies_join_by_loop_zero() {
        let g = MultiGraph::from_edges(2, &[(0, 0), (0, 0), (1, 1), (1, 1)]).unwrap();
        let seq = reduction_sequence_20(&g, false).unwrap();
        assert_eq!(seq.steps.len(), 1);
        assert_eq!(seq.steps[0].kind, ExtensionKind::LoopZero);
    }

    #[test]
    fn twenty_tight_double_bundles_and_loops_reduce() {
        // 2 vertices, two double bundles? (2,0)-tight: 2 double bundles
        // would be 4 parallel edges; use double bundle + one loop each
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 0), (1, 1)]).unwrap();
        assert!(is_tight(&g, 2, 0).unwrap());
        let seq = reduction_sequence_20(&g, false).unwrap();
        let replayed = replay_sequence(&seq).unwrap();
        assert_eq!(replayed.edge_count(), 4);
    }

    #[test]
    fn random_walks_produce_tight_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let g = random_tight_21(&mut rng, 6, usize::MAX);
            assert!(is_tight(&g, 2, 1).unwrap());
            let g = random_tight_20(&mut rng, 6, usize::MAX);
            assert!(is_tight(&g, 2, 0).unwrap());
            let g = random_dd_tight(&mut rng, 5, 3);
            assert!(is_tight(&g, 3, 3).unwrap());
            let g = random_d0_tight(&mut rng, 5, 3);
            assert!(is_tight(&g, 3, 0).unwrap());
            let g = random_d0_with_spanning_dd(&mut rng, 5, 2);
            assert!(is_tight(&g, 2, 0).unwrap());
        }
    }

    #[test]
    fn reduction_sequences_verify_on_random_tight_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..15 {
            let g = random_tight_21(&mut rng, 6, usize::MAX);
            let seq = reduction_sequence_21(&g, false).unwrap();
            assert_eq!(seq.steps.len(), 5);
            // intermediate graphs stay tight
            let mut cur = seq.base.multigraph();
            for step in &seq.steps {
                cur = apply_extension(&cur, step).unwrap();
                assert!(is_tight(&cur, 2, 1).unwrap());
            }
        }
        for _ in 0..15 {
            let g = random_tight_20(&mut rng, 5, usize::MAX);
            let seq = reduction_sequence_20(&g, false).unwrap();
            let mut cur = seq.base.multigraph();
            for step in &seq.steps {
                cur = apply_extension(&cur, step).unwrap();
                assert!(is_tight(&cur, 2, 0).unwrap());
            }
        }
    }

    #[test]
    fn assign_2d_rotational_groups() {
        let c4 = SymmetryGroup::cyclic(4);
        // base case: K₁¹ gets a non-trivial loop gain
        let gg = assign_rigid_gains_2d(&BaseGraph::K11.multigraph(), &c4).unwrap();
        assert!(!gg.gains()[0].is_identity());

        // the 5-vertex, 9-edge figure graph becomes rigid
        let g = MultiGraph::from_edges(
            5,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
        )
        .unwrap();
        let gg = assign_rigid_gains_2d(&g, &c4).unwrap();
        let report = is_symmetrically_rigid(&gg, 3, 1).unwrap();
        assert!(report.rigid);
        assert_eq!(report.rank, 2 * 5 - 1);

        // triple bundle under a 2-element group is impossible
        let c2 = SymmetryGroup::cyclic(2);
        let triple = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(matches!(
            assign_rigid_gains_2d(&triple, &c2),
            Err(Error::NoValidGains(_))
        ));
        // ... but it works over C4
        let gg = assign_rigid_gains_2d(&triple, &c4).unwrap();
        assert!(rigid(&gg));
    }

    #[test]
    fn assign_2d_dihedral_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d3 = SymmetryGroup::dihedral(3);
        for _ in 0..5 {
            let g = random_tight_20(&mut rng, 4, usize::MAX);
            let gg = assign_rigid_gains_2d(&g, &d3).unwrap();
            let report = is_symmetrically_rigid(&gg, 3, 2).unwrap();
            assert!(report.rigid);
            assert_eq!(report.rank, 2 * g.vertex_count());
        }
        // order-4 dihedral on quadruple-free graphs
        let d2 = SymmetryGroup::dihedral(2);
        for _ in 0..5 {
            let g = random_tight_20(&mut rng, 4, 3);
            let gg = assign_rigid_gains_2d(&g, &d2).unwrap();
            assert!(rigid(&gg));
        }
        // quadruple bundle with only 4 elements is impossible
        let quad = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(matches!(
            assign_rigid_gains_2d(&quad, &d2),
            Err(Error::NoValidGains(_))
        ));
    }

    #[test]
    fn assign_periodic_small_cases() {
        let t2 = SymmetryGroup::translations(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // 2 vertices, double bundle: gains (1,0) and (0,1), rank 2
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let gg = assign_gains_periodic(&g, &t2).unwrap();
        let zero = zero_placement(2, 2);
        let m = orbit_rigidity_matrix(&gg, &zero).unwrap();
        assert_eq!(numerical_rank(&m, None), 2);

        // K₁¹ is not (2,2)-tight
        assert!(matches!(
            assign_gains_periodic(&BaseGraph::K11.multigraph(), &t2),
            Err(Error::NotTight { .. })
        ));

        // triangle + doubled edge: rank 2·3−2 = 4
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2), (0, 1)]).unwrap();
        let gg = assign_gains_periodic(&g, &t2).unwrap();
        let m = orbit_rigidity_matrix(&gg, &zero_placement(2, 3)).unwrap();
        assert_eq!(numerical_rank(&m, None), 4);
    }

    #[test]
    fn assign_trans_inversion_small_cases() {
        let ti2 = SymmetryGroup::trans_inv(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let k12 = BaseGraph::K12.multigraph();
        let gg = assign_gains_trans_inversion(&k12, &ti2).unwrap();
        let m = orbit_rigidity_matrix(&gg, &zero_placement(2, 1)).unwrap();
        assert_eq!(numerical_rank(&m, None), 2);

        // disconnected (2,0)-tight input works componentwise
        let g = MultiGraph::from_edges(2, &[(0, 0), (0, 0), (1, 1), (1, 1)]).unwrap();
        let gg = assign_gains_trans_inversion(&g, &ti2).unwrap();
        let m = orbit_rigidity_matrix(&gg, &zero_placement(2, 2)).unwrap();
        assert_eq!(numerical_rank(&m, None), 4);

        // 3D: three double bundles + 3 loops, rank 9
        let ti3 = SymmetryGroup::trans_inv(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let g = MultiGraph::from_edges(
            3,
            &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        let gg = assign_gains_trans_inversion(&g, &ti3).unwrap();
        let m = orbit_rigidity_matrix(&gg, &zero_placement(3, 3)).unwrap();
        assert_eq!(numerical_rank(&m, None), 9);
    }

    #[test]
    fn assign_trans_point_klein() {
        let tp = SymmetryGroup::trans_point(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            GroupDescriptor::Klein3d {},
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_d0_with_spanning_dd(&mut rng, 4, 3);
        let gg = assign_gains_trans_point(&g, &tp).unwrap();
        let m = orbit_rigidity_matrix(&gg, &zero_placement(3, 4)).unwrap();
        assert_eq!(numerical_rank(&m, None), 12);

        // identity point group fails the kernel condition
        let tp_id = SymmetryGroup::trans_point(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            GroupDescriptor::Cyclic { n: 1 },
        )
        .unwrap();
        let g2 = random_d0_with_spanning_dd(&mut rng, 3, 2);
        assert!(matches!(
            assign_gains_trans_point(&g2, &tp_id),
            Err(Error::PointGroupCondition(_))
        ));
    }

    #[test]
    fn assign_dense_small_cases() {
        // K₁²: rank 2·1 = 2
        let (gg, p) = assign_gains_dense(&BaseGraph::K12.multigraph(), 2, 1e-2, 1e-2).unwrap();
        let m = orbit_rigidity_matrix(&gg, &p).unwrap();
        assert_eq!(numerical_rank(&m, None), 2);

        // 3-vertex 9-edge (3,0)-tight graph: rank 9
        let g = MultiGraph::from_edges(
            3,
            &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        let (gg, p) = assign_gains_dense(&g, 3, 1e-2, 1e-3).unwrap();
        let m = orbit_rigidity_matrix(&gg, &p).unwrap();
        assert_eq!(numerical_rank(&m, None), 9);

        // degenerate parameters are rejected
        assert!(matches!(
            assign_gains_dense(&BaseGraph::K12.multigraph(), 2, 1e-2, 0.0),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn gammah_shape_and_rigidity() {
        let pm = SymmetryGroup::cyclic(2); // {I, −I} in the plane
        let gg = build_gammah(&pm, 2).unwrap();
        assert_eq!(gg.graph().vertex_count(), 9);
        assert_eq!(gg.graph().edge_count(), 24);
        assert_eq!(gg.graph().max_parallel_bundle(), 1); // simple
        assert!(!gg.graph().has_loops());
        assert!(rigid(&gg));
        // the all-identity assignment on the same graph is flexible
        let flat = GainGraph::new(
            gg.graph().clone(),
            pm.clone(),
            vec![pm.identity(); gg.graph().edge_count()],
        )
        .unwrap();
        assert!(!rigid(&flat));
    }

    #[test]
    fn join_k_edges_preserves_rigidity_conjunction() {
        let c4 = SymmetryGroup::cyclic(4);
        let g = MultiGraph::from_edges(3, &[(0, 1), (0, 1), (1, 2), (0, 2), (2, 2)]).unwrap();
        let rigid_part = assign_rigid_gains_2d(&g, &c4).unwrap();
        let joined = join_k_edges(&rigid_part, &rigid_part, 1).unwrap();
        assert!(rigid(&joined));
        // joining a rigid part with a flexible one is flexible
        let flex = GainGraph::new(
            MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
            c4.clone(),
            vec![c4.identity(); 3],
        )
        .unwrap();
        let joined = join_k_edges(&rigid_part, &flex, 1).unwrap();
        assert!(!rigid(&joined));
    }

    #[test]
    fn qepsilon_picks_seventeen_copies_for_half() {
        // argmin_m |0.961^m − 0.5| = 17
        let c4 = SymmetryGroup::cyclic(4);
        let base = qepsilon_default_base();
        let (g, m) = build_qepsilon(&c4, 0.5, 0.05, &base, 0.961).unwrap();
        assert_eq!(m, 17);
        assert_eq!(g.vertex_count(), 17 * 5);
        assert_eq!(g.edge_count(), 17 * 9 + 16);
    }

    #[test]
    fn bigprob_shape() {
        let base = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let g = build_bigprob(&base, 2, 2);
        assert_eq!(g.vertex_count(), 2 + 2 * 3);
        assert_eq!(g.edge_count(), 2 * 3 + 2 * 2 * 3);
    }
}
