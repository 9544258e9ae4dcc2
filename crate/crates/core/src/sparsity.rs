//! Count-matroid sparsity checks and graph decompositions.
//!
//! A multigraph is (k,ℓ)-sparse when every vertex set X inducing at
//! least one edge satisfies `i(X) ≤ k|X| − ℓ`, and (k,ℓ)-tight when it
//! is sparse with `|E| = k|V| − ℓ`. Subsets whose bound is negative may
//! induce no edges at all; this matroidal reading keeps the pebble game
//! and the exhaustive subset check in exact agreement, and reproduces
//! the loop counting used by the tight classes here.

use std::collections::{HashMap, VecDeque};

use crate::gain::GainGraph;
use crate::graph::MultiGraph;
use crate::groups::GroupElement;
use crate::{Error, Result};

/// Vertex-count cap for the exhaustive subset checks.
pub const EXHAUSTIVE_CAP: usize = 14;
/// Vertex-count cap for gain-sparsity checks.
pub const GAIN_CAP: usize = 12;

/// `i(X) ≤ k|X| − ℓ` for every X inducing an edge. Uses the pebble game
/// for 0 ≤ ℓ < 2k, the exhaustive subset check otherwise.
pub fn is_sparse(graph: &MultiGraph, k: usize, l: i64) -> Result<bool> {
    if l >= 0 && (l as usize) < 2 * k {
        Ok(pebble_sparse(graph, k, l as usize))
    } else {
        exhaustive_sparse(graph, k, l)
    }
}

pub fn is_tight(graph: &MultiGraph, k: usize, l: i64) -> Result<bool> {
    let target = k as i64 * graph.vertex_count() as i64 - l;
    if graph.edge_count() as i64 != target {
        return Ok(false);
    }
    is_sparse(graph, k, l)
}

/// Exhaustive check over all vertex subsets (|V| ≤ 14).
pub fn exhaustive_sparse(graph: &MultiGraph, k: usize, l: i64) -> Result<bool> {
    let n = graph.vertex_count();
    if n > EXHAUSTIVE_CAP {
        return Err(Error::SizeCapExceeded { vertices: n, cap: EXHAUSTIVE_CAP });
    }
    for mask in 1u64..(1u64 << n) {
        let count = graph.induced_count(mask) as i64;
        if count == 0 {
            continue;
        }
        let size = mask.count_ones() as i64;
        if count > k as i64 * size - l {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Incremental (k,ℓ)-pebble game, 0 ≤ ℓ ≤ 2k−1. Accepts exactly the
/// edges keeping the current set (k,ℓ)-sparse.
pub struct PebbleGame {
    l: usize,
    pebbles: Vec<usize>,
    out: Vec<Vec<usize>>,
}

impl PebbleGame {
    pub fn new(n: usize, k: usize, l: usize) -> PebbleGame {
        assert!(k >= 1 && l < 2 * k, "pebble game needs 0 ≤ ℓ < 2k");
        PebbleGame { l, pebbles: vec![k; n], out: vec![Vec::new(); n] }
    }

    /// Pulls one pebble to `root` by reversing a path to a free pebble,
    /// never taking one from `avoid`.
    fn find_pebble(&mut self, root: usize, avoid: usize) -> bool {
        let n = self.pebbles.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            if v != root && v != avoid && self.pebbles[v] > 0 {
                // reverse the path root → … → v
                self.pebbles[v] -= 1;
                self.pebbles[root] += 1;
                let mut cur = v;
                while cur != root {
                    let prev = parent[cur];
                    // edge was oriented prev → cur; flip it
                    let pos = self.out[prev].iter().position(|&w| w == cur).unwrap();
                    self.out[prev].swap_remove(pos);
                    self.out[cur].push(prev);
                    cur = prev;
                }
                return true;
            }
            for i in 0..self.out[v].len() {
                let w = self.out[v][i];
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Tries to insert the edge; returns false (leaving the state
    /// unchanged except for pebble relocation) when it is dependent.
    pub fn try_insert(&mut self, u: usize, v: usize) -> bool {
        let needed = self.l + 1;
        loop {
            let have = if u == v {
                self.pebbles[u]
            } else {
                self.pebbles[u] + self.pebbles[v]
            };
            if have >= needed {
                break;
            }
            let pulled = if u == v {
                self.find_pebble(u, u)
            } else {
                self.find_pebble(u, v) || self.find_pebble(v, u)
            };
            if !pulled {
                return false;
            }
        }
        if self.pebbles[u] > 0 {
            self.pebbles[u] -= 1;
            self.out[u].push(v);
        } else {
            self.pebbles[v] -= 1;
            self.out[v].push(u);
        }
        true
    }
}

fn pebble_sparse(graph: &MultiGraph, k: usize, l: usize) -> bool {
    let mut game = PebbleGame::new(graph.vertex_count(), k, l);
    graph.edges().iter().all(|e| game.try_insert(e.tail, e.head))
}

/// Edge-id classes of a decomposition; class `i` holds the edges of the
/// i-th spanning subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub classes: Vec<Vec<usize>>,
}

impl Decomposition {
    /// Per-edge class index.
    pub fn assignment(&self, edge_count: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; edge_count];
        for (c, ids) in self.classes.iter().enumerate() {
            for &e in ids {
                out[e] = c;
            }
        }
        out
    }
}

fn forest_is_acyclic(graph: &MultiGraph, edges: &[usize]) -> bool {
    let mut dsu = Dsu::new(graph.vertex_count());
    for &e in edges {
        let edge = graph.edges()[e];
        if !dsu.union(edge.tail, edge.head) {
            return false;
        }
    }
    true
}

fn spans_connected(graph: &MultiGraph, edges: &[usize]) -> bool {
    let mut dsu = Dsu::new(graph.vertex_count());
    for &e in edges {
        let edge = graph.edges()[e];
        dsu.union(edge.tail, edge.head);
    }
    (1..graph.vertex_count()).all(|v| dsu.find(v) == dsu.find(0))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect() }
    }
    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }
    /// Returns false when both ends were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Decomposes a (d,d)-tight multigraph into d edge-disjoint spanning
/// trees (Nash-Williams/Tutte), via matroid-partition augmenting paths
/// on d copies of the graphic matroid.
pub fn nash_williams_trees(graph: &MultiGraph, d: usize) -> Result<Decomposition> {
    if !is_tight(graph, d, d as i64)? {
        return Err(Error::NotTight { k: d as i64, l: d as i64 });
    }
    let mut assignment: Vec<Option<usize>> = vec![None; graph.edge_count()];
    for e in 0..graph.edge_count() {
        if !place_edge(graph, d, &mut assignment, e) {
            return Err(Error::DecompositionImpossible(
                "matroid partition failed on a tight input".into(),
            ));
        }
    }
    let mut classes = vec![Vec::new(); d];
    for (e, a) in assignment.iter().enumerate() {
        classes[a.unwrap()].push(e);
    }
    let decomp = Decomposition { classes };
    for class in &decomp.classes {
        if !forest_is_acyclic(graph, class) || !spans_connected(graph, class) {
            return Err(Error::DecompositionImpossible(
                "output class is not a spanning tree".into(),
            ));
        }
    }
    Ok(decomp)
}

/// One matroid-partition augmentation: admit edge `e0` by a shortest
/// chain of forest exchanges.
fn place_edge(
    graph: &MultiGraph,
    d: usize,
    assignment: &mut [Option<usize>],
    e0: usize,
) -> bool {
    let forest_edges = |assignment: &[Option<usize>], j: usize, exclude: usize| -> Vec<usize> {
        (0..assignment.len())
            .filter(|&f| f != exclude && assignment[f] == Some(j))
            .collect()
    };
    // BFS over edges; parent[f] = g means: f lies on g's cycle in f's
    // own forest, so evicting f lets g enter that forest.
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([e0]);
    let mut seen = vec![false; assignment.len().max(e0 + 1)];
    seen[e0] = true;
    while let Some(f) = queue.pop_front() {
        let fe = graph.edges()[f];
        if fe.is_loop() {
            continue; // loops are dependent in every graphic matroid
        }
        for j in 0..d {
            if assignment[f] == Some(j) {
                continue;
            }
            let edges = forest_edges(assignment, j, f);
            let mut dsu = Dsu::new(graph.vertex_count());
            for &g in &edges {
                let ge = graph.edges()[g];
                dsu.union(ge.tail, ge.head);
            }
            if dsu.find(fe.tail) != dsu.find(fe.head) {
                // free slot found: unwind the exchange chain; each edge
                // moves into the forest freed by its child
                let mut cur = f;
                let mut target = j;
                loop {
                    let freed = assignment[cur];
                    assignment[cur] = Some(target);
                    match parent.get(&cur) {
                        None => return true,
                        Some(&g) => {
                            target = freed.expect("interior chain edges are placed");
                            cur = g;
                        }
                    }
                }
            }
            // f closes a cycle in forest j: cycle edges become frontier
            for g in tree_path_edges(graph, &edges, fe.tail, fe.head) {
                if !seen[g] {
                    seen[g] = true;
                    parent.insert(g, f);
                    queue.push_back(g);
                }
            }
        }
    }
    false
}

/// Edge ids of the unique path between `a` and `b` in the forest.
fn tree_path_edges(graph: &MultiGraph, forest: &[usize], a: usize, b: usize) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &f in forest {
        let e = graph.edges()[f];
        adj[e.tail].push((e.head, f));
        adj[e.head].push((e.tail, f));
    }
    let mut parent_edge = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        for &(w, f) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                parent_edge[w] = f;
                queue.push_back(w);
            }
        }
    }
    let mut out = Vec::new();
    if !seen[b] {
        return out;
    }
    let mut cur = b;
    while cur != a {
        out.push(parent_edge[cur]);
        cur = parent[cur];
    }
    out
}

/// Decomposes a (d,0)-tight multigraph into d spanning (1,0)-tight
/// subgraphs: orient with out-degree exactly d per vertex, then class i
/// takes each vertex's i-th out-edge.
pub fn map_decomposition(graph: &MultiGraph, d: usize) -> Result<Decomposition> {
    if !is_tight(graph, d, 0)? {
        return Err(Error::NotTight { k: d as i64, l: 0 });
    }
    let orientation = out_degree_orientation(graph, d)?;
    let n = graph.vertex_count();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &tail) in orientation.iter().enumerate() {
        out_edges[tail].push(e);
    }
    let mut classes = vec![Vec::new(); d];
    for per_vertex in &out_edges {
        debug_assert_eq!(per_vertex.len(), d);
        for (i, &e) in per_vertex.iter().enumerate() {
            classes[i].push(e);
        }
    }
    for class in &mut classes {
        class.sort_unstable();
    }
    let decomp = Decomposition { classes };
    for class in &decomp.classes {
        let sub = subgraph(graph, class);
        if !unique_cycle_check(&sub) {
            return Err(Error::DecompositionImpossible(
                "class is not (1,0)-tight".into(),
            ));
        }
    }
    Ok(decomp)
}

/// Per-edge tail assignment giving every vertex out-degree exactly `d`,
/// found by path reversals (Hakimi orientation).
pub fn out_degree_orientation(graph: &MultiGraph, d: usize) -> Result<Vec<usize>> {
    let n = graph.vertex_count();
    let mut tail: Vec<usize> = graph.edges().iter().map(|e| e.tail).collect();
    let mut outdeg = vec![0usize; n];
    for &t in &tail {
        outdeg[t] += 1;
    }
    while let Some(over) = (0..n).find(|&v| outdeg[v] > d) {
        // BFS along oriented edges to a vertex with spare capacity
        let mut parent_edge = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([over]);
        seen[over] = true;
        let mut target = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for (e, edge) in graph.edges().iter().enumerate() {
                if edge.is_loop() || tail[e] != v {
                    continue;
                }
                let w = edge.other(v);
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = e;
                    if outdeg[w] < d {
                        target = Some(w);
                        break 'bfs;
                    }
                    queue.push_back(w);
                }
            }
        }
        let Some(mut cur) = target else {
            return Err(Error::DecompositionImpossible(
                "no out-degree orientation exists".into(),
            ));
        };
        outdeg[cur] += 1;
        while cur != over {
            let e = parent_edge[cur];
            std::mem::swap(&mut tail[e], &mut cur);
        }
        outdeg[over] -= 1;
    }
    Ok(tail)
}

fn subgraph(graph: &MultiGraph, edges: &[usize]) -> MultiGraph {
    let mut g = MultiGraph::new(graph.vertex_count());
    for &e in edges {
        let edge = graph.edges()[e];
        g.add_edge(edge.tail, edge.head).unwrap();
    }
    g
}

/// True iff every connected component has exactly one cycle
/// ((1,0)-tightness, components counted separately).
pub fn unique_cycle_check(graph: &MultiGraph) -> bool {
    let comps = graph.components();
    for comp in comps {
        let in_comp = |v: usize| comp.binary_search(&v).is_ok();
        let edge_count = graph
            .edges()
            .iter()
            .filter(|e| in_comp(e.tail) && in_comp(e.head))
            .count();
        if edge_count != comp.len() {
            return false;
        }
    }
    true
}

/// Greedy maximal (k,ℓ)-sparse edge set; returns it only when it spans
/// (size k|V| − ℓ), i.e. when a spanning tight subgraph exists.
pub fn find_spanning_tight_subgraph(
    graph: &MultiGraph,
    k: usize,
    l: i64,
) -> Result<Option<Vec<usize>>> {
    let target = k as i64 * graph.vertex_count() as i64 - l;
    if target < 0 {
        return Ok(None);
    }
    let mut kept = Vec::new();
    if l >= 0 && (l as usize) < 2 * k {
        let mut game = PebbleGame::new(graph.vertex_count(), k, l as usize);
        for (e, edge) in graph.edges().iter().enumerate() {
            if game.try_insert(edge.tail, edge.head) {
                kept.push(e);
            }
        }
    } else {
        let mut sub = MultiGraph::new(graph.vertex_count());
        for (e, edge) in graph.edges().iter().enumerate() {
            let mut candidate = sub.clone();
            candidate.add_edge(edge.tail, edge.head)?;
            if exhaustive_sparse(&candidate, k, l)? {
                sub = candidate;
                kept.push(e);
            }
        }
    }
    if kept.len() as i64 == target {
        Ok(Some(kept))
    } else {
        Ok(None)
    }
}

/// Greedy maximal (k,ℓ,m)-gain-sparse edge set; returns it only when
/// it spans (size k|V| − m).
pub fn find_spanning_gain_tight_subgraph(
    gg: &GainGraph,
    k: usize,
    l: i64,
    m: i64,
) -> Result<Option<Vec<usize>>> {
    let target = k as i64 * gg.graph().vertex_count() as i64 - m;
    if target < 0 {
        return Ok(None);
    }
    let mut kept: Vec<usize> = Vec::new();
    for e in 0..gg.graph().edge_count() {
        kept.push(e);
        if !is_gain_sparse_subset(gg, &kept, k, l, m)? {
            kept.pop();
        }
    }
    if kept.len() as i64 == target {
        Ok(Some(kept))
    } else {
        Ok(None)
    }
}

/// Gain-sparsity: the underlying multigraph satisfies the (k,m) counts
/// and every balanced subgraph satisfies the (k,ℓ) counts.
pub fn is_gain_sparse(gg: &GainGraph, k: usize, l: i64, m: i64) -> Result<bool> {
    let mask: Vec<usize> = (0..gg.graph().edge_count()).collect();
    is_gain_sparse_subset(gg, &mask, k, l, m)
}

pub fn is_gain_tight(gg: &GainGraph, k: usize, l: i64, m: i64) -> Result<bool> {
    let target = k as i64 * gg.graph().vertex_count() as i64 - m;
    if gg.graph().edge_count() as i64 != target {
        return Ok(false);
    }
    is_gain_sparse(gg, k, l, m)
}

/// Gain-sparsity of the subgraph given by `edge_ids`.
pub fn is_gain_sparse_subset(
    gg: &GainGraph,
    edge_ids: &[usize],
    k: usize,
    l: i64,
    m: i64,
) -> Result<bool> {
    assert!(l >= m, "gain sparsity needs ℓ ≥ m");
    let n = gg.graph().vertex_count();
    if n > GAIN_CAP {
        return Err(Error::SizeCapExceeded { vertices: n, cap: GAIN_CAP });
    }
    // underlying (k,m) counts
    for mask in 1u64..(1u64 << n) {
        let count = edge_ids
            .iter()
            .filter(|&&e| {
                let edge = gg.graph().edges()[e];
                mask >> edge.tail & 1 == 1 && mask >> edge.head & 1 == 1
            })
            .count() as i64;
        if count == 0 {
            continue;
        }
        let size = mask.count_ones() as i64;
        if count > k as i64 * size - m {
            return Ok(false);
        }
        // balanced (k,ℓ) counts: the largest balanced subgraph spanning
        // this subset connectedly
        if let Some(best) = max_balanced_spanning(gg, edge_ids, mask) {
            if best as i64 > k as i64 * size - l {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Maximum edge count of a balanced connected subgraph spanning exactly
/// the vertices of `mask`, or None when no such subgraph exists.
///
/// A connected balanced subgraph determines a fiber potential up to a
/// global factor; conversely any potential reachable through a spanning
/// tree yields its set of consistent edges. The maximum is taken over
/// all reachable potential classes.
fn max_balanced_spanning(gg: &GainGraph, edge_ids: &[usize], mask: u64) -> Option<usize> {
    let verts: Vec<usize> = (0..gg.graph().vertex_count())
        .filter(|&v| mask >> v & 1 == 1)
        .collect();
    if verts.is_empty() {
        return None;
    }
    let local: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // non-loop induced edges; loops are unbalanced (identity loops are
    // invalid but would form balanced singletons — treat them as
    // consistent edges on a single vertex)
    let mut identity_loops = 0usize;
    // (local tail, local head, global tail, edge id)
    let mut edges: Vec<LocalEdge> = Vec::new();
    for &e in edge_ids {
        let edge = gg.graph().edges()[e];
        if mask >> edge.tail & 1 != 1 || mask >> edge.head & 1 != 1 {
            continue;
        }
        if edge.is_loop() {
            if gg.gains()[e].is_identity() {
                identity_loops += 1;
            }
            continue;
        }
        edges.push(LocalEdge {
            lu: local[&edge.tail],
            lw: local[&edge.head],
            gu: edge.tail,
            gw: edge.head,
            id: e,
        });
    }
    if verts.len() == 1 {
        return if identity_loops > 0 { Some(identity_loops) } else { None };
    }
    let m = verts.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, e) in edges.iter().enumerate() {
        adj[e.lu].push(i);
        adj[e.lw].push(i);
    }
    let mut best: Option<usize> = None;
    let mut psi: Vec<Option<GroupElement>> = vec![None; m];
    psi[0] = Some(gg.group().identity());
    potential_search(gg, &edges, &adj, &mut psi, 1, &mut best);
    best
}

#[derive(Clone, Copy)]
struct LocalEdge {
    lu: usize,
    lw: usize,
    gu: usize,
    gw: usize,
    id: usize,
}

fn potential_search(
    gg: &GainGraph,
    edges: &[LocalEdge],
    adj: &[Vec<usize>],
    psi: &mut Vec<Option<GroupElement>>,
    assigned: usize,
    best: &mut Option<usize>,
) {
    let m = psi.len();
    if assigned == m {
        let consistent = edges
            .iter()
            .filter(|e| {
                let step = gg.oriented_gain(e.id, e.gu);
                psi[e.lu].as_ref().unwrap().compose(&step).unwrap()
                    == *psi[e.lw].as_ref().unwrap()
            })
            .count();
        if best.is_none_or(|b| consistent > b) {
            *best = Some(consistent);
        }
        return;
    }
    // next vertex adjacent to the assigned region, smallest index first
    let next = (0..m).find(|&v| {
        psi[v].is_none()
            && adj[v].iter().any(|&i| {
                let e = edges[i];
                psi[e.lu].is_some() || psi[e.lw].is_some()
            })
    });
    let Some(v) = next else {
        return; // mask is not connected through the edge set
    };
    let mut candidates: Vec<GroupElement> = Vec::new();
    for &i in &adj[v] {
        let e = edges[i];
        let (other, from) = if e.lu == v { (e.lw, e.gw) } else { (e.lu, e.gu) };
        if let Some(base) = &psi[other] {
            let step = gg.oriented_gain(e.id, from);
            let value = base.compose(&step).unwrap();
            if !candidates.contains(&value) {
                candidates.push(value);
            }
        }
    }
    for value in candidates {
        psi[v] = Some(value);
        potential_search(gg, edges, adj, psi, assigned + 1, best);
        psi[v] = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::SymmetryGroup;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn k11() -> MultiGraph {
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        g
    }

    #[test]
    fn small_tight_examples() {
        assert!(is_tight(&k11(), 2, 1).unwrap());
        let triple = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(is_tight(&triple, 2, 1).unwrap());
        // K5 minus one edge is (2,1)-tight
        let g = MultiGraph::from_edges(
            5,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
        )
        .unwrap();
        assert!(is_tight(&g, 2, 1).unwrap());
        assert!(exhaustive_sparse(&g, 2, 1).unwrap());
        // K4 is (2,1)-sparse but not tight (6 < 7); K5 is not (2,3)-sparse
        let k4 = MultiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        assert!(is_sparse(&k4, 2, 1).unwrap());
        assert!(!is_tight(&k4, 2, 1).unwrap());
        assert!(!is_sparse(&k4, 2, 3).unwrap());
    }

    #[test]
    fn pebble_matches_exhaustive_on_random_multigraphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..120 {
            let n = rng.random_range(1..=7usize);
            let m = rng.random_range(0..=2 * n + 2);
            let mut g = MultiGraph::new(n);
            for _ in 0..m {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                g.add_edge(a, b).unwrap();
            }
            for (k, l) in [(2usize, 3i64), (2, 1), (2, 0), (3, 0), (1, 1), (2, 2), (3, 3)] {
                let fast = is_sparse(&g, k, l).unwrap();
                let slow = exhaustive_sparse(&g, k, l).unwrap();
                assert_eq!(fast, slow, "({k},{l}) on {:?}", g.edges());
            }
        }
    }

    #[test]
    fn gain_tight_examples() {
        let c4 = SymmetryGroup::cyclic(4);
        // K₁¹ with a non-identity loop gain is (2,3,1)-gain-tight
        let gg = GainGraph::new(k11(), c4.clone(), vec![c4.rotation(1).unwrap()]).unwrap();
        assert!(is_gain_tight(&gg, 2, 3, 1).unwrap());

        // all-identity triangle: balanced boundary case 3 = 2·3−3
        let tri = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let gg = GainGraph::new(tri, c4.clone(), vec![c4.identity(); 3]).unwrap();
        assert!(is_gain_sparse(&gg, 2, 3, 1).unwrap());
        assert!(!is_gain_tight(&gg, 2, 3, 1).unwrap());

        // unbalanced double bundle {1, r}: 2 ≤ 2·2−1
        let bundle = MultiGraph::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let gg = GainGraph::new(
            bundle,
            c4.clone(),
            vec![c4.identity(), c4.rotation(1).unwrap()],
        )
        .unwrap();
        assert!(is_gain_sparse(&gg, 2, 3, 1).unwrap());

        // balanced K4 (all identity) violates the balanced (2,3) count
        let k4 = MultiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        let gg = GainGraph::new(k4, c4.clone(), vec![c4.identity(); 6]).unwrap();
        assert!(!is_gain_sparse(&gg, 2, 3, 1).unwrap());
        // ... but an unbalanced gain map on K4 passes
        let k4 = MultiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        let gains = vec![
            c4.rotation(1).unwrap(),
            c4.identity(),
            c4.identity(),
            c4.identity(),
            c4.identity(),
            c4.identity(),
        ];
        let gg = GainGraph::new(k4, c4.clone(), gains).unwrap();
        assert!(is_gain_sparse(&gg, 2, 3, 1).unwrap());
    }

    #[test]
    fn nash_williams_small_cases() {
        let bundle = MultiGraph::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let d = nash_williams_trees(&bundle, 2).unwrap();
        assert_eq!(d.classes.len(), 2);
        assert_eq!(d.classes[0].len(), 1);
        assert_eq!(d.classes[1].len(), 1);

        // triangle plus one doubled edge is (2,2)-tight
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2), (0, 1)]).unwrap();
        let d = nash_williams_trees(&g, 2).unwrap();
        for class in &d.classes {
            assert_eq!(class.len(), 2);
            assert!(forest_is_acyclic(&g, class));
            assert!(spans_connected(&g, class));
        }

        // non-tight input is rejected
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(nash_williams_trees(&g, 2), Err(Error::NotTight { .. })));
    }

    #[test]
    fn nash_williams_on_random_tree_unions() {
        // unions of d random spanning trees are (d,d)-tight by
        // Nash-Williams; the decomposition must recover d trees
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let n = rng.random_range(2..=7usize);
            let d = rng.random_range(1..=3usize);
            let mut g = MultiGraph::new(n);
            for _ in 0..d {
                for v in 1..n {
                    let u = rng.random_range(0..v);
                    g.add_edge(u, v).unwrap();
                }
            }
            let decomp = nash_williams_trees(&g, d).unwrap();
            let mut all: Vec<usize> = decomp.classes.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..g.edge_count()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn map_decomposition_small_cases() {
        let k12 = MultiGraph::from_edges(1, &[(0, 0), (0, 0)]).unwrap();
        let d = map_decomposition(&k12, 2).unwrap();
        assert_eq!(d.classes.len(), 2);
        assert_eq!(d.classes[0].len(), 1);

        // two disjoint copies of K₁² stay componentwise
        let two = MultiGraph::from_edges(2, &[(0, 0), (0, 0), (1, 1), (1, 1)]).unwrap();
        let d = map_decomposition(&two, 2).unwrap();
        for class in &d.classes {
            let sub = subgraph(&two, class);
            assert!(unique_cycle_check(&sub));
            assert_eq!(class.len(), 2);
        }

        // three double bundles + 3 loops on 3 vertices is (3,0)-tight
        let g = MultiGraph::from_edges(
            3,
            &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        let d = map_decomposition(&g, 3).unwrap();
        for class in &d.classes {
            let sub = subgraph(&g, class);
            assert!(unique_cycle_check(&sub));
            assert_eq!(class.len(), 3);
        }
    }

    #[test]
    fn spanning_tight_subgraph_extraction() {
        // a (2,2)-tight graph is its own spanning tight subgraph
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2), (0, 1)]).unwrap();
        let found = find_spanning_tight_subgraph(&g, 2, 2).unwrap().unwrap();
        assert_eq!(found.len(), 4);

        // (2,0)-tight graph contains a spanning (2,2)-tight part
        let g = MultiGraph::from_edges(
            3,
            &[(0, 1), (1, 2), (0, 2), (0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        assert!(is_tight(&g, 2, 0).unwrap());
        let found = find_spanning_tight_subgraph(&g, 2, 2).unwrap().unwrap();
        assert_eq!(found.len(), 4);
        let sub = subgraph(&g, &found);
        assert!(is_tight(&sub, 2, 2).unwrap());

        // empty graph has no spanning (2,2)-tight subgraph
        let g = MultiGraph::new(3);
        assert!(find_spanning_tight_subgraph(&g, 2, 2).unwrap().is_none());
    }

    #[test]
    fn unique_cycle_examples() {
        assert!(unique_cycle_check(&k11()));
        let tree = MultiGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!unique_cycle_check(&tree));
        let theta = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        assert!(!unique_cycle_check(&theta));
    }

    #[test]
    fn orientation_has_exact_out_degrees() {
        let g = MultiGraph::from_edges(
            3,
            &[(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2), (0, 0), (1, 1), (2, 2)],
        )
        .unwrap();
        let tails = out_degree_orientation(&g, 3).unwrap();
        let mut outdeg = [0usize; 3];
        for &t in &tails {
            outdeg[t] += 1;
        }
        assert_eq!(outdeg, [3, 3, 3]);
    }
}
