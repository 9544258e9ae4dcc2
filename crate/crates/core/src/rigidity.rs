//! The orbit rigidity matrix and Γ-symmetric rigidity decisions.
//!
//! The orbit rigidity matrix of `(G, φ, p)` is the `|E| × d|V|` matrix
//! whose kernel is the space of Γ-symmetric infinitesimal flexes of the
//! lifted framework. A gain graph is Γ-symmetrically rigid when some
//! orbit placement makes every such flex trivial; since regular
//! placements form a Zariski-open set, random integer placements decide
//! this with overwhelming probability, and a full-rank observation is a
//! certificate (rank at a placement never exceeds the generic rank).

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gain::{GainGraph, Placement};
use crate::graph::{Edge, MultiGraph};
use crate::groups::{nullspace, trivial_motion_space, GroupElement, SymmetryGroup};
use crate::{Error, Result};

/// Outcome of a randomized rigidity test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub nullity: usize,
    /// Dimension of the trivial-flex space at the best placement.
    pub trivial_dim: usize,
    pub rigid: bool,
    /// Number of random placements examined.
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Set when extra seed batches overturned an initial flexible
    /// verdict; never silently dropped.
    pub flagged: bool,
}

/// Count of singular values above `tol`; the default tolerance is
/// `max(rows, cols) · ε · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: Option<f64>) -> usize {
    rank_with_tolerance(m, tol).0
}

pub fn rank_with_tolerance(m: &DMatrix<f64>, tol: Option<f64>) -> (usize, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, 0.0);
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = tol.unwrap_or_else(|| m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax);
    (svd.singular_values.iter().filter(|&&s| s > tol).count(), tol)
}

/// The `|E| × d|V|` orbit rigidity matrix at the placement `p`.
///
/// Row of a non-loop `(e, v, w)` with gain γ: `p(v) − γp(w)` in the `v`
/// block and `p(w) − γ⁻¹p(v)` in the `w` block. Row of a loop:
/// `2p(v) − γp(v) − γ⁻¹p(v)`. The gains act as affine isometries, so
/// translation gains contribute through their translation parts.
pub fn orbit_rigidity_matrix(gg: &GainGraph, p: &Placement) -> Result<DMatrix<f64>> {
    let d = gg.dim();
    let n = gg.graph().vertex_count();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    for q in p {
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: q.len() });
        }
    }
    let mut m = DMatrix::zeros(gg.graph().edge_count(), d * n);
    for (e, edge) in gg.graph().edges().iter().enumerate() {
        let gamma = gg.gains()[e].rep();
        let gamma_inv = gamma.inverse();
        if edge.is_loop() {
            let v = edge.tail;
            let row = 2.0 * &p[v] - gamma.apply(&p[v]) - gamma_inv.apply(&p[v]);
            for j in 0..d {
                m[(e, v * d + j)] = row[j];
            }
        } else {
            let (v, w) = (edge.tail, edge.head);
            let rv = &p[v] - gamma.apply(&p[w]);
            let rw = &p[w] - gamma_inv.apply(&p[v]);
            for j in 0..d {
                m[(e, v * d + j)] = rv[j];
                m[(e, w * d + j)] = rw[j];
            }
        }
    }
    Ok(m)
}

/// Basis of the trivial Γ-symmetric flexes at `p`: the image of the
/// `(T, x)` solution space under `(T, x) ↦ (v ↦ T p(v) + x)`.
pub fn trivial_flex_basis(group: &SymmetryGroup, p: &Placement) -> Vec<DVector<f64>> {
    let d = group.dim();
    let n = p.len();
    let motions = trivial_motion_space(group);
    if motions.is_empty() || n == 0 {
        return vec![];
    }
    let mut fields = DMatrix::zeros(d * n, motions.len());
    for (c, (t, x)) in motions.iter().enumerate() {
        for (v, pv) in p.iter().enumerate() {
            let f = t * pv + x;
            for j in 0..d {
                fields[(v * d + j, c)] = f[j];
            }
        }
    }
    let svd = fields.clone().svd(true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = 1e-9 * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let u = svd.u.as_ref().expect("requested U");
    (0..rank).map(|i| u.column(i).into_owned()).collect()
}

/// Dimension of the trivial-flex space at `p` (≤ k(Γ), with equality
/// for placements that affinely span R^d).
pub fn trivial_flex_dim_at(group: &SymmetryGroup, p: &Placement) -> usize {
    trivial_flex_basis(group, p).len()
}

/// Draws an integer placement with coordinates in [−1000, 1000],
/// resampling while it is degenerate: some d+1 points affinely
/// dependent, or two orbit points coinciding (checked for small finite
/// groups).
pub fn random_placement<R: Rng>(
    group: &SymmetryGroup,
    n: usize,
    rng: &mut R,
) -> Placement {
    let d = group.dim();
    let orbit_guard: Option<Vec<GroupElement>> = match group.order() {
        Some(m) if m * n <= 512 => group.enumerate().ok(),
        _ => None,
    };
    for _ in 0..200 {
        let p: Placement = (0..n)
            .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1000i32..=1000) as f64))
            .collect();
        if placement_degenerate(&p, d, orbit_guard.as_deref()) {
            continue;
        }
        return p;
    }
    // an astronomically unlikely fall-through; accept the last draw
    (0..n)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1000i32..=1000) as f64))
        .collect()
}

fn placement_degenerate(p: &Placement, d: usize, orbit: Option<&[GroupElement]>) -> bool {
    let n = p.len();
    if n > d {
        // every d+1 points must affinely span R^d
        let mut subset = vec![0usize; d + 1];
        if affinely_dependent_subset(p, d, &mut subset, 0, 0) {
            return true;
        }
    }
    if let Some(elements) = orbit {
        let mut points: Vec<DVector<f64>> = Vec::with_capacity(elements.len() * n);
        for q in p {
            for g in elements {
                points.push(g.rep().apply(q));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if (&points[i] - &points[j]).amax() < 1e-6 {
                    return true;
                }
            }
        }
    }
    false
}

fn affinely_dependent_subset(
    p: &Placement,
    d: usize,
    subset: &mut [usize],
    depth: usize,
    start: usize,
) -> bool {
    if depth == d + 1 {
        let mut m = DMatrix::zeros(d, d);
        for (c, &idx) in subset[1..].iter().enumerate() {
            let diff = &p[idx] - &p[subset[0]];
            for r in 0..d {
                m[(r, c)] = diff[r];
            }
        }
        return m.determinant().abs() < 1e-6;
    }
    for v in start..p.len() {
        subset[depth] = v;
        if affinely_dependent_subset(p, d, subset, depth + 1, v + 1) {
            return true;
        }
    }
    false
}

/// Randomized rigidity decision: draws `trials` integer placements,
/// keeps the best rank, and reports rigid iff the nullity there equals
/// the trivial-flex dimension. A flexible first verdict is re-checked
/// under four further seeds; a late full-rank observation flips the
/// verdict and flags the report.
pub fn is_symmetrically_rigid(gg: &GainGraph, trials: usize, seed: u64) -> Result<RankReport> {
    let trials = trials.max(1);
    let mut report = rigidity_batch(gg, trials, seed)?;
    if !report.rigid {
        for extra in 1..=4u64 {
            let again = rigidity_batch(gg, trials, seed.wrapping_add(extra))?;
            report.trials += again.trials;
            if again.rigid {
                report = RankReport { trials: report.trials, flagged: true, ..again };
                break;
            }
        }
    }
    Ok(report)
}

fn rigidity_batch(gg: &GainGraph, trials: usize, seed: u64) -> Result<RankReport> {
    let d = gg.dim();
    let n = gg.graph().vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<RankReport> = None;
    for t in 0..trials {
        let p = random_placement(gg.group(), n, &mut rng);
        let m = orbit_rigidity_matrix(gg, &p)?;
        let (rank, tol) = rank_with_tolerance(&m, None);
        let trivial = trivial_flex_dim_at(gg.group(), &p);
        let nullity = d * n - rank;
        let report = RankReport {
            rank,
            nullity,
            trivial_dim: trivial,
            rigid: nullity == trivial,
            trials: t + 1,
            tolerance: tol,
            seed,
            flagged: false,
        };
        if report.rigid {
            return Ok(report);
        }
        match &best {
            Some(b) if b.rank >= rank => {}
            _ => best = Some(report),
        }
    }
    let mut out = best.expect("at least one trial");
    out.trials = trials;
    Ok(out)
}

/// Classical rigidity matrix of the covering framework: one row per
/// lifted edge, `d|Γ||V|` columns.
pub fn covering_rigidity_matrix(gg: &GainGraph, p: &Placement) -> Result<DMatrix<f64>> {
    let cover = gg.covering_graph()?;
    let lifted = gg.lift_placement(p)?;
    let d = gg.dim();
    let nv = cover.graph.vertex_count();
    let mut m = DMatrix::zeros(cover.graph.edge_count(), d * nv);
    for (e, edge) in cover.graph.edges().iter().enumerate() {
        if edge.is_loop() {
            continue; // identity-gain loop lift; contributes nothing
        }
        let (a, b) = (edge.tail, edge.head);
        let diff = &lifted[a] - &lifted[b];
        for j in 0..d {
            m[(e, a * d + j)] = diff[j];
            m[(e, b * d + j)] = -diff[j];
        }
    }
    Ok(m)
}

/// Dimension of `ker R(G,p) ∩ {u : u(v,γ) = γ_ℓ u(v,1)}` for the cover:
/// the nullity of the covering rows composed with the symmetric-flex
/// embedding `u(v,1) ↦ (γ_ℓ u(v,1))_γ`.
pub fn symmetric_kernel_dim(gg: &GainGraph, p: &Placement) -> Result<usize> {
    let cover = gg.covering_graph()?;
    let lifted = gg.lift_placement(p)?;
    let d = gg.dim();
    let n = gg.graph().vertex_count();
    let linear: Vec<DMatrix<f64>> = cover.elements.iter().map(|g| g.linear_part()).collect();
    let m_elems = cover.elements.len();
    let mut m = DMatrix::zeros(cover.graph.edge_count(), d * n);
    for (row, edge) in cover.graph.edges().iter().enumerate() {
        if edge.is_loop() {
            continue;
        }
        let (a, b) = (edge.tail, edge.head);
        let (va, ga) = (a / m_elems, a % m_elems);
        let (vb, gb) = (b / m_elems, b % m_elems);
        let diff = (&lifted[a] - &lifted[b]).transpose();
        let ra = &diff * &linear[ga];
        let rb = &diff * &linear[gb];
        for j in 0..d {
            m[(row, va * d + j)] += ra[j];
            m[(row, vb * d + j)] -= rb[j];
        }
    }
    let rank = numerical_rank(&m, None);
    Ok(d * n - rank)
}

pub fn orbit_nullity(gg: &GainGraph, p: &Placement) -> Result<usize> {
    let m = orbit_rigidity_matrix(gg, p)?;
    let rank = numerical_rank(&m, None);
    Ok(gg.dim() * gg.graph().vertex_count() - rank)
}

/// Precomputed `γ·p(v)` tables for fast matrix assembly across many
/// gain maps sharing one placement.
pub struct OrbitMatrixBuilder {
    d: usize,
    edges: Vec<Edge>,
    /// applied[elem][v] = rep(elem) applied to p(v), flattened by vertex.
    applied: Vec<Vec<f64>>,
    inv_index: Vec<u32>,
    pub placement: Placement,
}

impl OrbitMatrixBuilder {
    pub fn new(
        graph: &MultiGraph,
        elements: &[GroupElement],
        inv_index: &[u32],
        placement: Placement,
    ) -> OrbitMatrixBuilder {
        let d = elements
            .first()
            .map(|e| e.group().dim())
            .unwrap_or_else(|| placement.first().map(|p| p.len()).unwrap_or(0));
        let applied = elements
            .iter()
            .map(|g| {
                let rep = g.rep();
                let mut row = Vec::with_capacity(d * placement.len());
                for p in &placement {
                    let q = rep.apply(p);
                    row.extend(q.iter().copied());
                }
                row
            })
            .collect();
        OrbitMatrixBuilder {
            d,
            edges: graph.edges().to_vec(),
            applied,
            inv_index: inv_index.to_vec(),
            placement,
        }
    }

    pub fn matrix_dims(&self) -> (usize, usize) {
        (self.edges.len(), self.d * self.placement.len())
    }

    /// Fills `m` with the orbit rigidity matrix of the gain assignment
    /// given by per-edge element indices.
    pub fn fill(&self, gains: &[u32], m: &mut DMatrix<f64>) {
        let d = self.d;
        m.fill(0.0);
        for (e, edge) in self.edges.iter().enumerate() {
            let g = gains[e] as usize;
            let ginv = self.inv_index[g] as usize;
            if edge.is_loop() {
                let v = edge.tail;
                for j in 0..d {
                    m[(e, v * d + j)] = 2.0 * self.placement[v][j]
                        - self.applied[g][v * d + j]
                        - self.applied[ginv][v * d + j];
                }
            } else {
                let (v, w) = (edge.tail, edge.head);
                for j in 0..d {
                    m[(e, v * d + j)] = self.placement[v][j] - self.applied[g][w * d + j];
                    m[(e, w * d + j)] = self.placement[w][j] - self.applied[ginv][v * d + j];
                }
            }
        }
    }
}

/// Kernel basis of the orbit rigidity matrix (the Γ-symmetric flexes).
pub fn symmetric_flex_basis(gg: &GainGraph, p: &Placement) -> Result<Vec<DVector<f64>>> {
    let m = orbit_rigidity_matrix(gg, p)?;
    Ok(nullspace(&m, 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::SymmetryGroup;

    fn c4_example() -> GainGraph {
        let c4 = SymmetryGroup::cyclic(4);
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
        let gains = [0u32, 1, 2, 1, 3]
            .iter()
            .map(|&k| c4.rotation(k).unwrap())
            .collect();
        GainGraph::new(g, c4, gains).unwrap()
    }

    #[test]
    fn loop_row_with_quarter_turn_is_twice_p() {
        // R + Rᵀ = 0 for a quarter turn, so the loop row is exactly 2p.
        let c4 = SymmetryGroup::cyclic(4);
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        let gg = GainGraph::new(g, c4.clone(), vec![c4.rotation(1).unwrap()]).unwrap();
        let p = vec![DVector::from_vec(vec![1.0, 0.0])];
        let m = orbit_rigidity_matrix(&gg, &p).unwrap();
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(m[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn identity_gain_edge_gives_classical_row() {
        let c4 = SymmetryGroup::cyclic(4);
        let g = MultiGraph::from_edges(2, &[(0, 1)]).unwrap();
        let gg = GainGraph::new(g, c4.clone(), vec![c4.identity()]).unwrap();
        let p = vec![
            DVector::from_vec(vec![3.0, 1.0]),
            DVector::from_vec(vec![1.0, 2.0]),
        ];
        let m = orbit_rigidity_matrix(&gg, &p).unwrap();
        let expect = [2.0, -1.0, -2.0, 1.0];
        for (j, &x) in expect.iter().enumerate() {
            assert!((m[(0, j)] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rotational_example_has_rank_five() {
        let gg = c4_example();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_placement(gg.group(), 3, &mut rng);
        let m = orbit_rigidity_matrix(&gg, &p).unwrap();
        assert_eq!(m.nrows(), 5);
        assert_eq!(m.ncols(), 6);
        assert_eq!(numerical_rank(&m, None), 5);
    }

    #[test]
    fn rotational_example_is_rigid_and_flex_variant_is_not() {
        let gg = c4_example();
        let report = is_symmetrically_rigid(&gg, 3, 11).unwrap();
        assert!(report.rigid);
        assert_eq!(report.rank, 5);
        assert_eq!(report.trivial_dim, 1);

        // removing the bc edge yields a flexible gain graph
        let c4 = gg.group().clone();
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (2, 2), (2, 0)]).unwrap();
        let gains = [0u32, 1, 1, 3].iter().map(|&k| c4.rotation(k).unwrap()).collect();
        let flex = GainGraph::new(g, c4, gains).unwrap();
        let report = is_symmetrically_rigid(&flex, 3, 11).unwrap();
        assert!(!report.rigid);
    }

    #[test]
    fn k44_quotient_under_dihedral_four_is_flexible() {
        // 2 vertices, 4 parallel edges carrying all four elements of the
        // order-4 dihedral group: the K₄,₄ cover is flexible.
        let d2 = SymmetryGroup::dihedral(2);
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1), (0, 1)]).unwrap();
        let gains = d2.enumerate().unwrap();
        let gg = GainGraph::new(g, d2, gains).unwrap();
        assert!(gg.is_valid());
        let report = is_symmetrically_rigid(&gg, 3, 5).unwrap();
        assert!(!report.rigid);
    }

    #[test]
    fn trivial_flex_basis_for_c4_is_rotational_field() {
        let c4 = SymmetryGroup::cyclic(4);
        let p = vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-3.0, 1.0]),
        ];
        let basis = trivial_flex_basis(&c4, &p);
        assert_eq!(basis.len(), 1);
        // the field must be v ↦ J p(v) up to scale
        let f = &basis[0];
        let expect = [-2.0, 1.0, -1.0, -3.0]; // J p with J = [[0,-1],[1,0]]
        let scale = f[0] / expect[0];
        for (j, &x) in expect.iter().enumerate() {
            assert!((f[j] - scale * x).abs() < 1e-9);
        }
    }

    #[test]
    fn dihedral_has_empty_trivial_basis() {
        let d3 = SymmetryGroup::dihedral(3);
        let p = vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-3.0, 1.0]),
        ];
        assert!(trivial_flex_basis(&d3, &p).is_empty());
    }

    #[test]
    fn translation_lattice_trivial_basis_is_constant_fields() {
        let t2 = SymmetryGroup::translations(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-3.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0]),
        ];
        let basis = trivial_flex_basis(&t2, &p);
        assert_eq!(basis.len(), 2);
        for f in &basis {
            // constant across vertices
            for v in 1..3 {
                assert!((f[0] - f[v * 2]).abs() < 1e-9);
                assert!((f[1] - f[v * 2 + 1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn numerical_rank_basics() {
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 4), None), 0);
        assert_eq!(numerical_rank(&DMatrix::<f64>::identity(5, 5), None), 5);
        // block matrix with an invertible d×d lower-right block gains
        // exactly d over its upper-left block
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DMatrix::<f64>::from_fn(3, 4, |_, _| rng.random_range(-5..5) as f64);
        let b = DMatrix::<f64>::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let mut block = DMatrix::<f64>::zeros(5, 6);
        block.view_mut((0, 0), (3, 4)).copy_from(&a);
        block
            .view_mut((3, 0), (2, 4))
            .copy_from(&DMatrix::from_fn(2, 4, |_, _| rng.random_range(-5..5) as f64));
        block.view_mut((3, 4), (2, 2)).copy_from(&b);
        assert_eq!(
            numerical_rank(&block, None),
            numerical_rank(&a, None) + 2
        );
    }

    #[test]
    fn symmetric_kernel_matches_orbit_nullity() {
        let gg = c4_example();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_placement(gg.group(), 3, &mut rng);
        let orbit = orbit_nullity(&gg, &p).unwrap();
        let cover = symmetric_kernel_dim(&gg, &p).unwrap();
        assert_eq!(orbit, cover);
    }

    #[test]
    fn single_loop_cover_is_four_cycle_with_kernel_one() {
        let c4 = SymmetryGroup::cyclic(4);
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        let gg = GainGraph::new(g, c4.clone(), vec![c4.rotation(1).unwrap()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_placement(&c4, 1, &mut rng);
        assert_eq!(symmetric_kernel_dim(&gg, &p).unwrap(), 1);
        assert_eq!(orbit_nullity(&gg, &p).unwrap(), 1);
        // the cover itself is a 4-cycle on 4 vertices
        let cover = gg.covering_graph().unwrap();
        assert_eq!(cover.graph.vertex_count(), 4);
        assert_eq!(cover.graph.edge_count(), 4);
        let m = covering_rigidity_matrix(&gg, &p).unwrap();
        assert_eq!(m.nrows(), 4);
        assert_eq!(m.ncols(), 8);
    }

    #[test]
    fn empty_edge_set_symmetric_kernel_is_full() {
        let c4 = SymmetryGroup::cyclic(4);
        let gg = GainGraph::new(MultiGraph::new(2), c4.clone(), vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_placement(&c4, 2, &mut rng);
        assert_eq!(symmetric_kernel_dim(&gg, &p).unwrap(), 4);
    }

    #[test]
    fn prop_gain_equivalence_on_random_small_graphs() {
        use crate::gain::GainMapSpace;
        let groups = [
            SymmetryGroup::cyclic(2),
            SymmetryGroup::cyclic(4),
            SymmetryGroup::klein3d(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut done = 0;
        while done < 30 {
            let group = &groups[rng.random_range(0..groups.len())];
            let n = rng.random_range(1..=4usize);
            let mut g = MultiGraph::new(n);
            let edges = rng.random_range(1..=(2 * n).min(6));
            for _ in 0..edges {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                g.add_edge(a, b).unwrap();
            }
            let space = match GainMapSpace::new(&g, group) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if space.count_u64() == Some(0) {
                continue;
            }
            let gg = space.sample(&mut rng);
            let p = random_placement(group, n, &mut rng);
            let orbit = orbit_nullity(&gg, &p).unwrap();
            let cover = symmetric_kernel_dim(&gg, &p).unwrap();
            assert_eq!(orbit, cover, "graph {:?}", gg.graph().edges());
            done += 1;
        }
    }

    #[test]
    fn rank_invariant_under_switching() {
        let gg = c4_example();
        let before = is_symmetrically_rigid(&gg, 3, 17).unwrap();
        let switched = gg.switch(1, &gg.group().rotation(2).unwrap()).unwrap();
        let after = is_symmetrically_rigid(&switched, 3, 17).unwrap();
        assert_eq!(before.rigid, after.rigid);
        assert_eq!(before.rank, after.rank);
    }

    #[test]
    fn builder_matches_direct_matrix() {
        use crate::gain::GainMapSpace;
        let gg = c4_example();
        let space = GainMapSpace::new(gg.graph(), gg.group()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_placement(gg.group(), 3, &mut rng);
        let builder =
            OrbitMatrixBuilder::new(gg.graph(), space.elements(), space.inverse_index(), p.clone());
        let mut idx = Vec::new();
        let count = space.count_u64().unwrap();
        for trial in [0u64, 7, count - 1] {
            let big = num_bigint::BigUint::from(trial);
            space.decode_into(&big, &mut idx);
            let gg2 = space.gain_graph_from_indices(&idx);
            let direct = orbit_rigidity_matrix(&gg2, &p).unwrap();
            let (r, c) = builder.matrix_dims();
            let mut fast = DMatrix::zeros(r, c);
            builder.fill(&idx, &mut fast);
            assert!((direct - fast).amax() < 1e-12);
        }
    }
}
