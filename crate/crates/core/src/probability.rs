//! Exact and Monte-Carlo computation of the probability that a random
//! gain map is symmetrically rigid.
//!
//! One integer placement per (graph, group) is shared across every gain
//! map; full rank there is a rigidity certificate, while maps judged
//! flexible are re-verified at two further placements before being
//! counted — the rare rank-deficient verdicts are the ones exposed to
//! an unlucky placement. Counts are exact big integers and the
//! enumeration index space splits into contiguous blocks, so worker
//! counts never change the result.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gain::GainMapSpace;
use crate::graph::MultiGraph;
use crate::groups::SymmetryGroup;
use crate::rigidity::{
    numerical_rank, random_placement, trivial_flex_dim_at, OrbitMatrixBuilder,
};
use crate::{Error, Result};
use rand::SeedableRng;

/// Default cap on exhaustive enumeration (2²⁴ gain maps).
pub const DEFAULT_EXACT_CAP: u64 = 1 << 24;

fn biguint_to_string<S: serde::Serializer>(
    v: &BigUint,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn biguint_from_string<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<BigUint, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

/// Result of a probability computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbabilityReport {
    /// Total number of gain maps of the graph over the group.
    #[serde(serialize_with = "biguint_to_string", deserialize_with = "biguint_from_string")]
    pub total: BigUint,
    /// Number of gain maps actually tested.
    pub tested: u64,
    /// Number of maps that lifted to a rigid framework.
    pub rigid: u64,
    /// Point estimate of P(G, Γ).
    pub estimate: f64,
    pub exact: bool,
    /// 95% normal-approximation half width (zero for exact runs).
    pub ci_half_width: f64,
    pub seed: u64,
    pub workers: usize,
    /// Contiguous index blocks the enumeration was split into.
    pub partition: Vec<(u64, u64)>,
}

impl ProbabilityReport {
    /// Exact value as a rational number (exact runs only).
    pub fn fraction(&self) -> Option<Ratio<BigUint>> {
        if self.exact && self.total > BigUint::ZERO {
            Some(Ratio::new(BigUint::from(self.rigid), self.total.clone()))
        } else {
            None
        }
    }
}

/// Shared placement data for testing many gain maps of one graph.
pub struct TestContext {
    builders: Vec<OrbitMatrixBuilder>,
    targets: Vec<usize>,
    rows: usize,
    cols: usize,
}

impl TestContext {
    pub fn new(space: &GainMapSpace, seed: u64) -> TestContext {
        let group = space.group();
        let n = space.graph().vertex_count();
        let d = group.dim();
        let mut builders = Vec::new();
        let mut targets = Vec::new();
        for extra in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(extra));
            let p = random_placement(group, n, &mut rng);
            let trivial = trivial_flex_dim_at(group, &p);
            targets.push(d * n - trivial);
            builders.push(OrbitMatrixBuilder::new(
                space.graph(),
                space.elements(),
                space.inverse_index(),
                p,
            ));
        }
        TestContext { builders, targets, rows: space.graph().edge_count(), cols: d * n }
    }

    pub fn scratch(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.rows, self.cols)
    }

    /// Rigidity of one assignment: certificate at the primary
    /// placement, re-checks at the backups for flexible verdicts.
    pub fn is_rigid(&self, gains: &[u32], scratch: &mut DMatrix<f64>) -> bool {
        for (builder, &target) in self.builders.iter().zip(&self.targets) {
            builder.fill(gains, scratch);
            if numerical_rank(scratch, None) == target {
                return true;
            }
        }
        false
    }
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        Ok(job())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::DegenerateParameter(format!("thread pool: {e}")))?;
        Ok(pool.install(job))
    }
}

fn blocks(total: u64, workers: usize) -> Vec<(u64, u64)> {
    let pieces = (workers.max(1) * 8) as u64;
    let size = total.div_ceil(pieces).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let len = size.min(total - start);
        out.push((start, len));
        start += len;
    }
    out
}

/// Tests every gain map of the graph; errors above the enumeration cap.
pub fn probability_exact(
    graph: &MultiGraph,
    group: &SymmetryGroup,
    workers: usize,
    seed: u64,
) -> Result<ProbabilityReport> {
    probability_exact_capped(graph, group, workers, seed, DEFAULT_EXACT_CAP)
}

pub fn probability_exact_capped(
    graph: &MultiGraph,
    group: &SymmetryGroup,
    workers: usize,
    seed: u64,
    cap: u64,
) -> Result<ProbabilityReport> {
    let space = GainMapSpace::new(graph, group)?;
    let total_big = space.count().clone();
    let total = space.count_u64().filter(|&t| t <= cap).ok_or_else(|| {
        Error::EnumerationCapExceeded { count: total_big.to_string(), cap }
    })?;
    let ctx = TestContext::new(&space, seed);
    let partition = blocks(total, workers.max(1));
    let rigid: u64 = run_pool(workers, || {
        partition
            .par_iter()
            .map(|&(start, len)| {
                let mut scratch = ctx.scratch();
                let mut idx_buf: Vec<u32> = Vec::new();
                let mut count = 0u64;
                for i in start..start + len {
                    space.decode_into(&BigUint::from(i), &mut idx_buf);
                    if ctx.is_rigid(&idx_buf, &mut scratch) {
                        count += 1;
                    }
                }
                count
            })
            .sum()
    })?;
    let estimate = if total == 0 { 0.0 } else { rigid as f64 / total as f64 };
    Ok(ProbabilityReport {
        total: total_big,
        tested: total,
        rigid,
        estimate,
        exact: true,
        ci_half_width: 0.0,
        seed,
        workers,
        partition,
    })
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Uniform independent samples from the gain-map space; per-sample
/// counter-based seeding keeps the result worker-count independent.
pub fn probability_monte_carlo(
    graph: &MultiGraph,
    group: &SymmetryGroup,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ProbabilityReport> {
    if samples == 0 {
        return Err(Error::DegenerateParameter("need at least one sample".into()));
    }
    let space = GainMapSpace::new(graph, group)?;
    if space.count() == &BigUint::ZERO {
        return Err(Error::DegenerateParameter(
            "the graph admits no gain map over this group".into(),
        ));
    }
    let ctx = TestContext::new(&space, seed);
    let partition = blocks(samples, workers.max(1));
    let rigid: u64 = run_pool(workers, || {
        partition
            .par_iter()
            .map(|&(start, len)| {
                let mut scratch = ctx.scratch();
                let mut idx_buf: Vec<u32> = Vec::new();
                let mut count = 0u64;
                for i in start..start + len {
                    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(i)));
                    space.sample_into(&mut rng, &mut idx_buf);
                    if ctx.is_rigid(&idx_buf, &mut scratch) {
                        count += 1;
                    }
                }
                count
            })
            .sum()
    })?;
    let p = rigid as f64 / samples as f64;
    let half = 1.96 * (p * (1.0 - p) / samples as f64).sqrt();
    Ok(ProbabilityReport {
        total: space.count().clone(),
        tested: samples,
        rigid,
        estimate: p,
        exact: false,
        ci_half_width: half,
        seed,
        workers,
        partition,
    })
}

/// Exact-equality verdicts for the probability identities under
/// extension and join operations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceVerdicts {
    /// A new vertex joined to d distinct vertices preserves P exactly.
    pub zero_ext_distinct: bool,
    /// d = 2: a 0-extension with both edges at one vertex preserves P.
    pub zero_ext_parallel: bool,
    /// d = 2: a loop-1-extension preserves P.
    pub loop_one_ext: bool,
    /// Joining two copies by k(Γ) independent edges multiplies P.
    pub product_rule: bool,
}

impl InvarianceVerdicts {
    pub fn all_hold(&self) -> bool {
        self.zero_ext_distinct && self.zero_ext_parallel && self.loop_one_ext && self.product_rule
    }
}

fn fractions_equal(a: &ProbabilityReport, b: &ProbabilityReport) -> bool {
    // rigid_a / total_a == rigid_b / total_b, cross-multiplied exactly
    BigUint::from(a.rigid) * &b.total == BigUint::from(b.rigid) * &a.total
}

/// Checks the extension/join probability identities on `graph` by exact
/// enumeration (the graph must be small enough for the derived graphs
/// to stay below the cap).
pub fn probability_invariance_suite(
    graph: &MultiGraph,
    group: &SymmetryGroup,
    workers: usize,
    seed: u64,
) -> Result<InvarianceVerdicts> {
    let d = group.dim();
    let n = graph.vertex_count();
    if n < d {
        return Err(Error::DegenerateParameter(format!(
            "invariance suite needs at least d = {d} vertices"
        )));
    }
    let base = probability_exact(graph, group, workers, seed)?;

    // vertex joined to d distinct vertices
    let mut distinct = graph.clone();
    let v0 = distinct.add_vertex();
    for v in 0..d {
        distinct.add_edge(v0, v)?;
    }
    let zero_ext_distinct =
        fractions_equal(&base, &probability_exact(&distinct, group, workers, seed)?);

    let (zero_ext_parallel, loop_one_ext) = if d == 2 {
        let mut parallel = graph.clone();
        let v0 = parallel.add_vertex();
        parallel.add_edge(v0, 0)?;
        parallel.add_edge(v0, 0)?;
        let a = fractions_equal(&base, &probability_exact(&parallel, group, workers, seed)?);

        let mut looped = graph.clone();
        let v0 = looped.add_vertex();
        looped.add_edge(v0, 0)?;
        looped.add_edge(v0, v0)?;
        let b = fractions_equal(&base, &probability_exact(&looped, group, workers, seed)?);
        (a, b)
    } else {
        (true, true)
    };

    // product rule under a k(Γ)-edge join of two copies
    let k = group.trivial_flex_dimension();
    let joined = crate::constructions::join_multigraphs(graph, graph, k);
    let joined_report = probability_exact(&joined, group, workers, seed)?;
    let lhs = BigUint::from(joined_report.rigid) * &base.total * &base.total;
    let rhs = BigUint::from(base.rigid) * BigUint::from(base.rigid) * &joined_report.total;
    let product_rule = lhs == rhs;

    Ok(InvarianceVerdicts { zero_ext_distinct, zero_ext_parallel, loop_one_ext, product_rule })
}

/// P(G,Γ) estimate that picks exact enumeration when the space is small
/// enough and Monte Carlo otherwise.
pub fn probability_auto(
    graph: &MultiGraph,
    group: &SymmetryGroup,
    samples: u64,
    workers: usize,
    seed: u64,
) -> Result<ProbabilityReport> {
    let space = GainMapSpace::new(graph, group)?;
    match space.count().to_u64() {
        Some(t) if t <= DEFAULT_EXACT_CAP => probability_exact(graph, group, workers, seed),
        _ => probability_monte_carlo(graph, group, samples, seed, workers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::SymmetryGroup;

    fn c4() -> SymmetryGroup {
        SymmetryGroup::cyclic(4)
    }

    #[test]
    fn single_loop_is_always_rigid() {
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        let report = probability_exact(&g, &c4(), 1, 0).unwrap();
        assert_eq!(report.tested, 3);
        assert_eq!(report.rigid, 3);
        assert_eq!(report.estimate, 1.0);
        assert!(report.exact);
    }

    #[test]
    fn rotational_example_probability() {
        // the 3-vertex example graph: 576 maps, exact run
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
        let report = probability_exact(&g, &c4(), 2, 0).unwrap();
        assert_eq!(report.tested, 12 * 4 * 3 * 4);
        // the loop and the bundle leave no flexible assignment here
        assert_eq!(report.rigid, report.tested);
        // worker count does not change the exact counts
        let again = probability_exact(&g, &c4(), 1, 0).unwrap();
        assert_eq!(report.rigid, again.rigid);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_agrees() {
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
        let exact = probability_exact(&g, &c4(), 2, 0).unwrap();
        let mc1 = probability_monte_carlo(&g, &c4(), 4000, 7, 2).unwrap();
        let mc2 = probability_monte_carlo(&g, &c4(), 4000, 7, 1).unwrap();
        assert_eq!(mc1.rigid, mc2.rigid);
        assert!((mc1.estimate - exact.estimate).abs() <= 3.0 * mc1.ci_half_width + 1e-12);
    }

    #[test]
    fn certain_graph_gives_zero_width_interval() {
        let mut g = MultiGraph::new(1);
        g.add_edge(0, 0).unwrap();
        let mc = probability_monte_carlo(&g, &c4(), 500, 3, 1).unwrap();
        assert_eq!(mc.estimate, 1.0);
        assert_eq!(mc.ci_half_width, 0.0);
    }

    #[test]
    fn cap_exceeded_suggests_monte_carlo() {
        let g = MultiGraph::from_edges(
            5,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
        )
        .unwrap();
        let err = probability_exact_capped(&g, &c4(), 1, 0, 1000).unwrap_err();
        assert!(matches!(err, Error::EnumerationCapExceeded { .. }));
    }

    #[test]
    fn invariance_suite_on_small_graph() {
        // 3-vertex gain graph with a loop and a double bundle: 576 maps
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
        let verdicts = probability_invariance_suite(&g, &c4(), 2, 0).unwrap();
        assert!(verdicts.all_hold(), "{verdicts:?}");
    }

    #[test]
    fn simple_graphs_never_reach_probability_one() {
        // identity gains on a simple graph are flexible, so P < 1
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let report = probability_exact(&g, &c4(), 1, 0).unwrap();
        assert!(report.rigid < report.tested);
    }
}
