//! Property tests for the module invariants: switching, covering
//! counts, enumeration totals, rank invariances, and the extension
//! lemmas on random instances.

use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use symrigid_core::constructions::{
    apply_gained_extension, assign_rigid_gains_2d, choose_gains_0ext, choose_gains_1ext,
    choose_gains_loop1ext, join_k_edges, random_tight_20, random_tight_21, ExtensionKind,
    ExtensionStep,
};
use symrigid_core::gain::{GainGraph, GainMapSpace};
use symrigid_core::graph::MultiGraph;
use symrigid_core::groups::{IsometryRep, SymmetryGroup};
use symrigid_core::rigidity::{
    is_symmetrically_rigid, numerical_rank, orbit_rigidity_matrix, random_placement,
};
use symrigid_core::sparsity::is_gain_tight;

fn arb_multigraph() -> impl Strategy<Value = MultiGraph> {
    (1usize..=5, proptest::collection::vec((0usize..5, 0usize..5), 1..10)).prop_map(
        |(n, raw_edges)| {
            let mut g = MultiGraph::new(n);
            for (a, b) in raw_edges {
                g.add_edge(a % n, b % n).unwrap();
            }
            g
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every enumerated gain map is valid, totals match the iterator,
    /// and the covering graph has |V|·|Γ| vertices and |E|·|Γ| edges.
    #[test]
    fn enumeration_and_covering_counts(g in arb_multigraph(), dihedral in proptest::bool::ANY) {
        let group = if dihedral { SymmetryGroup::dihedral(2) } else { SymmetryGroup::cyclic(4) };
        let space = GainMapSpace::new(&g, &group).unwrap();
        if let Some(total) = space.count_u64() {
            if total > 0 && total <= 2000 {
                let mut seen = 0u64;
                for gg in space.iter() {
                    prop_assert!(gg.is_valid());
                    seen += 1;
                }
                prop_assert_eq!(seen, total);
                let gg = space.unrank(&num_bigint::BigUint::ZERO);
                let cover = gg.covering_graph().unwrap();
                prop_assert_eq!(cover.graph.vertex_count(), g.vertex_count() * 4);
                prop_assert_eq!(cover.graph.edge_count(), g.edge_count() * 4);
            }
        }
    }

    /// Switching preserves validity, the balance of every vertex
    /// subset, and the rigidity verdict.
    #[test]
    fn switching_invariance(
        g in arb_multigraph(),
        vertex in 0usize..5,
        elem in 0u32..4,
        seed in 0u64..1000,
    ) {
        let group = SymmetryGroup::cyclic(4);
        let space = GainMapSpace::new(&g, &group).unwrap();
        prop_assume!(space.count_u64().is_some_and(|t| t > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gg = space.sample(&mut rng);
        let v = vertex % g.vertex_count();
        let switched = gg.switch(v, &group.rotation(elem).unwrap()).unwrap();
        prop_assert!(switched.is_valid());
        let n = g.vertex_count();
        for mask in 1u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            prop_assert_eq!(
                gg.is_balanced(Some(&subset)),
                switched.is_balanced(Some(&subset))
            );
        }
        let before = is_symmetrically_rigid(&gg, 3, 7).unwrap();
        let after = is_symmetrically_rigid(&switched, 3, 7).unwrap();
        prop_assert_eq!(before.rigid, after.rigid);
    }

    /// Parallel pairs and loops are never balanced, so balanced
    /// subgraphs of a valid gain graph are simple.
    #[test]
    fn balanced_subgraphs_are_simple(g in arb_multigraph(), seed in 0u64..1000) {
        let group = SymmetryGroup::dihedral(3);
        let space = GainMapSpace::new(&g, &group).unwrap();
        prop_assume!(space.count_u64().is_some_and(|t| t > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gg = space.sample(&mut rng);
        for (e, edge) in g.edges().iter().enumerate() {
            if edge.is_loop() {
                prop_assert!(!gg.is_balanced_edge_set(&[e]));
            }
            for (f, other) in g.edges().iter().enumerate().skip(e + 1) {
                if edge.key() == other.key() && !edge.is_loop() {
                    let _ = other;
                    prop_assert!(!gg.is_balanced_edge_set(&[e, f]));
                }
            }
        }
    }
}

/// The rank of the orbit matrix is invariant under conjugating the
/// whole group and the placement by a fixed isometry.
#[test]
fn rank_invariant_under_global_conjugation() {
    let c4 = SymmetryGroup::cyclic(4);
    let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
    let gains: Vec<_> = [0u32, 1, 2, 1, 3].iter().map(|&k| c4.rotation(k).unwrap()).collect();
    let gg = GainGraph::new(g.clone(), c4.clone(), gains.clone()).unwrap();

    let q = IsometryRep {
        linear: nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[0.6, -0.8, 0.8, 0.6], // rotation from a 3-4-5 triple
        ),
        translation: nalgebra::DVector::from_vec(vec![0.0, 0.0]),
    };
    let conj_reps: Vec<IsometryRep> = gains
        .iter()
        .map(|e| q.compose(&e.rep()).compose(&q.inverse()))
        .collect();
    let conj_group = SymmetryGroup::generated(&conj_reps).unwrap();
    let conj_gains: Vec<_> = conj_reps
        .iter()
        .map(|r| conj_group.snapped_element(r).unwrap())
        .collect();
    let conj_gg = GainGraph::new(g, conj_group.clone(), conj_gains).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_placement(&c4, 3, &mut rng);
    let p_conj: Vec<_> = p.iter().map(|x| q.apply(x)).collect();
    let rank = numerical_rank(&orbit_rigidity_matrix(&gg, &p).unwrap(), None);
    let rank_conj = numerical_rank(&orbit_rigidity_matrix(&conj_gg, &p_conj).unwrap(), None);
    assert_eq!(rank, rank_conj);
}

/// Verdicts are stable across seeds; a disagreement would surface as a
/// flagged report rather than a silent answer.
#[test]
fn rigidity_verdict_stable_across_seeds() {
    let c4 = SymmetryGroup::cyclic(4);
    let rigid = {
        let g = MultiGraph::from_edges(3, &[(1, 0), (0, 1), (1, 2), (2, 2), (2, 0)]).unwrap();
        let gains = [0u32, 1, 2, 1, 3].iter().map(|&k| c4.rotation(k).unwrap()).collect();
        GainGraph::new(g, c4.clone(), gains).unwrap()
    };
    let flexible = {
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        GainGraph::new(g, c4.clone(), vec![c4.identity(); 3]).unwrap()
    };
    for seed in 0..5u64 {
        let a = is_symmetrically_rigid(&rigid, 3, seed).unwrap();
        assert!(a.rigid && !a.flagged, "seed {seed}");
        let b = is_symmetrically_rigid(&flexible, 3, seed).unwrap();
        assert!(!b.rigid, "seed {seed}");
    }
}

/// Gained 0-, 1- and loop-1-extensions preserve rigidity on random
/// rigid seeds over rotational and dihedral groups.
#[test]
fn gained_extensions_preserve_rigidity() {
    let groups =
        [SymmetryGroup::cyclic(4), SymmetryGroup::cyclic(5), SymmetryGroup::dihedral(3)];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for trial in 0..200 {
        let group = &groups[trial % groups.len()];
        let n = rng.random_range(2..=5usize);
        // dihedral groups have k(Γ) = 0 and take (2,0)-tight seeds
        let g = if group.trivial_flex_dimension() == 1 {
            random_tight_21(&mut rng, n, usize::MAX)
        } else {
            random_tight_20(&mut rng, n, usize::MAX)
        };
        let Ok(gg) = assign_rigid_gains_2d(&g, group) else { continue };
        // pick a random extension and its chosen gains
        let step = match rng.random_range(0..3) {
            0 => {
                let (v1, v2) = (rng.random_range(0..n), rng.random_range(0..n));
                let gains = choose_gains_0ext(&gg, v1, v2).unwrap();
                ExtensionStep::new(ExtensionKind::Zero, vec![v1, v2], vec![]).with_gains(gains)
            }
            1 => {
                let e = rng.random_range(0..gg.graph().edge_count());
                let edge = gg.graph().edges()[e];
                let v3 = rng.random_range(0..n);
                match choose_gains_1ext(&gg, edge.tail, edge.head, v3, e) {
                    Ok(gains) => {
                        ExtensionStep::new(ExtensionKind::One, vec![edge.tail, edge.head, v3], vec![e])
                            .with_gains(gains)
                    }
                    Err(_) => continue,
                }
            }
            _ => {
                let v = rng.random_range(0..n);
                let gains = choose_gains_loop1ext(&gg, v).unwrap();
                ExtensionStep::new(ExtensionKind::LoopOne, vec![v], vec![]).with_gains(gains)
            }
        };
        let extended = apply_gained_extension(&gg, &step).unwrap();
        let report = is_symmetrically_rigid(&extended, 3, trial as u64).unwrap();
        assert!(report.rigid, "extension broke rigidity at trial {trial}");
        checked += 1;
    }
    assert!(checked >= 150, "only {checked} extensions checked");
}

/// A k(Γ)-edge join is rigid iff both parts are (50 random pairs).
#[test]
fn join_rigidity_is_conjunction() {
    let c4 = SymmetryGroup::cyclic(4);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for trial in 0..50 {
        let n1 = rng.random_range(3..=4usize);
        let n2 = rng.random_range(3..=4usize);
        let left_rigid = rng.random_bool(0.5);
        let right_rigid = rng.random_bool(0.5);
        let make = |rigid: bool, n: usize, rng: &mut ChaCha8Rng| -> GainGraph {
            if rigid {
                let g = random_tight_21(rng, n, usize::MAX);
                assign_rigid_gains_2d(&g, &c4).unwrap()
            } else {
                // a spanning tree is always flexible
                let mut g = MultiGraph::new(n);
                for v in 1..n {
                    g.add_edge(v - 1, v).unwrap();
                }
                GainGraph::new(g, c4.clone(), vec![c4.identity(); n - 1]).unwrap()
            }
        };
        let a = make(left_rigid, n1, &mut rng);
        let b = make(right_rigid, n2, &mut rng);
        let joined = join_k_edges(&a, &b, 1).unwrap();
        let report = is_symmetrically_rigid(&joined, 3, trial as u64).unwrap();
        assert_eq!(
            report.rigid,
            left_rigid && right_rigid,
            "trial {trial}: parts ({left_rigid},{right_rigid})"
        );
    }
}

/// Minimal rigidity coincides with (2,3,1)-gain-tightness over the
/// five-fold rotation group as well.
#[test]
fn minimal_rigidity_matches_gain_tightness_c5() {
    let c5 = SymmetryGroup::cyclic(5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut done = 0;
    while done < 40 {
        let n = rng.random_range(3..=5usize);
        let mut g = MultiGraph::new(n);
        for _ in 0..2 * n - 1 {
            g.add_edge(rng.random_range(0..n), rng.random_range(0..n)).unwrap();
        }
        let Ok(space) = GainMapSpace::new(&g, &c5) else { continue };
        if space.count_u64() == Some(0) {
            continue;
        }
        let mut sample_rng = ChaCha8Rng::seed_from_u64(done as u64);
        let gg = space.sample(&mut sample_rng);
        let rigid = is_symmetrically_rigid(&gg, 3, done as u64).unwrap().rigid;
        let tight = is_gain_tight(&gg, 2, 3, 1).unwrap();
        assert_eq!(rigid, tight, "graph {:?}", gg.graph().edges());
        done += 1;
    }
}
