use proptest::prelude::*;

use flexsim_core::graph::{BipartiteGraph, GraphKind, GraphSpec};
use flexsim_core::properties::{
    deficiency_of_subset, optimal_subcriticality_load, sparsity_deficiency, uniform_subcriticality_metric,
    SparsityMode, DEFAULT_ENUMERATION_CAP,
};

fn small_graph() -> impl Strategy<Value = BipartiteGraph> {
    let kind = prop_oneof![
        (3usize..10, 2usize..8)
            .prop_flat_map(|(n, m)| (Just(n), Just(m), (m / 2).max(1)..=m))
            .prop_map(|(n, m, c)| GraphKind::FixedServerDegree { n: n.max(6), m, c }),
        (2usize..10, 1usize..8, 0.2f64..0.9).prop_map(|(n, m, p)| GraphKind::Inhomogeneous { n, m, p: vec![p; m] }),
        (2usize..10, 1usize..8, 0.2f64..0.8).prop_map(|(n, m, radius)| GraphKind::Geometric { n, m, radius }),
    ];
    (kind, 0u64..500).prop_map(|(k, seed)| GraphSpec::new(k, seed).build().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn uniform_dominates_optimal(g in small_graph(), d in 1usize..4) {
        let uniform = uniform_subcriticality_metric(&g, d).value;
        let optimal = optimal_subcriticality_load(&g, d, DEFAULT_ENUMERATION_CAP).unwrap().load;
        prop_assert!(uniform >= optimal - 1e-9, "{} < {}", uniform, optimal);
        if g.is_connected() {
            prop_assert!(optimal >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn sampled_lower_bounds_exact(g in small_graph(), eps in 0.02f64..0.5, budget in 1u64..64, seed in 0u64..100) {
        let exact = sparsity_deficiency(&g, eps, SparsityMode::Exact, 0, 0).unwrap();
        let sampled = sparsity_deficiency(&g, eps, SparsityMode::Sampled, budget, seed).unwrap();
        prop_assert!(sampled.deficiency <= exact.deficiency + 1e-12);
        prop_assert!(!exact.is_lower_bound());
        let witness = deficiency_of_subset(&g, eps, &sampled.witness_subset);
        prop_assert!((witness - sampled.deficiency).abs() < 1e-12);
    }

    #[test]
    fn full_budget_sampling_is_exact(g in small_graph(), eps in 0.02f64..0.5) {
        let exact = sparsity_deficiency(&g, eps, SparsityMode::Exact, 0, 0).unwrap();
        let budget = 1u64 << g.n_servers();
        let sampled = sparsity_deficiency(&g, eps, SparsityMode::Sampled, budget, 1).unwrap();
        prop_assert_eq!(sampled.deficiency, exact.deficiency);
    }

    #[test]
    fn complement_has_same_deficiency(g in small_graph(), eps in 0.02f64..0.5, mask in any::<u32>()) {
        let n = g.n_servers();
        let subset: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let complement: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 0).collect();
        prop_assert_eq!(deficiency_of_subset(&g, eps, &subset), deficiency_of_subset(&g, eps, &complement));
    }

    #[test]
    fn deficiency_shrinks_as_epsilon_grows(g in small_graph(), e1 in 0.02f64..0.5, e2 in 0.02f64..0.5) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = sparsity_deficiency(&g, lo, SparsityMode::Exact, 0, 0).unwrap().deficiency;
        let b = sparsity_deficiency(&g, hi, SparsityMode::Exact, 0, 0).unwrap().deficiency;
        prop_assert!(b <= a);
    }
}
