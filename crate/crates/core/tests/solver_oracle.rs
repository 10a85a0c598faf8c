use mssp_core::model::ProblemInstance;
use mssp_core::solver::{brute_force_optima, enumerate_optima, greedy_lbf_lif};
use mssp_core::{objective_score, validate_solution};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = ProblemInstance> {
    (
        prop::collection::vec(1u32..=6, 1..=3),
        prop::collection::vec(1u32..=5, 1..=6),
    )
        .prop_map(|(bins, items)| {
            // coarse grids create lots of ties, which is where symmetry
            // pruning could go wrong
            let bins = bins.into_iter().map(|w| w * 5).collect();
            let items = items.into_iter().map(|z| z * 5).collect();
            ProblemInstance::new("prop", bins, items).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn enumeration_matches_brute_force(p in small_instance()) {
        let fast = enumerate_optima(&p, 10_000).unwrap();
        let oracle = brute_force_optima(&p).unwrap();
        prop_assert!(!fast.truncated);
        prop_assert_eq!(fast.optimal_score, oracle.optimal_score);
        prop_assert_eq!(fast.keys(&p), oracle.keys(&p));
        for s in &fast.solutions {
            prop_assert!(validate_solution(&p, s).unwrap().is_ok());
            prop_assert_eq!(objective_score(&p, s).unwrap(), fast.optimal_score);
        }
    }

    #[test]
    fn greedy_never_beats_optimum(p in small_instance()) {
        let g = objective_score(&p, &greedy_lbf_lif(&p)).unwrap();
        let opt = enumerate_optima(&p, 1).unwrap().optimal_score;
        prop_assert!(g <= opt);
        prop_assert!(validate_solution(&p, &greedy_lbf_lif(&p)).unwrap().is_ok());
    }

    #[test]
    fn enumeration_is_deterministic(p in small_instance()) {
        prop_assert_eq!(enumerate_optima(&p, 100).unwrap(), enumerate_optima(&p, 100).unwrap());
    }
}
