//! Randomized invariants over meshes, κ and data.

use proptest::prelude::*;
use rdest::adapt::dorfler_mark;
use rdest::dual_system::DualSystem;
use rdest::mesh::{parse_mesh, perturbed_square, write_mesh};
use rdest::verify::{biorthogonality_defect, invariance_defect};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn identities_hold_on_random_meshes(n in 2usize..6, amp in 0.0f64..0.28, seed in any::<u64>(), log_k in -1.0f64..5.0) {
        let mesh = perturbed_square(n, amp, seed);
        let kappa = 10f64.powf(log_k);
        let ds = DualSystem::build(&mesh, kappa);
        // Evaluating λ_{p,θ} at Cartesian points loses ~ε/θ ≈ ε·κh digits.
        prop_assert!(biorthogonality_defect(&mesh, &ds) <= 1e-11 * (kappa / 1e4).max(1.0));
        let (d, f) = invariance_defect(&mesh, &ds, 2, seed);
        prop_assert!(d <= 1e-9 && f <= 1e-9, "{d:e} {f:e}");
    }

    #[test]
    fn refinement_conserves_area(n in 2usize..5, seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let mesh = perturbed_square(n, 0.2, seed);
        let marked: Vec<usize> = picks.iter().map(|i| i.index(mesh.num_elements())).collect();
        let fine = mesh.bisect(&marked);
        prop_assert!(fine.audit().is_ok());
        prop_assert!(fine.num_elements() > mesh.num_elements());
        prop_assert!((fine.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_text_round_trips(n in 2usize..5, seed in any::<u64>()) {
        let mesh = perturbed_square(n, 0.25, seed);
        let back = parse_mesh(&write_mesh(&mesh)).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.elements(), mesh.elements());
    }

    #[test]
    fn dorfler_marks_enough(values in prop::collection::vec(0.0f64..10.0, 1..60), theta in 0.05f64..1.0) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let marked = dorfler_mark(&values, theta).unwrap();
        let total: f64 = values.iter().map(|v| v * v).sum();
        let got: f64 = marked.iter().map(|&i| values[i] * values[i]).sum();
        prop_assert!(got >= theta * theta * total * (1.0 - 1e-12));
        // Removing the smallest marked value must break the criterion.
        let smallest = marked.iter().map(|&i| values[i] * values[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(got - smallest < theta * theta * total);
    }
}
