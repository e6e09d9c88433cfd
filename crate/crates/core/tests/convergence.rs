//! Estimator behaviour on uniformly refined meshes with known solutions.

use rdest::dual_system::DualSystem;
use rdest::estimator::{estimate, EstimateOptions};
use rdest::galerkin::{element_errors_squared, solve_problem};
use rdest::mesh::criss_cross_square;
use rdest::problem::{Preset, Problem};

fn sequence(kappa: f64, preset: Preset) -> Vec<(usize, f64, f64)> {
    let p = Problem::new(kappa, preset).unwrap();
    let mut mesh = criss_cross_square(2);
    let mut out = Vec::new();
    for _ in 0..4 {
        let (u, _) = solve_problem(&mesh, &p, 1e-12).unwrap();
        let err = element_errors_squared(&mesh, &p, &u).unwrap().iter().sum::<f64>().sqrt();
        let ds = DualSystem::build(&mesh, kappa);
        let rep = estimate(&mesh, &ds, &p, &u, &EstimateOptions::default()).unwrap();
        out.push((mesh.num_elements(), err, rep.total()));
        mesh = mesh.refine_uniform(2);
    }
    out
}

#[test]
fn energy_error_halves_per_uniform_refinement() {
    let s = sequence(1.0, Preset::SinSin);
    for w in s.windows(2) {
        let rate = w[1].1 / w[0].1;
        assert!(rate < 0.6 && rate > 0.4, "{rate}");
    }
}

#[test]
fn effectivity_is_bounded_for_all_kappa() {
    for kappa in [1.0, 1e2, 1e4] {
        for preset in [Preset::SinSin, Preset::Layer1d] {
            for (n, err, est) in sequence(kappa, preset) {
                let eff = est / err;
                assert!((1.0..20.0).contains(&eff), "κ={kappa} {preset} n={n}: {eff}");
            }
        }
    }
}
