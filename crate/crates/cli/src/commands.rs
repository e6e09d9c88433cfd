use std::fs;
use std::path::Path;

use rdest::adapt::{adaptive_loop, robustness_study, AdaptError, RunReport};
use rdest::dual_system::DualSystem;
use rdest::estimator::{estimate, EstimateOptions};
use rdest::galerkin::{element_errors_squared, solve_problem};
use rdest::mesh::write_mesh;
use rdest::report::{indicator_csv, iterations_csv, solution_csv, study_csv, to_json, Summary};
use rdest::verify::{run_suite, VerifyOptions};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::CliError;

pub fn run(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", cfg.out.display())))?;
    match command {
        Command::Solve(_) => solve(cfg),
        Command::Estimate(_) => estimate_cmd(cfg),
        Command::Adapt(_) => adapt(cfg),
        Command::Study(_) => study(cfg),
        Command::Verify(_) => verify(cfg),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = to_json(value).map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
    write(dir, name, &text)
}

fn dofs(mesh: &rdest::mesh::Mesh) -> usize {
    (0..mesh.num_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)).count()
}

fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.problem(cfg.kappas[0]);
    let mesh = &cfg.mesh;
    let (u, stats) = solve_problem(mesh, &p, cfg.tol).map_err(|e| CliError::Numerical(e.to_string()))?;
    let error = element_errors_squared(mesh, &p, &u).map(|v| v.iter().sum::<f64>().sqrt());
    #[derive(Serialize)]
    struct SolveSummary {
        kappa: f64,
        preset: String,
        mesh: String,
        elements: usize,
        dofs: usize,
        solver_iterations: usize,
        relative_residual: f64,
        error: Option<f64>,
    }
    write(&cfg.out, "solution.csv", &solution_csv(mesh, &u))?;
    write_json(
        &cfg.out,
        "summary.json",
        &SolveSummary {
            kappa: p.kappa,
            preset: p.preset.to_string(),
            mesh: cfg.mesh_source.clone(),
            elements: mesh.num_elements(),
            dofs: dofs(mesh),
            solver_iterations: stats.iterations,
            relative_residual: stats.relative_residual,
            error,
        },
    )?;
    println!("solved: {} dofs, {} CG iterations", dofs(mesh), stats.iterations);
    Ok(())
}

fn estimate_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.problem(cfg.kappas[0]);
    let mesh = &cfg.mesh;
    let (u, stats) = solve_problem(mesh, &p, cfg.tol).map_err(|e| CliError::Numerical(e.to_string()))?;
    let ds = DualSystem::build(mesh, p.kappa);
    let rep = estimate(mesh, &ds, &p, &u, &EstimateOptions { oscillation_depth: Some(cfg.depth) })
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let error = element_errors_squared(mesh, &p, &u).map(|v| v.iter().sum::<f64>().sqrt());
    let mut summary = Summary::from_report(&rep, &p.preset.to_string(), mesh.num_elements(), dofs(mesh), error);
    summary.solver_iterations = Some(stats.iterations);
    write(&cfg.out, "indicators.csv", &indicator_csv(&rep))?;
    write_json(&cfg.out, "summary.json", &summary)?;
    println!("estimator {:.6e}, oscillation {:.6e}", rep.estimator, rep.oscillation);
    Ok(())
}

fn write_run(cfg: &RunConfig, run: &RunReport) -> Result<(), CliError> {
    write(&cfg.out, "adapt.csv", &iterations_csv(&run.iterations))?;
    write_json(&cfg.out, "summary.json", run)?;
    if let Some(mesh) = &run.final_mesh {
        write(&cfg.out, "final_mesh.txt", &write_mesh(mesh))?;
    }
    Ok(())
}

fn adapt(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.problem(cfg.kappas[0]);
    match adaptive_loop(&cfg.mesh, &p, &cfg.adapt_options()) {
        Ok(run) => {
            write_run(cfg, &run)?;
            let last = run.iterations.last().expect("at least one iteration");
            println!("{} iterations, final dofs {}, estimator {:.6e}", run.iterations.len(), last.dofs, last.estimator);
            Ok(())
        }
        Err(AdaptError::Solve { iteration, source, partial }) => {
            write_run(cfg, &partial)?;
            Err(CliError::Numerical(format!("iteration {iteration}: {source} (partial results written)")))
        }
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

fn study(cfg: &RunConfig) -> Result<(), CliError> {
    let kappas = if cfg.kappa_given { cfg.kappas.clone() } else { vec![1.0, 1e2, 1e4] };
    let p = cfg.problem(kappas[0]);
    let report = match robustness_study(&cfg.mesh, &p, &kappas, &cfg.adapt_options()) {
        Ok(r) => r,
        Err(AdaptError::Solve { iteration, source, partial }) => {
            write_run(cfg, &partial)?;
            return Err(CliError::Numerical(format!(
                "κ = {}, iteration {iteration}: {source} (partial run written)",
                partial.problem.kappa
            )));
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    #[derive(Serialize)]
    struct PerKappa {
        kappa: f64,
        iterations: usize,
        final_dofs: usize,
        min_effectivity: Option<f64>,
        max_effectivity: Option<f64>,
        reference_error: bool,
    }
    #[derive(Serialize)]
    struct StudySummary {
        preset: String,
        effectivity_spread: f64,
        classic_effectivity_spread: f64,
        runs: Vec<PerKappa>,
    }
    let fold = |run: &RunReport, f: fn(f64, f64) -> f64| run.iterations.iter().filter_map(|r| r.effectivity).reduce(f);
    let summary = StudySummary {
        preset: p.preset.to_string(),
        effectivity_spread: report.effectivity_spread,
        classic_effectivity_spread: report.classic_spread,
        runs: report
            .runs
            .iter()
            .map(|run| PerKappa {
                kappa: run.problem.kappa,
                iterations: run.iterations.len(),
                final_dofs: run.iterations.last().map_or(0, |r| r.dofs),
                min_effectivity: fold(run, f64::min),
                max_effectivity: fold(run, f64::max),
                reference_error: run.reference_error,
            })
            .collect(),
    };
    write(&cfg.out, "study.csv", &study_csv(&report))?;
    write_json(&cfg.out, "study.json", &summary)?;
    println!(
        "{} rows, effectivity spread {:.3} (classical {:.3})",
        report.rows.len(),
        report.effectivity_spread,
        report.classic_spread
    );
    Ok(())
}

fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let kappas = if cfg.kappa_given { cfg.kappas.clone() } else { vec![1.0, 1e2, 1e4] };
    let opts = VerifyOptions { seed: cfg.seed, depth: cfg.depth.clamp(1, 2), ..VerifyOptions::default() };
    let report = run_suite(&cfg.mesh, &kappas, &opts).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_json(&cfg.out, "verify.json", &report)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAILED {:?} check {} (κ = {:?}): measured {:e}, threshold {:e}",
            c.kind, c.name, c.kappa, c.measured, c.threshold
        );
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!("verify: {passed}/{} checks passed", report.checks.len());
    if report.identities_passed {
        Ok(())
    } else {
        Err(CliError::Numerical("identity checks failed (see verify.json)".into()))
    }
}
