//! SOLVE → ESTIMATE → MARK → REFINE.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dual_system::DualSystem;
use crate::estimator::{estimate, EstimateOptions, DEFAULT_DEPTH};
use crate::galerkin::{element_errors_squared, energy_norm, solve_problem, DiscreteFunction};
use crate::linalg::SolveError;
use crate::mesh::{prolong, Mesh};
use crate::problem::Problem;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("marking fraction must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("no indicators to mark")]
    EmptyIndicators,
    #[error("solver failed in iteration {iteration}: {source}")]
    Solve {
        iteration: usize,
        source: SolveError,
        /// Everything recorded before the failure.
        partial: Box<RunReport>,
    },
}

/// Greedy Dörfler marking: the vertices with the largest indicators until
/// `Σ_M E² ≥ θ² Σ E²`, in decreasing order of `E` (ties by index).
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>, AdaptError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(AdaptError::InvalidTheta(theta));
    }
    if indicators.is_empty() {
        return Err(AdaptError::EmptyIndicators);
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let total: f64 = indicators.iter().map(|e| e * e).sum();
    let goal = theta * theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for z in order {
        if acc >= goal && !marked.is_empty() {
            break;
        }
        acc += indicators[z] * indicators[z];
        marked.push(z);
    }
    Ok(marked)
}

/// Union of the stars of `vertices`, sorted.
pub fn star_elements(mesh: &Mesh, vertices: &[usize]) -> Vec<usize> {
    let mut flag = vec![false; mesh.num_elements()];
    for &z in vertices {
        for &e in mesh.vertex_elements(z) {
            flag[e] = true;
        }
    }
    (0..flag.len()).filter(|&e| flag[e]).collect()
}

/// Fraction of `elements` whose centroid lies within `width` of the boundary.
pub fn boundary_band_fraction(mesh: &Mesh, elements: &[usize], width: f64) -> f64 {
    if elements.is_empty() {
        return 0.0;
    }
    let inside = elements.iter().filter(|&&e| mesh.boundary_distance(mesh.triangle(e).centroid()) <= width).count();
    inside as f64 / elements.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptOptions {
    pub theta_mark: f64,
    /// Stop once the number of free nodes exceeds this.
    pub max_dof: usize,
    /// Subdivision depth of the oscillation dual norms.
    pub depth: u32,
    /// Oscillation is evaluated every this many iterations (and always on the last).
    pub oscillation_every: usize,
    pub solver_tol: f64,
    pub max_iterations: usize,
    /// Keep every mesh and marked set in the report.
    pub keep_meshes: bool,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            theta_mark: 0.5,
            max_dof: 10_000,
            depth: DEFAULT_DEPTH,
            oscillation_every: 1,
            solver_tol: 1e-10,
            max_iterations: 200,
            keep_meshes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub kappa: f64,
    pub theta_mark: f64,
    pub dofs: usize,
    pub elements: usize,
    pub estimator: f64,
    /// `None` when skipped in this iteration.
    pub oscillation: Option<f64>,
    pub classic_estimator: f64,
    /// True error, or the reference-solution proxy when no exact solution is known.
    pub error: Option<f64>,
    /// `(estimator² + oscillation²)^{1/2} / error`.
    pub effectivity: Option<f64>,
    pub classic_effectivity: Option<f64>,
    pub marked_vertices: usize,
    pub marked_elements: usize,
    pub solver_iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: Problem,
    pub options: AdaptOptions,
    pub iterations: Vec<IterationRecord>,
    /// Whether errors come from a reference solution instead of the exact one.
    pub reference_error: bool,
    pub total_seconds: f64,
    /// Counts of squeeze factors per decade on the final mesh.
    pub theta_histogram: Vec<usize>,
    #[serde(skip)]
    pub meshes: Vec<Mesh>,
    /// Elements marked (before closure) in each iteration.
    #[serde(skip)]
    pub marked: Vec<Vec<usize>>,
    #[serde(skip)]
    pub final_mesh: Option<Mesh>,
    #[serde(skip)]
    pub final_solution: Option<DiscreteFunction>,
}

impl RunReport {
    fn new(problem: &Problem, options: &AdaptOptions) -> Self {
        Self {
            problem: *problem,
            options: *options,
            iterations: Vec::new(),
            reference_error: !problem.has_exact_solution(),
            total_seconds: 0.0,
            theta_histogram: Vec::new(),
            meshes: Vec::new(),
            marked: Vec::new(),
            final_mesh: None,
            final_solution: None,
        }
    }

    /// Largest over smallest effectivity.
    pub fn effectivity_spread(&self) -> Option<f64> {
        spread(self.iterations.iter().filter_map(|r| r.effectivity))
    }
}

/// `max / min` of positive values; `None` for an empty sequence.
pub fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi > 0.0 && lo.is_finite()).then(|| hi / lo)
}

pub fn adaptive_loop(initial: &Mesh, problem: &Problem, options: &AdaptOptions) -> Result<RunReport, AdaptError> {
    if !(options.theta_mark > 0.0 && options.theta_mark < 1.0) {
        return Err(AdaptError::InvalidTheta(options.theta_mark));
    }
    let start = Instant::now();
    let kappa = problem.kappa;
    let mut report = RunReport::new(problem, options);
    let mut mesh = initial.clone();
    // Nodal values per iteration and vertex parents per refinement, for the reference proxy.
    let mut solutions: Vec<Vec<f64>> = Vec::new();
    let mut parents: Vec<Vec<Option<(usize, usize)>>> = Vec::new();

    for iteration in 0..options.max_iterations {
        let t = Instant::now();
        let (u, stats) = match solve_problem(&mesh, problem, options.solver_tol) {
            Ok(v) => v,
            Err(source) => {
                report.total_seconds = start.elapsed().as_secs_f64();
                return Err(AdaptError::Solve { iteration, source, partial: Box::new(report) });
            }
        };
        let dofs = mesh.num_vertices() - (0..mesh.num_vertices()).filter(|&v| mesh.is_boundary_vertex(v)).count();
        let last = dofs > options.max_dof || iteration + 1 == options.max_iterations;
        let with_osc = last || iteration % options.oscillation_every.max(1) == 0;
        let duals = DualSystem::build(&mesh, kappa);
        let est_opts = EstimateOptions { oscillation_depth: with_osc.then_some(options.depth) };
        let rep = match estimate(&mesh, &duals, problem, &u, &est_opts) {
            Ok(r) => r,
            Err(source) => {
                report.total_seconds = start.elapsed().as_secs_f64();
                return Err(AdaptError::Solve { iteration, source, partial: Box::new(report) });
            }
        };
        let error = element_errors_squared(&mesh, problem, &u).map(|v| v.iter().sum::<f64>().sqrt());
        let mut record = IterationRecord {
            iteration,
            kappa,
            theta_mark: options.theta_mark,
            dofs,
            elements: mesh.num_elements(),
            estimator: rep.estimator,
            oscillation: with_osc.then_some(rep.oscillation),
            classic_estimator: rep.classic_estimator,
            error,
            effectivity: None,
            classic_effectivity: None,
            marked_vertices: 0,
            marked_elements: 0,
            solver_iterations: stats.iterations,
            seconds: 0.0,
        };
        if options.keep_meshes {
            report.meshes.push(mesh.clone());
        }
        solutions.push(u.values().to_vec());
        if last {
            record.seconds = t.elapsed().as_secs_f64();
            report.iterations.push(record);
            report.theta_histogram = duals.theta_histogram();
            report.final_solution = Some(u);
            break;
        }
        let vertices = dorfler_mark(&rep.indicators(), options.theta_mark)?;
        let marked = star_elements(&mesh, &vertices);
        record.marked_vertices = vertices.len();
        record.marked_elements = marked.len();
        let refinement = mesh.bisect_with_parents(&marked);
        parents.push(refinement.parents);
        mesh = refinement.mesh;
        if options.keep_meshes {
            report.marked.push(marked);
        }
        record.seconds = t.elapsed().as_secs_f64();
        report.iterations.push(record);
    }

    if report.reference_error {
        if let Err(source) = reference_errors(&mesh, problem, options, &solutions, &parents, &mut report) {
            report.total_seconds = start.elapsed().as_secs_f64();
            let iteration = report.iterations.len();
            return Err(AdaptError::Solve { iteration, source, partial: Box::new(report) });
        }
    }
    for r in &mut report.iterations {
        if let Some(err) = r.error.filter(|&e| e > 0.0) {
            r.effectivity = r.oscillation.map(|o| r.estimator.hypot(o) / err);
            r.classic_effectivity = Some(r.classic_estimator / err);
        }
    }
    report.final_mesh = Some(mesh);
    report.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Errors against the solution on the final mesh refined by two uniform bisection sweeps.
fn reference_errors(
    final_mesh: &Mesh,
    problem: &Problem,
    options: &AdaptOptions,
    solutions: &[Vec<f64>],
    parents: &[Vec<Option<(usize, usize)>>],
    report: &mut RunReport,
) -> Result<(), SolveError> {
    let mut chain: Vec<Vec<Option<(usize, usize)>>> = parents.to_vec();
    let mut mesh = final_mesh.clone();
    for _ in 0..2 {
        let all: Vec<usize> = (0..mesh.num_elements()).collect();
        let r = mesh.bisect_with_parents(&all);
        chain.push(r.parents);
        mesh = r.mesh;
    }
    let (reference, _) = solve_problem(&mesh, problem, options.solver_tol.min(1e-12))?;
    for (k, values) in solutions.iter().enumerate() {
        let mut v = values.clone();
        for step in &chain[k..] {
            v = prolong(step, &v);
        }
        let diff: Vec<f64> = reference.values().iter().zip(&v).map(|(a, b)| a - b).collect();
        let diff = DiscreteFunction::from_nodal(&mesh, diff);
        report.iterations[k].error = Some(energy_norm(&mesh, problem.kappa, &diff, None));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub kappa: f64,
    pub iteration: usize,
    pub dofs: usize,
    pub estimator: f64,
    pub oscillation: f64,
    pub error: f64,
    pub effectivity: f64,
    pub classic_effectivity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// Largest over smallest effectivity across all κ and iterations.
    pub effectivity_spread: f64,
    /// The same for the classical indicator.
    pub classic_spread: f64,
    pub runs: Vec<RunReport>,
}

/// Runs the adaptive loop for every `κ` and collects effectivity trajectories.
pub fn robustness_study(
    initial: &Mesh,
    problem: &Problem,
    kappas: &[f64],
    options: &AdaptOptions,
) -> Result<StudyReport, AdaptError> {
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &kappa in kappas {
        let p = Problem { kappa, ..*problem };
        let run = adaptive_loop(initial, &p, options)?;
        for r in &run.iterations {
            if let (Some(error), Some(effectivity), Some(oscillation)) = (r.error, r.effectivity, r.oscillation) {
                rows.push(StudyRow {
                    kappa,
                    iteration: r.iteration,
                    dofs: r.dofs,
                    estimator: r.estimator,
                    oscillation,
                    error,
                    effectivity,
                    classic_effectivity: r.classic_effectivity.unwrap_or(f64::NAN),
                });
            }
        }
        runs.push(run);
    }
    Ok(StudyReport {
        effectivity_spread: spread(rows.iter().map(|r| r.effectivity)).unwrap_or(f64::NAN),
        classic_spread: spread(rows.iter().map(|r| r.classic_effectivity)).unwrap_or(f64::NAN),
        rows,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::criss_cross_square;
    use crate::problem::Preset;

    #[test]
    fn equal_indicators_mark_a_quarter() {
        let e = vec![1.0; 100];
        assert_eq!(dorfler_mark(&e, 0.5).unwrap().len(), 25);
    }

    #[test]
    fn dominant_vertex_alone() {
        let mut e = vec![0.1; 100];
        e[37] = 10.0;
        assert_eq!(dorfler_mark(&e, 0.5).unwrap(), vec![37]);
    }

    #[test]
    fn theta_near_one_marks_everything() {
        let e = vec![0.3; 100];
        assert_eq!(dorfler_mark(&e, 0.999).unwrap().len(), 100);
        assert!(matches!(dorfler_mark(&e, 1.0), Err(AdaptError::InvalidTheta(_))));
        assert!(matches!(dorfler_mark(&[], 0.5), Err(AdaptError::EmptyIndicators)));
    }

    #[test]
    fn single_iteration_when_budget_is_tiny() {
        let p = Problem::new(1.0, Preset::SinSin).unwrap();
        let opts = AdaptOptions { max_dof: 0, ..Default::default() };
        let run = adaptive_loop(&criss_cross_square(2), &p, &opts).unwrap();
        assert_eq!(run.iterations.len(), 1);
        assert!(run.iterations[0].effectivity.unwrap() > 0.0);
    }

    #[test]
    fn reference_proxy_for_constant_data() {
        let p = Problem::new(10.0, Preset::Const1).unwrap();
        let opts = AdaptOptions { max_dof: 60, ..Default::default() };
        let run = adaptive_loop(&criss_cross_square(2), &p, &opts).unwrap();
        assert!(run.reference_error);
        assert!(run.iterations.len() >= 2);
        for w in run.iterations.windows(2) {
            assert!(w[1].dofs > w[0].dofs);
        }
        assert!(run.iterations.iter().all(|r| r.error.unwrap() > 0.0 && r.effectivity.unwrap().is_finite()));
    }
}
