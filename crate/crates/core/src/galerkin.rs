//! Conforming P1 discretization of `-Δu + κ²u = f` with zero boundary values.

use rayon::prelude::*;
use serde::Serialize;

use crate::functional::{pair_face, pair_volume, Functional, TildeSFunctional};
use crate::geometry::{self, Point};
use crate::linalg::{pcg, CgOutcome, CsrMatrix, SolveError};
use crate::mesh::Mesh;
use crate::problem::Problem;
use crate::quadrature;

/// Numbering of the free (interior) vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    vertex_dof: Vec<Option<usize>>,
    dof_vertex: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut vertex_dof = vec![None; mesh.num_vertices()];
        let mut dof_vertex = Vec::new();
        for v in 0..mesh.num_vertices() {
            if !mesh.is_boundary_vertex(v) {
                vertex_dof[v] = Some(dof_vertex.len());
                dof_vertex.push(v);
            }
        }
        Self { vertex_dof, dof_vertex }
    }

    pub fn len(&self) -> usize {
        self.dof_vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_vertex.is_empty()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.vertex_dof[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.dof_vertex[dof]
    }
}

/// A continuous piecewise affine function with zero trace, by nodal values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteFunction {
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zero(mesh: &Mesh) -> Self {
        Self { values: vec![0.0; mesh.num_vertices()] }
    }

    /// Expands free coefficients; boundary values are zero.
    pub fn from_free(dofs: &DofMap, coefficients: &[f64]) -> Self {
        assert_eq!(coefficients.len(), dofs.len());
        let mut values = vec![0.0; dofs.vertex_dof.len()];
        for (d, &c) in coefficients.iter().enumerate() {
            values[dofs.vertex(d)] = c;
        }
        Self { values }
    }

    /// Nodal values with boundary entries forced to zero.
    pub fn from_nodal(mesh: &Mesh, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_vertices());
        for (v, x) in values.iter_mut().enumerate() {
            if mesh.is_boundary_vertex(v) {
                *x = 0.0;
            }
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn free_coefficients(&self, dofs: &DofMap) -> Vec<f64> {
        (0..dofs.len()).map(|d| self.values[dofs.vertex(d)]).collect()
    }

    /// Values at the three local vertices of element `e`.
    pub fn local(&self, mesh: &Mesh, e: usize) -> [f64; 3] {
        mesh.element(e).map(|v| self.values[v])
    }

    pub fn gradient(&self, mesh: &Mesh, e: usize) -> Point {
        let g = mesh.triangle(e).gradients();
        let u = self.local(mesh, e);
        [
            u[0] * g[0][0] + u[1] * g[1][0] + u[2] * g[2][0],
            u[0] * g[0][1] + u[1] * g[1][1] + u[2] * g[2][1],
        ]
    }

    pub fn eval(&self, mesh: &Mesh, e: usize, x: Point) -> f64 {
        let l = mesh.triangle(e).barycentric(x);
        let u = self.local(mesh, e);
        u[0] * l[0] + u[1] * l[1] + u[2] * l[2]
    }
}

/// Element stiffness `|T| ∇λ_i·∇λ_j`.
pub fn element_stiffness(tri: &geometry::Triangle) -> [[f64; 3]; 3] {
    let g = tri.gradients();
    let a = tri.area();
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = a * geometry::dot(g[i], g[j]);
        }
    }
    k
}

/// Element mass `|T|(1 + δ_ij)/12`.
pub fn element_mass(tri: &geometry::Triangle) -> [[f64; 3]; 3] {
    let a = tri.area();
    let mut m = [[a / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = a / 6.0;
    }
    m
}

fn assemble(mesh: &Mesh, dofs: &DofMap, local: impl Fn(usize) -> [[f64; 3]; 3]) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let k = local(e);
        let ids = mesh.element(e).map(|v| dofs.dof(v));
        for i in 0..3 {
            let Some(di) = ids[i] else { continue };
            for j in 0..3 {
                if let Some(dj) = ids[j] {
                    triplets.push((di, dj, k[i][j]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.len(), triplets)
}

pub fn assemble_stiffness(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    assemble(mesh, dofs, |e| element_stiffness(&mesh.triangle(e)))
}

pub fn assemble_mass(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    assemble(mesh, dofs, |e| element_mass(&mesh.triangle(e)))
}

/// The matrix of `a(v, w) = ∫∇v·∇w + κ²∫vw` over the free nodes.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub kappa: f64,
    pub dofs: DofMap,
    pub matrix: CsrMatrix,
}

pub fn assemble_operator(mesh: &Mesh, kappa: f64) -> GalerkinSystem {
    let dofs = DofMap::new(mesh);
    let k2 = kappa * kappa;
    let matrix = assemble(mesh, &dofs, |e| {
        let t = mesh.triangle(e);
        let (s, m) = (element_stiffness(&t), element_mass(&t));
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = s[i][j] + k2 * m[i][j];
            }
        }
        a
    });
    GalerkinSystem { kappa, dofs, matrix }
}

/// `⟨g, φ_z⟩` for every free node `z`.
pub fn load_vector<G: Functional + ?Sized>(mesh: &Mesh, dofs: &DofMap, g: &G) -> Vec<f64> {
    let mut b = vec![0.0; dofs.len()];
    let element_parts: Vec<[f64; 3]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| pair_volume(g, mesh, e, &mesh.triangle(e), 1, |l, _| l))
        .collect();
    for (e, part) in element_parts.iter().enumerate() {
        for (k, v) in mesh.element(e).into_iter().enumerate() {
            if let Some(d) = dofs.dof(v) {
                b[d] += part[k];
            }
        }
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.is_interior() {
            continue;
        }
        let [a, c] = face.vertices;
        let [va, vc] = pair_face(g, f, mesh.vertex(a), mesh.vertex(c), 1, |s, _| [1.0 - s, s]);
        if let Some(d) = dofs.dof(a) {
            b[d] += va;
        }
        if let Some(d) = dofs.dof(c) {
            b[d] += vc;
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl From<CgOutcome> for SolveStats {
    fn from(o: CgOutcome) -> Self {
        Self { iterations: o.iterations, relative_residual: o.relative_residual }
    }
}

/// Jacobi-preconditioned CG with an iteration cap of `10 · dofs`.
pub fn solve_galerkin(
    system: &GalerkinSystem,
    load: &[f64],
    tol: f64,
) -> Result<(DiscreteFunction, SolveStats), SolveError> {
    let n = system.dofs.len();
    let mut x = vec![0.0; n];
    let out = pcg(&system.matrix, load, &mut x, tol, (10 * n).max(10))?;
    Ok((DiscreteFunction::from_free(&system.dofs, &x), out.into()))
}

/// Assembles, loads with the problem's right-hand side and solves.
pub fn solve_problem(mesh: &Mesh, problem: &Problem, tol: f64) -> Result<(DiscreteFunction, SolveStats), SolveError> {
    let system = assemble_operator(mesh, problem.kappa);
    let load = load_vector(mesh, &system.dofs, problem);
    solve_galerkin(&system, &load, tol)
}

/// Squared energy norm of a discrete function on element `e`, exact.
pub fn element_energy_squared(mesh: &Mesh, kappa: f64, v: &DiscreteFunction, e: usize) -> f64 {
    let t = mesh.triangle(e);
    let (s, m) = (element_stiffness(&t), element_mass(&t));
    let u = v.local(mesh, e);
    let mut total = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            total += u[i] * u[j] * (s[i][j] + kappa * kappa * m[i][j]);
        }
    }
    total.max(0.0)
}

/// `(‖∇v‖² + κ²‖v‖²)^{1/2}` over `region` (all elements when `None`).
pub fn energy_norm(mesh: &Mesh, kappa: f64, v: &DiscreteFunction, region: Option<&[usize]>) -> f64 {
    match region {
        Some(r) => r.iter().map(|&e| element_energy_squared(mesh, kappa, v, e)).sum::<f64>().sqrt(),
        None => (0..mesh.num_elements()).map(|e| element_energy_squared(mesh, kappa, v, e)).sum::<f64>().sqrt(),
    }
}

/// Energy norm of a field with known gradient, by quadrature of the given degree.
pub fn energy_norm_field<F>(mesh: &Mesh, kappa: f64, field: F, region: Option<&[usize]>, degree: u32) -> f64
where
    F: Fn(Point) -> (f64, Point) + Sync,
{
    let k2 = kappa * kappa;
    let per = |e: usize| {
        quadrature::gauss_simplex(&mesh.triangle(e), degree, |_, x| {
            let (u, g) = field(x);
            g[0] * g[0] + g[1] * g[1] + k2 * u * u
        })
        .expect("supported degree")
    };
    let total: f64 = match region {
        Some(r) => r.iter().map(|&e| per(e)).sum(),
        None => (0..mesh.num_elements()).map(per).sum(),
    };
    total.sqrt()
}

/// Per-element squared energy errors `‖|u - U‖|_T²` against the exact solution.
pub fn element_errors_squared(mesh: &Mesh, problem: &Problem, u_h: &DiscreteFunction) -> Option<Vec<f64>> {
    if !problem.has_exact_solution() {
        return None;
    }
    let k2 = problem.kappa * problem.kappa;
    Some(
        (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let t = mesh.triangle(e);
                let gu = u_h.gradient(mesh, e);
                let uh = u_h.local(mesh, e);
                quadrature::gauss_simplex(&t, problem.quad_degree, |l, x| {
                    let (u, g) = problem.exact(x).expect("exact solution");
                    let d = u - (uh[0] * l[0] + uh[1] * l[1] + uh[2] * l[2]);
                    let gx = g[0] - gu[0];
                    let gy = g[1] - gu[1];
                    gx * gx + gy * gy + k2 * d * d
                })
                .expect("supported degree")
            })
            .collect(),
    )
}

/// `𝓛(V) ∈ S̃`: densities `κ²V|_T` and face weights `-[∇V·n_F]`.
///
/// The jump is `[∇V·n_F] = ∇V|_{T₁}·n_F - ∇V|_{T₀}·n_F` with `n_F` pointing
/// from `T₀` into `T₁`, so `⟨𝓛(V), φ⟩ = Σ_T ∫_T κ²Vφ - Σ_F [∇V·n_F] ∫_F φ`.
pub fn apply_l_to_discrete(mesh: &Mesh, kappa: f64, v: &DiscreteFunction) -> TildeSFunctional {
    let k2 = kappa * kappa;
    let densities = (0..mesh.num_elements()).map(|e| v.local(mesh, e).map(|x| k2 * x)).collect();
    let gradients: Vec<Point> = (0..mesh.num_elements()).map(|e| v.gradient(mesh, e)).collect();
    let faces = (0..mesh.num_faces()).map(|f| -mesh.normal_jump(f, |e| gradients[e])).collect();
    TildeSFunctional { densities, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{criss_cross_square, two_triangle_square};
    use crate::problem::Preset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn operator_is_symmetric_and_mass_scales() {
        let mesh = criss_cross_square(3);
        let a1 = assemble_operator(&mesh, 1.0);
        let a10 = assemble_operator(&mesh, 10.0);
        assert_eq!(a1.matrix.asymmetry(), 0.0);
        let mass = assemble_mass(&mesh, &a1.dofs);
        let diff = a10.matrix.add_scaled(-1.0, &a1.matrix).add_scaled(-99.0, &mass);
        let worst = (0..diff.dim()).flat_map(|i| diff.row(i).map(|(_, v)| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn criss_cross_center_diagonal() {
        // One interior node at the center of four right triangles with legs 1/√2.
        let mesh = criss_cross_square(1);
        let sys = assemble_operator(&mesh, 1.0);
        assert_eq!(sys.dofs.len(), 1);
        // Brute force: quadrature of |∇φ|² + φ² over each element.
        let z = sys.dofs.vertex(0);
        let mut brute = 0.0;
        for e in 0..mesh.num_elements() {
            let t = mesh.triangle(e);
            let k = mesh.local_index(e, z).unwrap();
            let g = t.gradients()[k];
            brute += quadrature::gauss_simplex(&t, 2, |l, _| geometry::dot(g, g) + l[k] * l[k]).unwrap();
        }
        assert!((sys.matrix.get(0, 0) - brute).abs() < 1e-14);
        assert!((brute - (4.0 + 1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn recovers_manufactured_coefficients() {
        let mesh = criss_cross_square(4);
        let sys = assemble_operator(&mesh, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..sys.dofs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let load = sys.matrix.mul_vec(&c);
        let (u, stats) = solve_galerkin(&sys, &load, 1e-12).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (a, b) in u.free_coefficients(&sys.dofs).iter().zip(&c) {
            assert!((a - b).abs() < 1e-9);
        }
        let (zero, _) = solve_galerkin(&sys, &vec![0.0; c.len()], 1e-10).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l_of_v_matches_matrix_action() {
        let mesh = criss_cross_square(3);
        let kappa = 2.5;
        let sys = assemble_operator(&mesh, kappa);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c: Vec<f64> = (0..sys.dofs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = DiscreteFunction::from_free(&sys.dofs, &c);
        let lv = apply_l_to_discrete(&mesh, kappa, &v);
        let paired = load_vector(&mesh, &sys.dofs, &lv);
        let direct = sys.matrix.mul_vec(&c);
        for (a, b) in paired.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn energy_of_linear_field() {
        let mesh = criss_cross_square(2);
        let e = energy_norm_field(&mesh, 2.0, |x| (x[0], [1.0, 0.0]), None, 2);
        assert!((e - (7.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert_eq!(energy_norm(&mesh, 2.0, &DiscreteFunction::zero(&mesh), None), 0.0);
    }

    #[test]
    fn energy_identity_for_discrete_functions() {
        let mesh = criss_cross_square(3);
        let kappa = 4.0;
        let sys = assemble_operator(&mesh, kappa);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c: Vec<f64> = (0..sys.dofs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = DiscreteFunction::from_free(&sys.dofs, &c);
            let a = crate::linalg::dot(&c, &sys.matrix.mul_vec(&c));
            let e = energy_norm(&mesh, kappa, &v, None);
            assert!((a - e * e).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn two_triangle_square_has_no_unknowns() {
        let mesh = two_triangle_square();
        let p = Problem::new(1.0, Preset::SinSin).unwrap();
        let (u, _) = solve_problem(&mesh, &p, 1e-10).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }
}
