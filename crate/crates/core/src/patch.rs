//! Computable lower bounds for dual norms `‖|g‖|_{*;ω}` on unions of elements.
//!
//! Every element of the patch is split into `4^depth` congruent triangles;
//! on the resulting P1 space with zero values on `∂ω` the Riesz
//! representative `w` of `g` is computed and `‖|w‖|_ω` is returned. Spaces
//! are nested in `depth`, so the value never decreases with depth and
//! converges to the true dual norm from below.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::functional::{pair_face, pair_volume, Functional};
use crate::galerkin::{element_mass, element_stiffness};
use crate::geometry::{Point, Triangle};
use crate::linalg::{cholesky_solve, dot, pcg, CsrMatrix, SolveError};
use crate::mesh::Mesh;

/// Above this many unknowns the local system is solved iteratively.
const DENSE_LIMIT: usize = 600;

type NodeKey = [(usize, u32); 3];

#[derive(Debug, Clone)]
struct SubTriangle {
    parent: usize,
    nodes: [usize; 3],
    tri: Triangle,
}

/// A patch of mesh elements with its uniformly subdivided P1 space.
#[derive(Debug, Clone)]
pub struct RefinedPatch {
    pub elements: Vec<usize>,
    pub depth: u32,
    nodes: Vec<Point>,
    dof: Vec<Option<usize>>,
    n_free: usize,
    triangles: Vec<SubTriangle>,
    /// Sub-segments `(mesh face, node, node)` of faces interior to the patch.
    segments: Vec<(usize, usize, usize)>,
}

fn key(vertices: [usize; 3], weights: [u32; 3]) -> NodeKey {
    let mut k = [(usize::MAX, 0); 3];
    let mut n = 0;
    for i in 0..3 {
        if weights[i] > 0 {
            k[n] = (vertices[i], weights[i]);
            n += 1;
        }
    }
    k[..n].sort_unstable();
    k
}

impl RefinedPatch {
    pub fn new(mesh: &Mesh, elements: &[usize], depth: u32) -> Self {
        let n = 1u32 << depth;
        let inside: HashSet<usize> = elements.iter().copied().collect();
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut dirichlet = Vec::new();
        let mut triangles = Vec::new();
        let mut segments = Vec::new();

        for &e in elements {
            let verts = mesh.element(e);
            let tri = mesh.triangle(e);
            let faces = mesh.element_faces(e);
            // Local edge k (opposite vertex k) lies on ∂ω unless its neighbor is in the patch.
            let on_boundary: [bool; 3] = faces.map(|f| {
                let face = mesh.face(f);
                !(face.is_interior() && face.adjacent().all(|t| inside.contains(&t)))
            });
            let mut lattice = |a: u32, b: u32| -> usize {
                let w = [n - a - b, a, b];
                let id = *index.entry(key(verts, w)).or_insert_with(|| {
                    let l = w.map(|x| x as f64 / n as f64);
                    nodes.push(tri.point(l));
                    dirichlet.push(false);
                    nodes.len() - 1
                });
                if (0..3).any(|k| w[k] == 0 && on_boundary[k]) {
                    dirichlet[id] = true;
                }
                id
            };
            let mut grid = vec![vec![0usize; (n + 1) as usize]; (n + 1) as usize];
            for a in 0..=n {
                for b in 0..=n - a {
                    grid[a as usize][b as usize] = lattice(a, b);
                }
            }
            let mut push = |ids: [usize; 3]| {
                let t = Triangle::new(nodes[ids[0]], nodes[ids[1]], nodes[ids[2]]);
                triangles.push(SubTriangle { parent: e, nodes: ids, tri: t });
            };
            for a in 0..n as usize {
                for b in 0..n as usize - a {
                    push([grid[a][b], grid[a + 1][b], grid[a][b + 1]]);
                    if a + b + 2 <= n as usize {
                        push([grid[a + 1][b], grid[a + 1][b + 1], grid[a][b + 1]]);
                    }
                }
            }
            for k in 0..3 {
                let f = faces[k];
                let face = mesh.face(f);
                // Each interior face of the patch is visited from its lower element only.
                if on_boundary[k] || face.elements.0 != e {
                    continue;
                }
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let along: Vec<usize> = (0..=n)
                    .map(|t| {
                        let mut w = [0u32; 3];
                        w[i] = n - t;
                        w[j] = t;
                        grid[w[1] as usize][w[2] as usize]
                    })
                    .collect();
                segments.extend(along.windows(2).map(|p| (f, p[0], p[1])));
            }
        }

        let mut n_free = 0;
        let dof = dirichlet
            .iter()
            .map(|&d| {
                if d {
                    None
                } else {
                    n_free += 1;
                    Some(n_free - 1)
                }
            })
            .collect();
        Self { elements: elements.to_vec(), depth, nodes, dof, n_free, triangles, segments }
    }

    pub fn num_free(&self) -> usize {
        self.n_free
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// `⟨g, v_i⟩` for every free hat function `v_i` of the refined space.
    pub fn load<G: Functional + ?Sized>(&self, mesh: &Mesh, g: &G) -> Vec<f64> {
        let parts: Vec<[f64; 3]> =
            self.triangles.par_iter().map(|t| pair_volume(g, mesh, t.parent, &t.tri, 1, |l, _| l)).collect();
        let mut b = vec![0.0; self.n_free];
        for (t, part) in self.triangles.iter().zip(&parts) {
            for k in 0..3 {
                if let Some(d) = self.dof[t.nodes[k]] {
                    b[d] += part[k];
                }
            }
        }
        for &(f, p, q) in &self.segments {
            let [vp, vq] = pair_face(g, f, self.nodes[p], self.nodes[q], 1, |s, _| [1.0 - s, s]);
            if let Some(d) = self.dof[p] {
                b[d] += vp;
            }
            if let Some(d) = self.dof[q] {
                b[d] += vq;
            }
        }
        b
    }

    fn local_matrices(&self, kappa: f64) -> Vec<[[f64; 3]; 3]> {
        let k2 = kappa * kappa;
        self.triangles
            .iter()
            .map(|t| {
                let (s, m) = (element_stiffness(&t.tri), element_mass(&t.tri));
                let mut a = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        a[i][j] = s[i][j] + k2 * m[i][j];
                    }
                }
                a
            })
            .collect()
    }

    /// Riesz representative of the load vector `b`: free coefficients of `w` with `a(w, ·) = b`.
    pub fn solve(&self, kappa: f64, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.n_free;
        if n == 0 {
            return Ok(Vec::new());
        }
        let locals = self.local_matrices(kappa);
        let entries = self.triangles.iter().zip(&locals).flat_map(|(t, a)| {
            let dofs = t.nodes.map(|v| self.dof[v]);
            (0..3).flat_map(move |i| (0..3).filter_map(move |j| Some((dofs[i]?, dofs[j]?, a[i][j]))))
        });
        if n <= DENSE_LIMIT {
            let mut dense = vec![0.0; n * n];
            for (i, j, v) in entries {
                dense[i * n + j] += v;
            }
            let mut x = b.to_vec();
            cholesky_solve(&mut dense, &mut x)?;
            Ok(x)
        } else {
            let a = CsrMatrix::from_triplets(n, entries.collect());
            let mut x = vec![0.0; n];
            pcg(&a, b, &mut x, 1e-12, 20 * n)?;
            Ok(x)
        }
    }

    /// `‖|w‖|_ω` for the Riesz representative `w` of `g`.
    pub fn dual_norm<G: Functional + ?Sized>(&self, mesh: &Mesh, g: &G, kappa: f64) -> Result<f64, SolveError> {
        let b = self.load(mesh, g);
        if b.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let w = self.solve(kappa, &b)?;
        Ok(dot(&w, &b).max(0.0).sqrt())
    }
}

/// Discrete dual norm of `g` on the union of `elements`, with zero boundary values on its boundary.
pub fn discrete_dual_norm<G: Functional + ?Sized>(
    mesh: &Mesh,
    elements: &[usize],
    g: &G,
    kappa: f64,
    depth: u32,
) -> Result<f64, SolveError> {
    RefinedPatch::new(mesh, elements, depth).dual_norm(mesh, g, kappa)
}

/// Discrete dual norm of `g` on the whole domain.
pub fn global_dual_norm<G: Functional + ?Sized>(mesh: &Mesh, g: &G, kappa: f64, depth: u32) -> Result<f64, SolveError> {
    let all: Vec<usize> = (0..mesh.num_elements()).collect();
    discrete_dual_norm(mesh, &all, g, kappa, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{AnalyticFunctional, TildeSFunctional};
    use crate::galerkin::{apply_l_to_discrete, energy_norm, DiscreteFunction};
    use crate::mesh::{criss_cross_square, perturbed_square, two_triangle_square};

    #[test]
    fn lattice_counts() {
        let mesh = two_triangle_square();
        let all = [0, 1];
        for depth in 0..4 {
            let n = 1usize << depth;
            let p = RefinedPatch::new(&mesh, &all, depth);
            assert_eq!(p.num_triangles(), 2 * n * n);
            // Nodes of a uniformly refined square mesh: (n+1)², interior (n-1)².
            assert_eq!(p.nodes().len(), (n + 1) * (n + 1));
            assert_eq!(p.num_free(), (n - 1) * (n - 1));
        }
    }

    #[test]
    fn zero_functional() {
        let mesh = criss_cross_square(2);
        let g = TildeSFunctional::zeros(&mesh);
        let star = mesh.star(4).unwrap();
        assert_eq!(discrete_dual_norm(&mesh, &star.elements, &g, 1.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn riesz_identity_for_hat_functions() {
        // Inside its star, L(c·φ_z) is represented by c·φ_z itself.
        let mesh = perturbed_square(4, 0.2, 11);
        for kappa in [1.0, 30.0, 1e3] {
            for z in (0..mesh.num_vertices()).filter(|&z| !mesh.is_boundary_vertex(z)).take(4) {
                let mut values = vec![0.0; mesh.num_vertices()];
                values[z] = 2.5;
                let v = DiscreteFunction::from_nodal(&mesh, values);
                let g = apply_l_to_discrete(&mesh, kappa, &v);
                let star = mesh.star(z).unwrap();
                let expect = energy_norm(&mesh, kappa, &v, Some(&star.elements));
                for depth in [0, 1, 2] {
                    let got = discrete_dual_norm(&mesh, &star.elements, &g, kappa, depth).unwrap();
                    assert!((got - expect).abs() < 1e-10 * expect, "κ={kappa} depth={depth}: {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn monotone_in_depth() {
        let mesh = criss_cross_square(2);
        let g = AnalyticFunctional::new(|x: Point| (3.0 * x[0]).exp() * x[1], 8);
        let star = mesh.star(4).unwrap();
        let vals: Vec<f64> =
            (0..4).map(|d| discrete_dual_norm(&mesh, &star.elements, &g, 1.0, d).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12), "{vals:?}");
        }
        let inc: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc[2] < inc[1] && inc[1] < inc[0], "{inc:?}");
    }

    #[test]
    fn iterative_path_matches_dense() {
        let mesh = criss_cross_square(4);
        let g = AnalyticFunctional::new(|x: Point| 1.0 + x[0] * x[1], 8);
        let p = RefinedPatch::new(&mesh, &(0..mesh.num_elements()).collect::<Vec<_>>(), 3);
        assert!(p.num_free() > DENSE_LIMIT);
        let b = p.load(&mesh, &g);
        let w = p.solve(2.0, &b).unwrap();
        // Compare with a dense solve of the same system.
        let n = p.num_free();
        let mut dense = vec![0.0; n * n];
        for (t, a) in p.triangles.iter().zip(p.local_matrices(2.0)) {
            for i in 0..3 {
                for j in 0..3 {
                    if let (Some(r), Some(c)) = (p.dof[t.nodes[i]], p.dof[t.nodes[j]]) {
                        dense[r * n + c] += a[i][j];
                    }
                }
            }
        }
        let mut x = b.clone();
        cholesky_solve(&mut dense, &mut x).unwrap();
        let err = w.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-9 * scale);
    }
}
