//! Bi-orthogonal dual functions and the `𝓛(S)`-invariant projection onto `S̃`.
//!
//! For every element `T` and vertex `z` of `T` the dual function is
//! `φ*_{z;T} = b_T ψ_z^T` with `b_T = λ₀λ₁λ₂` and `ψ_z^T ∈ P1(T)` chosen so
//! that `∫_T b_T ψ_z^T λ_y = δ_{yz}`.
//!
//! For every interior face `F` the squeezed bubble `b_F` is the product of the
//! two face hat functions on the squeezed elements `T_θ`, `θ = min{1, (h_T κ)⁻¹}`.
//! With `ψ_F = b_F / ∫_F b_F`,
//!
//! `φ*_F = ψ_F - Σ_{T ⊂ ω_F} Σ_{z ∈ T} ⟨φ_{z;T}, ψ_F⟩ φ*_{z;T}`.
//!
//! The projection is `Πg = Σ_T Σ_z ⟨g, φ*_{z;T}⟩ φ_{z;T} + Σ_F ⟨g, φ*_F⟩ δ_F`.

use rayon::prelude::*;
use serde::Serialize;

use crate::functional::{pair_face, pair_volume, Functional, TildeSFunctional};
use crate::galerkin::DiscreteFunction;
use crate::geometry::{Point, Triangle};
use crate::mesh::{Mesh, SqueezedTriangle};
use crate::quadrature::{self, integrate_barycentric};

/// `θ = min{1, (h_T κ)⁻¹}`.
pub fn squeeze_factor(h: f64, kappa: f64) -> f64 {
    (1.0 / (h * kappa)).min(1.0)
}

#[inline]
fn bubble(l: [f64; 3]) -> f64 {
    l[0] * l[1] * l[2]
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

/// The three `ψ_z^T`, as coefficients in the barycentric basis of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementDual {
    /// `ψ_z^T = Σ_k coefficients[z][k] λ_k`.
    pub coefficients: [[f64; 3]; 3],
}

impl ElementDual {
    /// Solves the `b_T`-weighted Gram system of the local hat functions.
    pub fn new(tri: &Triangle) -> Self {
        let area = tri.area();
        assert!(area > 0.0, "degenerate element");
        let mut gram = [[0.0; 3]; 3];
        for (y, row) in gram.iter_mut().enumerate() {
            for (z, entry) in row.iter_mut().enumerate() {
                let mut e = [1u32; 3];
                e[y] += 1;
                e[z] += 1;
                *entry = integrate_barycentric(area, e);
            }
        }
        let coefficients = invert3(gram).expect("weighted Gram matrix of a nondegenerate element is regular");
        Self { coefficients }
    }

    #[inline]
    pub fn psi(&self, z: usize, l: [f64; 3]) -> f64 {
        let c = &self.coefficients[z];
        c[0] * l[0] + c[1] * l[1] + c[2] * l[2]
    }

    /// `φ*_{z;T}` at barycentric coordinates `l`.
    #[inline]
    pub fn phi_star(&self, z: usize, l: [f64; 3]) -> f64 {
        bubble(l) * self.psi(z, l)
    }

    /// Gradient of `φ*_{z;T}` given the barycentric gradients of `T`.
    pub fn phi_star_gradient(&self, z: usize, l: [f64; 3], grads: &[Point; 3]) -> Point {
        let b = bubble(l);
        let psi = self.psi(z, l);
        let db = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
        let c = &self.coefficients[z];
        let mut g = [0.0; 2];
        for k in 0..3 {
            let w = psi * db[k] + b * c[k];
            g[0] += w * grads[k][0];
            g[1] += w * grads[k][1];
        }
        g
    }
}

/// One element of `ω_F` with its squeezed copy and correction weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSide {
    pub squeezed: SqueezedTriangle,
    /// `γ_{z;T} = ⟨φ_{z;T}, ψ_F⟩` for the local vertices `z` of the element.
    pub gamma: [f64; 3],
}

impl FaceSide {
    pub fn element(&self) -> usize {
        self.squeezed.element
    }

    pub fn theta(&self) -> f64 {
        self.squeezed.theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceDual {
    pub face: usize,
    /// `∫_F b_F = |F| / 6`.
    pub normalization: f64,
    pub sides: [FaceSide; 2],
}

impl FaceDual {
    /// Squeezed face hats `(λ_{p,θ}, λ_{q,θ})` at `x ∈ T`, or `None` outside `T_θ`.
    ///
    /// Computed from the barycentrics `λ` of the parent: `λ_{q,θ} = λ_q` and
    /// `λ_{p,θ} = λ_p + λ_a (1 - 1/θ)`, which stays accurate for thin `T_θ`.
    fn squeezed_hats(&self, s: usize, x: Point) -> Option<(f64, f64, [Point; 2])> {
        let sq = &self.sides[s].squeezed;
        let o = sq.opposite;
        let (ip, iq) = ((o + 1) % 3, (o + 2) % 3);
        let l = sq.parent.barycentric(x);
        let g = sq.parent.gradients();
        let c = 1.0 - 1.0 / sq.theta;
        let lp = l[ip] + c * l[o];
        if lp < -1e-9 || l[iq] < -1e-9 {
            return None;
        }
        let grad_p = [g[ip][0] + c * g[o][0], g[ip][1] + c * g[o][1]];
        Some((lp.max(0.0), l[iq].max(0.0), [grad_p, g[iq]]))
    }

    /// `ψ_F` at a point of the element of side `s`.
    pub fn psi(&self, s: usize, x: Point) -> f64 {
        match self.squeezed_hats(s, x) {
            Some((lp, lq, _)) => lp * lq / self.normalization,
            None => 0.0,
        }
    }

    /// Gradient of `ψ_F` at a point of the element of side `s`.
    pub fn psi_gradient(&self, s: usize, x: Point) -> Point {
        match self.squeezed_hats(s, x) {
            Some((lp, lq, [gp, gq])) => {
                [(lq * gp[0] + lp * gq[0]) / self.normalization, (lq * gp[1] + lp * gq[1]) / self.normalization]
            }
            None => [0.0, 0.0],
        }
    }

    /// `φ*_F` at a point of the element of side `s`.
    pub fn eval(&self, mesh: &Mesh, duals: &[ElementDual], s: usize, x: Point) -> f64 {
        let side = &self.sides[s];
        let e = side.element();
        let l = mesh.triangle(e).barycentric(x);
        let dual = &duals[e];
        let correction: f64 = (0..3).map(|z| side.gamma[z] * dual.phi_star(z, l)).sum();
        self.psi(s, x) - correction
    }

    /// Gradient of `φ*_F` at a point of the element of side `s`.
    pub fn gradient(&self, mesh: &Mesh, duals: &[ElementDual], s: usize, x: Point) -> Point {
        let side = &self.sides[s];
        let e = side.element();
        let tri = mesh.triangle(e);
        let l = tri.barycentric(x);
        let grads = tri.gradients();
        let mut g = self.psi_gradient(s, x);
        for z in 0..3 {
            let d = duals[e].phi_star_gradient(z, l, &grads);
            g[0] -= side.gamma[z] * d[0];
            g[1] -= side.gamma[z] * d[1];
        }
        g
    }
}

/// All dual functions of a mesh for one value of `κ`.
#[derive(Debug, Clone)]
pub struct DualSystem {
    pub kappa: f64,
    pub elements: Vec<ElementDual>,
    /// Indexed by face; `None` on boundary faces.
    pub faces: Vec<Option<FaceDual>>,
}

impl DualSystem {
    pub fn build(mesh: &Mesh, kappa: f64) -> Self {
        assert!(kappa > 0.0, "kappa must be positive");
        let elements: Vec<ElementDual> =
            (0..mesh.num_elements()).into_par_iter().map(|e| ElementDual::new(&mesh.triangle(e))).collect();
        let faces = (0..mesh.num_faces())
            .into_par_iter()
            .map(|f| {
                let face = mesh.face(f);
                let hi = face.elements.1?;
                let normalization = face.length / 6.0;
                let side = |e: usize| {
                    let theta = squeeze_factor(mesh.h_element(e), kappa);
                    let squeezed = mesh.squeeze_element(e, f, theta).expect("face of its own element");
                    let parent = mesh.triangle(e);
                    // Degree 3 integrand; a degree 4 rule on the squeezed element.
                    let gamma = quadrature::gauss_simplex_many(&squeezed.squeezed, 4, |l, x| {
                        let psi = l[0] * l[1] / normalization;
                        let lp = parent.barycentric(x);
                        [lp[0] * psi, lp[1] * psi, lp[2] * psi]
                    });
                    FaceSide { squeezed, gamma }
                };
                Some(FaceDual { face: f, normalization, sides: [side(face.elements.0), side(hi)] })
            })
            .collect();
        Self { kappa, elements, faces }
    }

    pub fn face(&self, f: usize) -> Option<&FaceDual> {
        self.faces[f].as_ref()
    }

    /// `⟨g, φ*_{z;T}⟩` for the three local vertices of `T`.
    pub fn pair_element<G: Functional + ?Sized>(&self, mesh: &Mesh, g: &G, e: usize) -> [f64; 3] {
        let dual = &self.elements[e];
        // φ*_{z;T} vanishes on ∂T, so only the volume part contributes.
        pair_volume(g, mesh, e, &mesh.triangle(e), 4, |l, _| [dual.phi_star(0, l), dual.phi_star(1, l), dual.phi_star(2, l)])
    }

    /// `⟨g, ψ_F⟩`.
    pub fn pair_face_bubble<G: Functional + ?Sized>(&self, mesh: &Mesh, g: &G, f: usize) -> f64 {
        let Some(fd) = self.face(f) else { return 0.0 };
        let mut total = 0.0;
        for side in &fd.sides {
            let [v] = pair_volume(g, mesh, side.element(), &side.squeezed.squeezed, 2, |l, _| {
                [l[0] * l[1] / fd.normalization]
            });
            total += v;
        }
        // The trace of ψ_F vanishes on every face except F.
        let [p, q] = fd.sides[0].squeezed.face_points();
        let [v] = pair_face(g, f, p, q, 2, |s, _| [s * (1.0 - s) / fd.normalization]);
        total + v
    }

    /// `⟨g, φ*_F⟩`, reusing element pairings `⟨g, φ*_{z;T}⟩` when provided.
    pub fn pair_face<G: Functional + ?Sized>(
        &self,
        mesh: &Mesh,
        g: &G,
        f: usize,
        element_pairs: Option<&[[f64; 3]]>,
    ) -> f64 {
        let Some(fd) = self.face(f) else { return 0.0 };
        let mut value = self.pair_face_bubble(mesh, g, f);
        for side in &fd.sides {
            let e = side.element();
            let pairs = match element_pairs {
                Some(p) => p[e],
                None => self.pair_element(mesh, g, e),
            };
            value -= (0..3).map(|z| side.gamma[z] * pairs[z]).sum::<f64>();
        }
        value
    }

    /// `Πg ∈ S̃`.
    pub fn project<G: Functional + ?Sized>(&self, mesh: &Mesh, g: &G) -> TildeSFunctional {
        let densities: Vec<[f64; 3]> =
            (0..mesh.num_elements()).into_par_iter().map(|e| self.pair_element(mesh, g, e)).collect();
        let faces = (0..mesh.num_faces())
            .into_par_iter()
            .map(|f| self.pair_face(mesh, g, f, Some(&densities)))
            .collect();
        TildeSFunctional { densities, faces }
    }

    /// `‖|φ*_{z;T}‖|_T` by quadrature (exact: the integrand is a polynomial of degree 8).
    pub fn element_dual_energy(&self, mesh: &Mesh, e: usize, z: usize) -> f64 {
        let tri = mesh.triangle(e);
        let grads = tri.gradients();
        let k2 = self.kappa * self.kappa;
        let d = &self.elements[e];
        quadrature::gauss_simplex(&tri, 8, |l, _| {
            let g = d.phi_star_gradient(z, l, &grads);
            let v = d.phi_star(z, l);
            g[0] * g[0] + g[1] * g[1] + k2 * v * v
        })
        .expect("supported degree")
        .sqrt()
    }

    /// `‖|ψ_F‖|_{ω_F}`, exact on the squeezed elements.
    pub fn face_bubble_energy(&self, f: usize) -> Option<f64> {
        let fd = self.face(f)?;
        let k2 = self.kappa * self.kappa;
        let mut total = 0.0;
        for side in &fd.sides {
            let t = &side.squeezed.squeezed;
            let g = t.gradients();
            total += quadrature::gauss_simplex(t, 4, |l, _| {
                let gx = (l[1] * g[0][0] + l[0] * g[1][0]) / fd.normalization;
                let gy = (l[1] * g[0][1] + l[0] * g[1][1]) / fd.normalization;
                let v = l[0] * l[1] / fd.normalization;
                gx * gx + gy * gy + k2 * v * v
            })
            .expect("supported degree");
        }
        Some(total.sqrt())
    }

    /// Counts of squeeze factors per decade, `[1, 0.1)`, `[0.1, 0.01)`, ...
    pub fn theta_histogram(&self) -> Vec<usize> {
        let mut hist = Vec::new();
        for fd in self.faces.iter().flatten() {
            for side in &fd.sides {
                let bin = (-side.theta().log10()).floor().max(0.0) as usize;
                if hist.len() <= bin {
                    hist.resize(bin + 1, 0);
                }
                hist[bin] += 1;
            }
        }
        hist
    }
}

/// `⟨g, V⟩` for a discrete function `V`.
pub fn pair_discrete<G: Functional + ?Sized>(mesh: &Mesh, g: &G, v: &DiscreteFunction) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let u = v.local(mesh, e);
        let [x] = pair_volume(g, mesh, e, &mesh.triangle(e), 1, |l, _| [u[0] * l[0] + u[1] * l[1] + u[2] * l[2]]);
        total += x;
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        if face.is_interior() {
            let [a, b] = face.vertices;
            let (ua, ub) = (v.values()[a], v.values()[b]);
            let [x] = pair_face(g, f, mesh.vertex(a), mesh.vertex(b), 1, |s, _| [ua * (1.0 - s) + ub * s]);
            total += x;
        }
    }
    total
}
