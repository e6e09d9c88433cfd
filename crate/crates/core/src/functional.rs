//! Linear functionals on `H¹₀(Ω)` that can be tested against piecewise polynomials.
//!
//! A functional is described by a volume density, evaluated per element, and
//! by weights of Dirac measures on interior faces:
//!
//! `⟨g, φ⟩ = Σ_T ∫_T g_T φ + Σ_F c_F ∫_F φ`.
//!
//! Polynomial densities are integrated exactly. Other densities use a Gauss
//! rule of the functional's configured degree.

use crate::geometry::{Point, Triangle};
use crate::mesh::Mesh;
use crate::quadrature::{self, DEFAULT_DEGREE};

pub trait Functional: Sync {
    /// Volume density at `x` in `element`.
    fn density(&self, mesh: &Mesh, element: usize, x: Point) -> f64;

    /// Polynomial degree of the density on each element, if it has one.
    fn density_degree(&self) -> Option<u32>;

    /// Weight of the Dirac measure on `face`.
    fn face_weight(&self, _face: usize) -> f64 {
        0.0
    }

    /// Rule degree used when the density is not a polynomial.
    fn quad_degree(&self) -> u32 {
        DEFAULT_DEGREE
    }
}

/// Rule degree for integrating this functional against a test polynomial of `test_degree`.
pub fn rule_degree<G: Functional + ?Sized>(g: &G, test_degree: u32) -> u32 {
    match g.density_degree() {
        Some(d) => d + test_degree,
        None => g.quad_degree().max(test_degree),
    }
}

/// Volume pairing over a triangle `tri` contained in mesh element `element`.
///
/// `test` receives barycentric coordinates with respect to `tri` and the point.
pub fn pair_volume<const N: usize, G, F>(
    g: &G,
    mesh: &Mesh,
    element: usize,
    tri: &Triangle,
    test_degree: u32,
    test: F,
) -> [f64; N]
where
    G: Functional + ?Sized,
    F: Fn([f64; 3], Point) -> [f64; N],
{
    quadrature::gauss_simplex_many(tri, rule_degree(g, test_degree), |l, x| {
        let d = g.density(mesh, element, x);
        test(l, x).map(|t| d * t)
    })
}

/// Dirac pairing over the segment `[a, b]` contained in mesh face `face`.
///
/// `test` receives the parameter `s ∈ [0, 1]` from `a` to `b`.
pub fn pair_face<const N: usize, G, F>(g: &G, face: usize, a: Point, b: Point, test_degree: u32, test: F) -> [f64; N]
where
    G: Functional + ?Sized,
    F: Fn(f64, Point) -> [f64; N],
{
    let w = g.face_weight(face);
    if w == 0.0 {
        return [0.0; N];
    }
    let rule = quadrature::line_rule_clamped(test_degree);
    let len = crate::geometry::distance(a, b);
    let mut acc = [0.0; N];
    for (&s, &q) in rule.points.iter().zip(&rule.weights) {
        let v = test(s, crate::geometry::lerp(a, b, s));
        for k in 0..N {
            acc[k] += q * v[k];
        }
    }
    acc.map(|v| w * len * v)
}

/// A member of `S̃`: elementwise P1 densities plus Dirac weights on faces.
///
/// `densities[T][k]` is the value at local vertex `k` of element `T`;
/// `faces[F]` is zero on boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeSFunctional {
    pub densities: Vec<[f64; 3]>,
    pub faces: Vec<f64>,
}

impl TildeSFunctional {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { densities: vec![[0.0; 3]; mesh.num_elements()], faces: vec![0.0; mesh.num_faces()] }
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self {
            densities: self
                .densities
                .iter()
                .zip(&other.densities)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
            faces: self.faces.iter().zip(&other.faces).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_density(&self) -> f64 {
        self.densities.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_face(&self) -> f64 {
        self.faces.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient deviation, densities and faces measured separately
    /// relative to the larger of the two operands.
    pub fn relative_deviation(&self, other: &Self) -> (f64, f64) {
        let d = self.minus(other);
        let sd = self.max_density().max(other.max_density());
        let sf = self.max_face().max(other.max_face());
        let rel = |x: f64, s: f64| if s == 0.0 { x } else { x / s };
        (rel(d.max_density(), sd), rel(d.max_face(), sf))
    }
}

impl Functional for TildeSFunctional {
    fn density(&self, mesh: &Mesh, element: usize, x: Point) -> f64 {
        let l = mesh.triangle(element).barycentric(x);
        let p = &self.densities[element];
        p[0] * l[0] + p[1] * l[1] + p[2] * l[2]
    }

    fn density_degree(&self) -> Option<u32> {
        Some(1)
    }

    fn face_weight(&self, face: usize) -> f64 {
        self.faces[face]
    }
}

/// A smooth field `f(x)` acting as `⟨f, φ⟩ = ∫ f φ`.
pub struct AnalyticFunctional<F> {
    pub field: F,
    pub quad_degree: u32,
}

impl<F: Fn(Point) -> f64 + Sync> AnalyticFunctional<F> {
    pub fn new(field: F, quad_degree: u32) -> Self {
        Self { field, quad_degree }
    }
}

impl<F: Fn(Point) -> f64 + Sync> Functional for AnalyticFunctional<F> {
    fn density(&self, _mesh: &Mesh, _element: usize, x: Point) -> f64 {
        (self.field)(x)
    }

    fn density_degree(&self) -> Option<u32> {
        None
    }

    fn quad_degree(&self) -> u32 {
        self.quad_degree
    }
}

/// Elementwise density `g(T, x)` of known polynomial degree plus optional face weights.
pub struct DensityFunctional<F> {
    pub density: F,
    pub degree: u32,
    pub faces: Vec<f64>,
}

impl<F: Fn(usize, Point) -> f64 + Sync> Functional for DensityFunctional<F> {
    fn density(&self, _mesh: &Mesh, element: usize, x: Point) -> f64 {
        (self.density)(element, x)
    }

    fn density_degree(&self) -> Option<u32> {
        Some(self.degree)
    }

    fn face_weight(&self, face: usize) -> f64 {
        self.faces.get(face).copied().unwrap_or(0.0)
    }
}

/// `Σ_i c_i g_i`.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn Functional)>,
}

impl<'a> Combination<'a> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn with(mut self, coefficient: f64, g: &'a dyn Functional) -> Self {
        self.terms.push((coefficient, g));
        self
    }

    /// `f - h`.
    pub fn difference(f: &'a dyn Functional, h: &'a dyn Functional) -> Self {
        Self::new().with(1.0, f).with(-1.0, h)
    }
}

impl Default for Combination<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl Functional for Combination<'_> {
    fn density(&self, mesh: &Mesh, element: usize, x: Point) -> f64 {
        self.terms.iter().map(|(c, g)| c * g.density(mesh, element, x)).sum()
    }

    fn density_degree(&self) -> Option<u32> {
        self.terms.iter().try_fold(0, |m, (_, g)| g.density_degree().map(|d| m.max(d)))
    }

    fn face_weight(&self, face: usize) -> f64 {
        self.terms.iter().map(|(c, g)| c * g.face_weight(face)).sum()
    }

    fn quad_degree(&self) -> u32 {
        self.terms.iter().map(|(_, g)| g.quad_degree()).max().unwrap_or(DEFAULT_DEGREE)
    }
}

/// `f - h` for two functionals of any (possibly unsized) type.
pub struct Difference<'a, A: ?Sized, B: ?Sized> {
    pub left: &'a A,
    pub right: &'a B,
}

impl<'a, A: Functional + ?Sized, B: Functional + ?Sized> Difference<'a, A, B> {
    pub fn new(left: &'a A, right: &'a B) -> Self {
        Self { left, right }
    }
}

impl<A: Functional + ?Sized, B: Functional + ?Sized> Functional for Difference<'_, A, B> {
    fn density(&self, mesh: &Mesh, element: usize, x: Point) -> f64 {
        self.left.density(mesh, element, x) - self.right.density(mesh, element, x)
    }

    fn density_degree(&self) -> Option<u32> {
        Some(self.left.density_degree()?.max(self.right.density_degree()?))
    }

    fn face_weight(&self, face: usize) -> f64 {
        self.left.face_weight(face) - self.right.face_weight(face)
    }

    fn quad_degree(&self) -> u32 {
        self.left.quad_degree().max(self.right.quad_degree())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::two_triangle_square;

    #[test]
    fn tilde_s_pairs_exactly() {
        let mesh = two_triangle_square();
        let mut g = TildeSFunctional::zeros(&mesh);
        g.densities[0] = [1.0, 2.0, 3.0];
        let tri = mesh.triangle(0);
        // ∫_T p λ_0 with p = Σ p_k λ_k.
        let [v] = pair_volume(&g, &mesh, 0, &tri, 1, |l, _| [l[0]]);
        let area = tri.area();
        let exact = area / 6.0 * 1.0 + area / 12.0 * (2.0 + 3.0);
        assert!((v - exact).abs() < 1e-15);
        let diag = (0..mesh.num_faces()).find(|&f| mesh.face(f).is_interior()).unwrap();
        g.faces[diag] = 2.0;
        let [a, b] = mesh.face(diag).vertices.map(|v| mesh.vertex(v));
        let [w] = pair_face(&g, diag, a, b, 2, |s, _| [s * (1.0 - s)]);
        assert!((w - 2.0 * 2f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn combination_degree() {
        let mesh = two_triangle_square();
        let g = TildeSFunctional::zeros(&mesh);
        let f = AnalyticFunctional::new(|x: Point| x[0].exp(), 9);
        let both = Combination::difference(&f, &g);
        assert_eq!(both.density_degree(), None);
        assert_eq!(both.quad_degree(), 9);
        let only = Combination::new().with(2.0, &g);
        assert_eq!(only.density_degree(), Some(1));
    }
}
