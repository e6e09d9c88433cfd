//! Quadrature on triangles and edges.
//!
//! Monomials in barycentric coordinates are integrated exactly with the
//! factorial formula. General integrands use collapsed (conical product)
//! Gauss-Legendre rules on the reference triangle, which exist for every
//! degree; rules are built once and cached.

use std::sync::OnceLock;

use thiserror::Error;

use crate::geometry::{Point, Triangle};

/// Highest polynomial degree for which a rule is provided.
pub const MAX_DEGREE: u32 = 30;

/// Default rule degree for pairings of analytic data with test functions.
pub const DEFAULT_DEGREE: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0} (maximum {MAX_DEGREE})")]
    UnsupportedDegree(u32),
}

/// A rule on the reference triangle `conv{(0,0),(1,0),(0,1)}` in barycentric form.
///
/// Weights sum to the reference area `1/2`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

/// A Gauss-Legendre rule on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫_T λ₀^a λ₁^b λ₂^c = 2|T| a! b! c! / (a+b+c+2)!`.
pub fn integrate_barycentric(area: f64, exponents: [u32; 3]) -> f64 {
    let [a, b, c] = exponents;
    2.0 * area * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
}

/// `∫_F μ₀^a μ₁^b = |F| a! b! / (a+b+1)!` for the two edge barycentrics.
pub fn integrate_barycentric_edge(length: f64, exponents: [u32; 2]) -> f64 {
    let [a, b] = exponents;
    length * factorial(a) * factorial(b) / factorial(a + b + 1)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn build_line(degree: u32) -> LineRule {
    let n = (degree as usize + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    LineRule {
        points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
        degree,
    }
}

fn build_triangle(degree: u32) -> QuadratureRule {
    // (u, v) ∈ [0,1]² ↦ (u, (1-u) v); the Jacobian (1-u) raises the degree in u by one.
    let outer = build_line(degree + 1);
    let inner = build_line(degree);
    let mut points = Vec::with_capacity(outer.points.len() * inner.points.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (&u, &wu) in outer.points.iter().zip(&outer.weights) {
        for (&v, &wv) in inner.points.iter().zip(&inner.weights) {
            let x = u;
            let y = (1.0 - u) * v;
            points.push([1.0 - x - y, x, y]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree }
}

static TRIANGLE_RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
static LINE_RULES: OnceLock<Vec<LineRule>> = OnceLock::new();

/// Cached triangle rule exact for total degree `degree`.
pub fn triangle_rule(degree: u32) -> Result<&'static QuadratureRule, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let rules = TRIANGLE_RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_triangle).collect());
    Ok(&rules[degree as usize])
}

/// Cached Gauss-Legendre rule on `[0, 1]` exact for degree `degree`.
pub fn line_rule(degree: u32) -> Result<&'static LineRule, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    let rules = LINE_RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_line).collect());
    Ok(&rules[degree as usize])
}

/// Internal variant for degrees computed from known polynomial data.
pub(crate) fn triangle_rule_clamped(degree: u32) -> &'static QuadratureRule {
    triangle_rule(degree.min(MAX_DEGREE)).expect("clamped degree")
}

pub(crate) fn line_rule_clamped(degree: u32) -> &'static LineRule {
    line_rule(degree.min(MAX_DEGREE)).expect("clamped degree")
}

/// `∫_T fn` with a rule of the given degree; `fn` receives barycentric and Cartesian coordinates.
pub fn gauss_simplex<F>(tri: &Triangle, degree: u32, f: F) -> Result<f64, QuadratureError>
where
    F: Fn([f64; 3], Point) -> f64,
{
    let rule = triangle_rule(degree)?;
    let scale = 2.0 * tri.area();
    Ok(scale
        * rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&l, &w)| w * f(l, tri.point(l)))
            .sum::<f64>())
}

/// `∫_{[a,b]} fn`; `fn` receives the parameter `s ∈ [0,1]` (so `λ_a = 1-s`) and the point.
pub fn gauss_edge<F>(a: Point, b: Point, degree: u32, f: F) -> Result<f64, QuadratureError>
where
    F: Fn(f64, Point) -> f64,
{
    let rule = line_rule(degree)?;
    let len = crate::geometry::distance(a, b);
    Ok(len
        * rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| w * f(s, crate::geometry::lerp(a, b, s)))
            .sum::<f64>())
}

/// Quadrature of several integrands sharing the same evaluation points.
pub fn gauss_simplex_many<const N: usize, F>(tri: &Triangle, degree: u32, f: F) -> [f64; N]
where
    F: Fn([f64; 3], Point) -> [f64; N],
{
    let rule = triangle_rule_clamped(degree);
    let scale = 2.0 * tri.area();
    let mut acc = [0.0; N];
    for (&l, &w) in rule.points.iter().zip(&rule.weights) {
        let v = f(l, tri.point(l));
        for k in 0..N {
            acc[k] += w * v[k];
        }
    }
    acc.map(|v| v * scale)
}
