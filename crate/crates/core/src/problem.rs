//! Model problems `-Δu + κ²u = f` with homogeneous Dirichlet data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functional::Functional;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::{DEFAULT_DEGREE, MAX_DEGREE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("reaction parameter must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("unknown right-hand side preset `{0}` (expected sinsin, const1 or layer1d)")]
    UnknownPreset(String),
    #[error("quadrature degree {0} outside 1..={MAX_DEGREE}")]
    InvalidDegree(u32),
}

/// Named right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `u = sin(πx) sin(πy)`, `f = (2π² + κ²) u`.
    SinSin,
    /// `f ≡ 1`; boundary layers of width `κ⁻¹`, no closed-form solution.
    Const1,
    /// `u = w(x) sin(πy)` with `w = 1 - cosh(κ(x-½))/cosh(κ/2)`.
    Layer1d,
}

impl FromStr for Preset {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sinsin" => Ok(Self::SinSin),
            "const1" => Ok(Self::Const1),
            "layer1d" => Ok(Self::Layer1d),
            other => Err(ProblemError::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SinSin => "sinsin",
            Self::Const1 => "const1",
            Self::Layer1d => "layer1d",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub kappa: f64,
    pub preset: Preset,
    pub quad_degree: u32,
}

impl Problem {
    pub fn new(kappa: f64, preset: Preset) -> Result<Self, ProblemError> {
        Self::with_degree(kappa, preset, DEFAULT_DEGREE)
    }

    pub fn with_degree(kappa: f64, preset: Preset, quad_degree: u32) -> Result<Self, ProblemError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(ProblemError::InvalidKappa(kappa));
        }
        if quad_degree == 0 || quad_degree > MAX_DEGREE {
            return Err(ProblemError::InvalidDegree(quad_degree));
        }
        Ok(Self { kappa, preset, quad_degree })
    }

    pub fn rhs_value(&self, x: Point) -> f64 {
        let k = self.kappa;
        match self.preset {
            Preset::SinSin => (2.0 * PI * PI + k * k) * (PI * x[0]).sin() * (PI * x[1]).sin(),
            Preset::Const1 => 1.0,
            Preset::Layer1d => {
                let (w, _) = layer_profile(k, x[0]);
                (k * k + PI * PI * w) * (PI * x[1]).sin()
            }
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        !matches!(self.preset, Preset::Const1)
    }

    /// Exact solution and its gradient, when known.
    pub fn exact(&self, x: Point) -> Option<(f64, Point)> {
        match self.preset {
            Preset::SinSin => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                Some((sx * sy, [PI * cx * sy, PI * sx * cy]))
            }
            Preset::Const1 => None,
            Preset::Layer1d => {
                let (w, dw) = layer_profile(self.kappa, x[0]);
                let (sy, cy) = (PI * x[1]).sin_cos();
                Some((w * sy, [dw * sy, PI * w * cy]))
            }
        }
    }

    /// Squared energy norm `‖∇u‖² + κ²‖u‖²` of the exact solution over the mesh, by quadrature.
    pub fn exact_energy_squared(&self, mesh: &Mesh) -> Option<f64> {
        if !self.has_exact_solution() {
            return None;
        }
        let k2 = self.kappa * self.kappa;
        let mut total = 0.0;
        for e in 0..mesh.num_elements() {
            let t = mesh.triangle(e);
            total += crate::quadrature::gauss_simplex(&t, self.quad_degree, |_, x| {
                let (u, g) = self.exact(x).expect("exact solution");
                g[0] * g[0] + g[1] * g[1] + k2 * u * u
            })
            .expect("valid degree");
        }
        Some(total)
    }
}

/// `w(x) = 1 - cosh(κ(x-½))/cosh(κ/2)` and `w'(x)`, evaluated without overflow.
fn layer_profile(kappa: f64, x: f64) -> (f64, f64) {
    let s = x - 0.5;
    let a = (kappa * (s.abs() - 0.5)).exp();
    let b = (-kappa * (s.abs() + 0.5)).exp();
    let denom = 1.0 + (-kappa).exp();
    let w = 1.0 - (a + b) / denom;
    let dw = -s.signum() * kappa * (a - b) / denom;
    (w, dw)
}

impl Functional for Problem {
    fn density(&self, _mesh: &Mesh, _element: usize, x: Point) -> f64 {
        self.rhs_value(x)
    }

    fn density_degree(&self) -> Option<u32> {
        match self.preset {
            Preset::Const1 => Some(0),
            _ => None,
        }
    }

    fn quad_degree(&self) -> u32 {
        self.quad_degree
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_residual(p: &Problem, x: Point) -> f64 {
        // Second differences of the exact solution.
        let h = 1e-4;
        let u = |y: Point| p.exact(y).unwrap().0;
        let lap = (u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h])
            - 4.0 * u(x))
            / (h * h);
        -lap + p.kappa * p.kappa * u(x) - p.rhs_value(x)
    }

    #[test]
    fn manufactured_solutions_satisfy_pde() {
        for preset in [Preset::SinSin, Preset::Layer1d] {
            let p = Problem::new(3.0, preset).unwrap();
            for x in [[0.3, 0.4], [0.71, 0.2], [0.5, 0.5]] {
                let r = laplacian_residual(&p, x);
                assert!(r.abs() < 1e-4 * p.rhs_value(x).abs().max(1.0), "{preset}: {r}");
            }
        }
    }

    #[test]
    fn layer_profile_is_stable_and_vanishes_on_boundary() {
        for kappa in [1.0, 1e2, 1e4, 1e8] {
            let (w0, _) = layer_profile(kappa, 0.0);
            let (w1, _) = layer_profile(kappa, 1.0);
            assert!(w0.abs() < 1e-14 && w1.abs() < 1e-14);
            let (wm, dm) = layer_profile(kappa, 0.5);
            assert!(wm.is_finite() && dm.abs() < 1e-12);
        }
        // Derivative check by central difference.
        let k = 7.0;
        let x = 0.23;
        let (_, d) = layer_profile(k, x);
        let fd = (layer_profile(k, x + 1e-6).0 - layer_profile(k, x - 1e-6).0) / 2e-6;
        assert!((d - fd).abs() < 1e-6);
    }

    #[test]
    fn validates_inputs() {
        assert!(matches!(Problem::new(0.0, Preset::SinSin), Err(ProblemError::InvalidKappa(_))));
        assert!(matches!(Problem::new(f64::NAN, Preset::SinSin), Err(ProblemError::InvalidKappa(_))));
        assert!(Problem::with_degree(1.0, Preset::SinSin, 99).is_err());
        assert_eq!("layer1d".parse::<Preset>().unwrap(), Preset::Layer1d);
        assert!("foo".parse::<Preset>().is_err());
    }

    #[test]
    fn sinsin_energy() {
        let p = Problem::with_degree(2.0, Preset::SinSin, 12).unwrap();
        let m = crate::mesh::structured_square(8);
        let e = p.exact_energy_squared(&m).unwrap();
        let exact = PI * PI / 2.0 + 4.0 / 4.0;
        assert!((e - exact).abs() < 1e-6);
    }
}
