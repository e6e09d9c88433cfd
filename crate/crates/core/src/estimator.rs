//! Vertex indicators from the residual representation in `S̃`.
//!
//! With `Πf` the projection of the data, the residual `Πf - 𝓛(U)` has the
//! element part `r|_T = (Πf)|_T - κ²U|_T` (P1) and the face part
//! `j|_F = (Πf)_F + [∇U·n_F]` (constant). The indicator of a vertex `z` is
//!
//! `E(U, z) = (Σ_{T∋z} min{h_T, κ⁻¹}² ‖r‖_T²)^{1/2} + (Σ_{F∋z} min{h_F, κ⁻¹} ‖j‖_F²)^{1/2}`,
//!
//! and the oscillation of `z` is a discrete dual norm of `f - Πf` on `ω_z`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dual_system::DualSystem;
use crate::functional::{pair_volume, Difference, Functional, TildeSFunctional};
use crate::galerkin::{load_vector, DiscreteFunction, DofMap};
use crate::linalg::SolveError;
use crate::mesh::{Mesh, Star};
use crate::patch::{discrete_dual_norm, global_dual_norm, RefinedPatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("functional is not orthogonal to the discrete space (relative defect {0:.3e})")]
    NotOrthogonal(f64),
}

/// Default depth of the local subdivisions used for oscillation dual norms.
pub const DEFAULT_DEPTH: u32 = 2;

/// `min{h, κ⁻¹}`.
pub fn weight(h: f64, kappa: f64) -> f64 {
    h.min(1.0 / kappa)
}

/// `‖p‖²_T` for `p = Σ_k c_k λ_k`.
pub fn p1_norm_squared(area: f64, c: [f64; 3]) -> f64 {
    let s = c[0] + c[1] + c[2];
    area / 12.0 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + s * s)
}

/// Residual `Πf - 𝓛(U)` split into element and face parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualData {
    /// `r|_T` at the local vertices of `T`.
    pub element: Vec<[f64; 3]>,
    /// `j|_F`; zero on boundary faces.
    pub face: Vec<f64>,
}

impl ResidualData {
    /// The residual as a member of `S̃`.
    pub fn to_functional(&self) -> TildeSFunctional {
        TildeSFunctional { densities: self.element.clone(), faces: self.face.clone() }
    }
}

pub fn residuals(mesh: &Mesh, kappa: f64, u: &DiscreteFunction, pi_f: &TildeSFunctional) -> ResidualData {
    let k2 = kappa * kappa;
    let element = (0..mesh.num_elements())
        .map(|e| {
            let ul = u.local(mesh, e);
            let p = pi_f.densities[e];
            [p[0] - k2 * ul[0], p[1] - k2 * ul[1], p[2] - k2 * ul[2]]
        })
        .collect();
    let gradients: Vec<_> = (0..mesh.num_elements()).map(|e| u.gradient(mesh, e)).collect();
    let face = (0..mesh.num_faces())
        .map(|f| if mesh.face(f).is_interior() { pi_f.faces[f] + mesh.normal_jump(f, |e| gradients[e]) } else { 0.0 })
        .collect();
    ResidualData { element, face }
}

/// `E(U, z)`.
pub fn vertex_indicator(mesh: &Mesh, star: &Star, rd: &ResidualData, kappa: f64) -> f64 {
    let vol: f64 = star
        .elements
        .iter()
        .map(|&e| weight(mesh.h_element(e), kappa).powi(2) * p1_norm_squared(mesh.area(e), rd.element[e]))
        .sum();
    let jump: f64 = star
        .faces
        .iter()
        .filter(|&&f| mesh.face(f).is_interior())
        .map(|&f| weight(mesh.h_face(f), kappa) * rd.face[f] * rd.face[f] * mesh.face(f).length)
        .sum();
    vol.sqrt() + jump.sqrt()
}

/// `‖|f - Πf‖|_{*;ω_z}`, discretely.
pub fn oscillation_surrogate<G: Functional + ?Sized>(
    mesh: &Mesh,
    star: &Star,
    f: &G,
    pi_f: &TildeSFunctional,
    kappa: f64,
    depth: u32,
) -> Result<f64, SolveError> {
    let diff = Difference::new(f, pi_f);
    discrete_dual_norm(mesh, &star.elements, &diff, kappa, depth)
}

/// `‖|Πf - 𝓛(U)‖|_{*;ω_z}`, discretely: the dual-norm form of the indicator.
pub fn residual_dual_norm(mesh: &Mesh, star: &Star, rd: &ResidualData, kappa: f64, depth: u32) -> Result<f64, SolveError> {
    discrete_dual_norm(mesh, &star.elements, &rd.to_functional(), kappa, depth)
}

/// Squared classical residual indicator of element `e`:
///
/// `min{h_T,κ⁻¹}² ‖f_T - κ²U‖²_T + ½ Σ_{F ⊂ ∂T interior} min{h_F,κ⁻¹} ‖[∇U·n_F]‖²_F`,
/// with `f_T` the mean of the volume density of `f` on `T`.
pub fn classic_indicator<G: Functional + ?Sized>(mesh: &Mesh, e: usize, f: &G, u: &DiscreteFunction, kappa: f64) -> f64 {
    let tri = mesh.triangle(e);
    let area = tri.area();
    let [mean] = pair_volume(f, mesh, e, &tri, 0, |_, _| [1.0]);
    let f_t = mean / area;
    let k2 = kappa * kappa;
    let ul = u.local(mesh, e);
    let vol = weight(mesh.h_element(e), kappa).powi(2) * p1_norm_squared(area, ul.map(|v| f_t - k2 * v));
    let jump: f64 = mesh
        .element_faces(e)
        .iter()
        .filter(|&&f| mesh.face(f).is_interior())
        .map(|&f| {
            let j = mesh.normal_jump(f, |t| u.gradient(mesh, t));
            0.5 * weight(mesh.h_face(f), kappa) * j * j * mesh.face(f).length
        })
        .sum();
    vol + jump
}

/// Global and star-summed discrete dual norms of a functional orthogonal to `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizeCheck {
    pub global: f64,
    pub local_sum: f64,
    /// `max_z |⟨g, φ_z⟩| / ‖|φ_z‖|`, relative to `global`.
    pub orthogonality_defect: f64,
}

impl LocalizeCheck {
    pub fn ratio(&self) -> f64 {
        if self.global == 0.0 {
            1.0
        } else {
            self.local_sum / self.global
        }
    }
}

/// Largest tolerated relative orthogonality defect in [`localize_check`].
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

pub fn localize_check<G: Functional + ?Sized>(
    mesh: &Mesh,
    kappa: f64,
    g: &G,
    depth: u32,
) -> Result<LocalizeCheck, EstimatorError> {
    let global = global_dual_norm(mesh, g, kappa, depth)?;
    let dofs = DofMap::new(mesh);
    let loads = load_vector(mesh, &dofs, g);
    let k2 = kappa * kappa;
    let mut defect: f64 = 0.0;
    for (d, &b) in loads.iter().enumerate() {
        let z = dofs.vertex(d);
        let hat_energy: f64 = mesh
            .vertex_elements(z)
            .iter()
            .map(|&e| {
                let t = mesh.triangle(e);
                let k = mesh.local_index(e, z).expect("incident element");
                let g = t.gradients()[k];
                t.area() * (g[0] * g[0] + g[1] * g[1] + k2 / 6.0)
            })
            .sum();
        defect = defect.max(b.abs() / hat_energy.sqrt());
    }
    let defect = if global > 0.0 { defect / global } else if defect > 0.0 { f64::INFINITY } else { 0.0 };
    if defect > ORTHOGONALITY_TOL {
        return Err(EstimatorError::NotOrthogonal(defect));
    }
    let local: Vec<f64> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|z| {
            let p = RefinedPatch::new(mesh, mesh.vertex_elements(z), depth);
            p.dual_norm(mesh, g, kappa).map(|v| v * v)
        })
        .collect::<Result<_, _>>()?;
    Ok(LocalizeCheck { global, local_sum: local.iter().sum::<f64>().sqrt(), orthogonality_defect: defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateOptions {
    /// Subdivision depth of the oscillation dual norms; `None` skips them.
    pub oscillation_depth: Option<u32>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { oscillation_depth: Some(DEFAULT_DEPTH) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexEntry {
    pub vertex: usize,
    pub x: f64,
    pub y: f64,
    pub indicator: f64,
    pub oscillation: f64,
    pub n_elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub kappa: f64,
    pub vertices: Vec<VertexEntry>,
    /// `min{h_T, κ⁻¹}` per element.
    pub element_weights: Vec<f64>,
    /// `min{h_F, κ⁻¹}` per face.
    pub face_weights: Vec<f64>,
    /// Squared classical indicators per element.
    pub classic: Vec<f64>,
    /// `(Σ_z E(U,z)²)^{1/2}`.
    pub estimator: f64,
    /// `(Σ_z osc_z²)^{1/2}`.
    pub oscillation: f64,
    /// `(Σ_T η_T²)^{1/2}` of the classical indicator.
    pub classic_estimator: f64,
}

impl IndicatorReport {
    /// `(estimator² + oscillation²)^{1/2}`.
    pub fn total(&self) -> f64 {
        self.estimator.hypot(self.oscillation)
    }

    pub fn indicators(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.indicator).collect()
    }
}

/// Projects `f`, forms the residual and evaluates every local quantity.
pub fn estimate<G: Functional + ?Sized>(
    mesh: &Mesh,
    duals: &DualSystem,
    f: &G,
    u: &DiscreteFunction,
    options: &EstimateOptions,
) -> Result<IndicatorReport, SolveError> {
    let kappa = duals.kappa;
    let pi_f = duals.project(mesh, f);
    let rd = residuals(mesh, kappa, u, &pi_f);
    let osc_functional = Difference::new(f, &pi_f);
    let vertices: Vec<VertexEntry> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|z| {
            let star = mesh.star(z).expect("valid vertex");
            let indicator = vertex_indicator(mesh, &star, &rd, kappa);
            let oscillation = match options.oscillation_depth {
                Some(depth) => discrete_dual_norm(mesh, &star.elements, &osc_functional, kappa, depth)?,
                None => 0.0,
            };
            let [x, y] = mesh.vertex(z);
            Ok(VertexEntry { vertex: z, x, y, indicator, oscillation, n_elements: star.elements.len() })
        })
        .collect::<Result<_, SolveError>>()?;
    let classic: Vec<f64> =
        (0..mesh.num_elements()).into_par_iter().map(|e| classic_indicator(mesh, e, f, u, kappa)).collect();
    let sq = |it: &mut dyn Iterator<Item = f64>| it.map(|v| v * v).sum::<f64>().sqrt();
    Ok(IndicatorReport {
        kappa,
        estimator: sq(&mut vertices.iter().map(|v| v.indicator)),
        oscillation: sq(&mut vertices.iter().map(|v| v.oscillation)),
        classic_estimator: classic.iter().sum::<f64>().sqrt(),
        element_weights: (0..mesh.num_elements()).map(|e| weight(mesh.h_element(e), kappa)).collect(),
        face_weights: (0..mesh.num_faces()).map(|f| weight(mesh.h_face(f), kappa)).collect(),
        vertices,
        classic,
    })
}
