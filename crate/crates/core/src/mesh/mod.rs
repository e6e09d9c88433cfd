//! Conforming triangulations of a polygonal domain.
//!
//! Elements are stored counter-clockwise with the *newest vertex* first, so
//! the refinement edge of element `[a, b, c]` is `(b, c)`. Local face `k` of
//! an element is the edge opposite its local vertex `k`.

mod generate;
mod io;
mod refine;
mod squeeze;

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{self, Point, Triangle};

pub use generate::{criss_cross_square, l_shape, perturbed_square, structured_square, two_triangle_square};
pub use io::{load_mesh, parse_mesh, write_mesh};
pub use refine::{prolong, Refinement};
pub use squeeze::SqueezedTriangle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read mesh file {path}: {message}")]
    Io { path: String, message: String },
    #[error("element {element} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange { element: usize, vertex: usize, count: usize },
    #[error("element {element} is inverted or degenerate (signed area {area:e})")]
    Inverted { element: usize, area: f64 },
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("vertex {0} belongs to no element")]
    UnusedVertex(usize),
    #[error("invalid vertex index {0}")]
    InvalidVertex(usize),
    #[error("invalid element index {0}")]
    InvalidElement(usize),
    #[error("face {face} is not a face of element {element}")]
    NotAFace { element: usize, face: usize },
    #[error("squeeze factor {0} outside (0, 1]")]
    InvalidTheta(f64),
}

/// An edge of the triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    /// Adjacent elements; the first has the lower index.
    pub elements: (usize, Option<usize>),
    /// Unit normal. Points from `elements.0` into `elements.1` on interior
    /// faces and outward on boundary faces.
    pub normal: Point,
    pub length: f64,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.elements.1.is_some()
    }

    pub fn adjacent(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.elements.0).chain(self.elements.1)
    }
}

/// The star `ω_z` of a vertex together with its skeleton `σ_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Star {
    pub center: usize,
    pub elements: Vec<usize>,
    pub faces: Vec<usize>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 3]>,
    vertex_elements: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    diameters: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from raw tables, orienting every element counter-clockwise
    /// with its longest edge as refinement edge.
    pub fn new(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        let mut oriented = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= n) {
                return Err(MeshError::VertexOutOfRange { element: e, vertex: v, count: n });
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = 0.5 * geometry::orient(a, b, c);
            if !(area > 0.0) {
                return Err(MeshError::Inverted { element: e, area });
            }
            let t = Triangle::new(a, b, c);
            let mut longest = 0;
            for k in 1..3 {
                if t.edge_length(k) > t.edge_length(longest) {
                    longest = k;
                }
            }
            oriented.push([tri[longest], tri[(longest + 1) % 3], tri[(longest + 2) % 3]]);
        }
        let mesh = Self::from_oriented(vertices, oriented)?;
        mesh.check_no_hanging_vertices()?;
        Ok(mesh)
    }

    /// Builds topology for elements that are already positively oriented and
    /// carry their refinement edge in slots 1 and 2.
    pub(crate) fn from_oriented(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut seen = HashMap::with_capacity(elements.len());
        for (e, tri) in elements.iter().enumerate() {
            let mut key = *tri;
            key.sort_unstable();
            if key[0] == key[1] || key[1] == key[2] {
                return Err(MeshError::NonConforming(format!("element {e} repeats a vertex")));
            }
            if let Some(prev) = seen.insert(key, e) {
                return Err(MeshError::NonConforming(format!("elements {prev} and {e} are duplicates")));
            }
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; elements.len()];
        // (min, max) -> (face index, orientation of first use)
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        for (e, tri) in elements.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let t = geometry::sub(pb, pa);
                        let length = geometry::norm(t);
                        // Outward for a counter-clockwise traversal a -> b.
                        let normal = [t[1] / length, -t[0] / length];
                        lookup.insert(key, faces.len());
                        element_faces[e][k] = faces.len();
                        faces.push(Face { vertices: [a, b], elements: (e, None), normal, length });
                    }
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.elements.1.is_some() {
                            return Err(MeshError::NonConforming(format!(
                                "edge ({}, {}) is shared by more than two elements",
                                key.0, key.1
                            )));
                        }
                        if face.vertices != [b, a] {
                            return Err(MeshError::NonConforming(format!(
                                "elements {} and {e} overlap along edge ({}, {})",
                                face.elements.0, key.0, key.1
                            )));
                        }
                        face.elements.1 = Some(e);
                        element_faces[e][k] = f;
                    }
                }
            }
        }

        let mut vertex_elements = vec![Vec::new(); nv];
        for (e, tri) in elements.iter().enumerate() {
            for &v in tri {
                vertex_elements[v].push(e);
            }
        }
        if let Some(v) = vertex_elements.iter().position(Vec::is_empty) {
            return Err(MeshError::UnusedVertex(v));
        }
        let mut vertex_faces = vec![Vec::new(); nv];
        let mut boundary_vertex = vec![false; nv];
        for (f, face) in faces.iter().enumerate() {
            for &v in &face.vertices {
                vertex_faces[v].push(f);
                if !face.is_interior() {
                    boundary_vertex[v] = true;
                }
            }
        }
        let diameters = elements
            .iter()
            .map(|tri| Triangle::new(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]).diameter())
            .collect();
        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            vertex_elements,
            vertex_faces,
            boundary_vertex,
            diameters,
        })
    }

    /// A vertex strictly inside a boundary edge signals a hanging node.
    fn check_no_hanging_vertices(&self) -> Result<(), MeshError> {
        let boundary: Vec<usize> = (0..self.num_vertices()).filter(|&v| self.boundary_vertex[v]).collect();
        for face in self.faces.iter().filter(|f| !f.is_interior()) {
            let [a, b] = face.vertices.map(|v| self.vertices[v]);
            for &v in &boundary {
                if face.vertices.contains(&v) {
                    continue;
                }
                let p = self.vertices[v];
                let d = geometry::segment_distance(p, a, b);
                if d <= 1e-12 * face.length {
                    return Err(MeshError::NonConforming(format!(
                        "vertex {v} hangs on edge ({}, {})",
                        face.vertices[0], face.vertices[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exhaustive conformity audit used after refinement.
    pub fn audit(&self) -> Result<(), MeshError> {
        for (e, tri) in self.elements.iter().enumerate() {
            let area = self.triangle(e).signed_area();
            if !(area > 0.0) {
                return Err(MeshError::Inverted { element: e, area });
            }
            for (k, &f) in self.element_faces[e].iter().enumerate() {
                let face = &self.faces[f];
                let mut expect = [tri[(k + 1) % 3], tri[(k + 2) % 3]];
                expect.sort_unstable();
                let mut got = face.vertices;
                got.sort_unstable();
                if expect != got || !face.adjacent().any(|x| x == e) {
                    return Err(MeshError::NonConforming(format!("face table of element {e} is stale")));
                }
            }
        }
        self.check_no_hanging_vertices()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> [usize; 3] {
        self.elements[e]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// Face indices of element `e`; entry `k` is opposite local vertex `k`.
    pub fn element_faces(&self, e: usize) -> [usize; 3] {
        self.element_faces[e]
    }

    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn triangle(&self, e: usize) -> Triangle {
        let [a, b, c] = self.elements[e];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self, e: usize) -> f64 {
        self.triangle(e).area()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.area(e)).sum()
    }

    /// `h_T`: the longest edge of `T`.
    pub fn h_element(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    /// `h_F`: the largest `h_T` over elements sharing `F`.
    pub fn h_face(&self, f: usize) -> f64 {
        self.faces[f].adjacent().map(|e| self.diameters[e]).fold(0.0, f64::max)
    }

    /// `sup_T h_T / ρ_T`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| {
                let t = self.triangle(e);
                t.diameter() / t.inscribed_diameter()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_h(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    /// Local index of vertex `v` in element `e`.
    pub fn local_index(&self, e: usize, v: usize) -> Option<usize> {
        self.elements[e].iter().position(|&x| x == v)
    }

    /// Local face slot of face `f` in element `e`.
    pub fn local_face(&self, e: usize, f: usize) -> Option<usize> {
        self.element_faces[e].iter().position(|&x| x == f)
    }

    pub fn star(&self, z: usize) -> Result<Star, MeshError> {
        if z >= self.num_vertices() {
            return Err(MeshError::InvalidVertex(z));
        }
        Ok(Star {
            center: z,
            elements: self.vertex_elements[z].clone(),
            faces: self.vertex_faces[z].clone(),
            on_boundary: self.boundary_vertex[z],
        })
    }

    /// Distance from `x` to the domain boundary.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        self.faces
            .iter()
            .filter(|f| !f.is_interior())
            .map(|f| geometry::segment_distance(x, self.vertices[f.vertices[0]], self.vertices[f.vertices[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed jump `∇v|_{T₁}·n − ∇v|_{T₀}·n` of a normal derivative across an
    /// interior face, for piecewise constant gradients indexed by element.
    pub fn normal_jump(&self, f: usize, gradient: impl Fn(usize) -> Point) -> f64 {
        let face = &self.faces[f];
        match face.elements.1 {
            Some(hi) => {
                let lo = face.elements.0;
                geometry::dot(gradient(hi), face.normal) - geometry::dot(gradient(lo), face.normal)
            }
            None => 0.0,
        }
    }

    /// Every vertex's `ω_z` as element lists.
    pub fn stars(&self) -> Vec<Star> {
        (0..self.num_vertices()).map(|z| self.star(z).expect("valid vertex")).collect()
    }
}
