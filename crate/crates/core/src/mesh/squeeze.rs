//! Elements compressed toward one of their faces.

use super::{Mesh, MeshError};
use crate::geometry::{self, Point, Triangle};

/// `T_θ`: the image of `T` under the affine map that fixes the face `F`
/// pointwise and scales the distance to `F` by `θ`.
///
/// With `T = conv{p, q, a}` counter-clockwise and `F = [p, q]`, the reference
/// map sends `x̂ ↦ p + x̂₁(q - p) + x̂₂(a - p)`, so the squeezed apex is
/// `p + θ(a - p)`. Corners are stored as `[p, q, apex]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedTriangle {
    pub element: usize,
    pub face: usize,
    /// Local index in `element` of the vertex opposite `face`.
    pub opposite: usize,
    pub theta: f64,
    pub parent: Triangle,
    pub squeezed: Triangle,
}

impl SqueezedTriangle {
    pub fn new(parent: Triangle, opposite: usize, theta: f64) -> Result<Self, MeshError> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(MeshError::InvalidTheta(theta));
        }
        let a = parent.corners[opposite];
        let p = parent.corners[(opposite + 1) % 3];
        let q = parent.corners[(opposite + 2) % 3];
        let apex = geometry::lerp(p, a, theta);
        Ok(Self {
            element: usize::MAX,
            face: usize::MAX,
            opposite,
            theta,
            parent,
            squeezed: Triangle::new(p, q, apex),
        })
    }

    /// The part `T \ T_θ`, which is the triangle `(apex, q, a)`; `None` when `θ = 1`.
    pub fn remainder(&self) -> Option<Triangle> {
        if self.theta >= 1.0 {
            return None;
        }
        let [_, q, apex] = self.squeezed.corners;
        Some(Triangle::new(apex, q, self.parent.corners[self.opposite]))
    }

    /// Endpoints `[p, q]` of the fixed face.
    pub fn face_points(&self) -> [Point; 2] {
        [self.squeezed.corners[0], self.squeezed.corners[1]]
    }

    /// Maps a point of `T` to the corresponding point of `T_θ`.
    pub fn to_squeezed(&self, x: Point) -> Point {
        let l = self.parent.barycentric(x);
        // Parent barycentrics in [p, q, a] order map onto [p, q, apex].
        let o = self.opposite;
        self.squeezed.point([l[(o + 1) % 3], l[(o + 2) % 3], l[o]])
    }

    /// Inverse of [`Self::to_squeezed`].
    pub fn from_squeezed(&self, x: Point) -> Point {
        let l = self.squeezed.barycentric(x);
        let o = self.opposite;
        let mut parent = [0.0; 3];
        parent[(o + 1) % 3] = l[0];
        parent[(o + 2) % 3] = l[1];
        parent[o] = l[2];
        self.parent.point(parent)
    }

    /// Whether `x` lies in the closed squeezed triangle, up to roundoff.
    pub fn contains(&self, x: Point) -> bool {
        self.squeezed.barycentric(x).iter().all(|&l| l >= -1e-12)
    }
}

impl Mesh {
    /// Squeezes element `e` toward its face `f` by the factor `theta`.
    pub fn squeeze_element(&self, e: usize, f: usize, theta: f64) -> Result<SqueezedTriangle, MeshError> {
        if e >= self.num_elements() {
            return Err(MeshError::InvalidElement(e));
        }
        let opposite = self.local_face(e, f).ok_or(MeshError::NotAFace { element: e, face: f })?;
        let mut s = SqueezedTriangle::new(self.triangle(e), opposite, theta)?;
        s.element = e;
        s.face = f;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    fn reference() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    fn bottom_face(m: &Mesh) -> usize {
        (0..m.num_faces())
            .find(|&f| {
                let mut v = m.face(f).vertices;
                v.sort_unstable();
                v == [0, 1]
            })
            .unwrap()
    }

    #[test]
    fn identity_for_theta_one() {
        let m = reference();
        let f = bottom_face(&m);
        let s = m.squeeze_element(0, f, 1.0).unwrap();
        assert!((s.squeezed.area() - 0.5).abs() < 1e-15);
        assert!(s.remainder().is_none());
        let mut corners = s.squeezed.corners.to_vec();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(corners, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn halving_moves_apex() {
        let m = reference();
        let f = bottom_face(&m);
        let s = m.squeeze_element(0, f, 0.5).unwrap();
        assert_eq!(s.squeezed.corners[2], [0.0, 0.5]);
        assert!((s.squeezed.area() - 0.25).abs() < 1e-15);
        let r = s.remainder().unwrap();
        assert!((r.area() + s.squeezed.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn area_ratio_and_maps() {
        let m = crate::mesh::perturbed_square(3, 0.2, 11);
        for e in 0..m.num_elements() {
            for &f in &m.element_faces(e) {
                let s = m.squeeze_element(e, f, 0.1).unwrap();
                assert!((s.squeezed.area() / m.area(e) - 0.1).abs() < 1e-14);
                assert!(s.squeezed.signed_area() > 0.0);
                let x = m.triangle(e).point([0.2, 0.3, 0.5]);
                let y = s.from_squeezed(s.to_squeezed(x));
                assert!(geometry::distance(x, y) < 1e-14);
                // Face endpoints are fixed.
                let fv = m.face(f).vertices.map(|v| m.vertex(v));
                for p in s.face_points() {
                    assert!(fv.contains(&p));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_theta_and_face() {
        let m = crate::mesh::two_triangle_square();
        let f = m.element_faces(0)[0];
        assert!(matches!(m.squeeze_element(0, f, 0.0), Err(MeshError::InvalidTheta(_))));
        assert!(matches!(m.squeeze_element(0, f, 1.5), Err(MeshError::InvalidTheta(_))));
        let other = (0..m.num_faces()).find(|g| !m.element_faces(0).contains(g)).unwrap();
        assert!(matches!(m.squeeze_element(0, other, 0.5), Err(MeshError::NotAFace { .. })));
    }
}
