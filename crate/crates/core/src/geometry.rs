//! Planar points and affine triangle geometry.

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub fn midpoint(a: Point, b: Point) -> Point {
    lerp(a, b, 0.5)
}

/// Twice the signed area of `(a, b, c)`; positive for counter-clockwise order.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Distance from `x` to the closed segment `[a, b]`.
pub fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return distance(x, a);
    }
    let t = (dot(sub(x, a), ab) / len2).clamp(0.0, 1.0);
    distance(x, lerp(a, b, t))
}

/// A triangle given by its three corners, counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub corners: [Point; 3],
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        Self { corners: [a, b, c] }
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * orient(self.corners[0], self.corners[1], self.corners[2])
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Cartesian point of barycentric coordinates `l`.
    #[inline]
    pub fn point(&self, l: [f64; 3]) -> Point {
        let [a, b, c] = self.corners;
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    /// Barycentric coordinates of `x` with respect to this triangle.
    #[inline]
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let [a, b, c] = self.corners;
        let twice = orient(a, b, c);
        let l1 = orient(a, x, c) / twice;
        let l2 = orient(a, b, x) / twice;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Constant gradients of the three barycentric coordinates.
    pub fn gradients(&self) -> [Point; 3] {
        let [a, b, c] = self.corners;
        let twice = orient(a, b, c);
        let g = |p: Point, q: Point| [(p[1] - q[1]) / twice, (q[0] - p[0]) / twice];
        [g(b, c), g(c, a), g(a, b)]
    }

    pub fn edge_length(&self, opposite: usize) -> f64 {
        distance(self.corners[(opposite + 1) % 3], self.corners[(opposite + 2) % 3])
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        (0..3).map(|k| self.edge_length(k)).fold(0.0, f64::max)
    }

    /// Diameter of the inscribed circle.
    pub fn inscribed_diameter(&self) -> f64 {
        let perimeter: f64 = (0..3).map(|k| self.edge_length(k)).sum();
        4.0 * self.area() / perimeter
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }
}
