//! Built-in meshes of the unit square and an L-shaped domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mesh;
use crate::geometry::Point;

/// The unit square split along the diagonal from `(0,0)` to `(1,1)`.
pub fn two_triangle_square() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .expect("static mesh")
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 * h, j as f64 * h]);
        }
    }
    v
}

fn grid_elements(n: usize) -> Vec<[usize; 3]> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut e = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            e.push([a, b, c]);
            e.push([a, c, d]);
        }
    }
    e
}

/// `n × n` squares, each cut by its south-west to north-east diagonal.
pub fn structured_square(n: usize) -> Mesh {
    assert!(n > 0);
    Mesh::new(grid_vertices(n), grid_elements(n)).expect("structured mesh")
}

/// `n × n` squares, each split into four triangles through its center.
pub fn criss_cross_square(n: usize) -> Mesh {
    assert!(n > 0);
    let mut vertices = grid_vertices(n);
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = vertices.len();
            vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            let (a, b, d, e) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push([a, b, c]);
            elements.push([b, d, c]);
            elements.push([d, e, c]);
            elements.push([e, a, c]);
        }
    }
    Mesh::new(vertices, elements).expect("criss-cross mesh")
}

/// Structured mesh with interior vertices displaced by up to `amplitude · h`.
pub fn perturbed_square(n: usize, amplitude: f64, seed: u64) -> Mesh {
    assert!(n > 1 && (0.0..0.3).contains(&amplitude));
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = grid_vertices(n);
    for j in 1..n {
        for i in 1..n {
            let v = &mut vertices[j * (n + 1) + i];
            v[0] += amplitude * h * rng.gen_range(-1.0..1.0);
            v[1] += amplitude * h * rng.gen_range(-1.0..1.0);
        }
    }
    Mesh::new(vertices, grid_elements(n)).expect("perturbed mesh")
}

/// `(-1,1)² \ [0,1)×(-1,0]` with `n` squares per unit length.
pub fn l_shape(n: usize) -> Mesh {
    assert!(n > 0);
    let h = 1.0 / n as f64;
    let m = 2 * n;
    let inside = |i: usize, j: usize| !(i >= n && j < n);
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            // A grid point belongs to the domain if any adjacent cell does.
            let touches = [(0, 0), (1, 0), (0, 1), (1, 1)].iter().any(|&(di, dj)| {
                let (ci, cj) = (i as isize - di, j as isize - dj);
                ci >= 0 && cj >= 0 && (ci as usize) < m && (cj as usize) < m && inside(ci as usize, cj as usize)
            });
            if touches {
                index[j * (m + 1) + i] = vertices.len();
                vertices.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
            }
        }
    }
    let id = |i: usize, j: usize| index[j * (m + 1) + i];
    let mut elements = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if !inside(i, j) {
                continue;
            }
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    Mesh::new(vertices, elements).expect("L-shaped mesh")
}
