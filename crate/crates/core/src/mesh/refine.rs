//! Newest-vertex bisection with conforming closure.

use std::collections::HashMap;

use super::Mesh;
use crate::geometry;

/// Result of a refinement step.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    /// For every vertex of the new mesh created by bisection, the endpoints of
    /// the bisected edge in the old mesh. Old vertices keep their indices.
    pub parents: Vec<Option<(usize, usize)>>,
}

impl Refinement {
    /// Prolongs nodal values of a continuous P1 function to the refined mesh.
    pub fn prolong(&self, values: &[f64]) -> Vec<f64> {
        prolong(&self.parents, values)
    }
}

/// Prolongs nodal values through one bisection step given its vertex parents.
pub fn prolong(parents: &[Option<(usize, usize)>], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(parents.len());
    for (v, p) in parents.iter().enumerate() {
        out.push(match p {
            None => values[v],
            Some((a, b)) => 0.5 * (out[*a] + out[*b]),
        });
    }
    out
}

impl Mesh {
    /// Bisects every marked element and closes the refinement so the result is conforming.
    pub fn bisect(&self, marked: &[usize]) -> Mesh {
        self.bisect_with_parents(marked).mesh
    }

    pub fn bisect_with_parents(&self, marked: &[usize]) -> Refinement {
        let mut to_split = vec![false; self.num_faces()];
        let mut queue: Vec<usize> = Vec::new();
        let mark = |f: usize, to_split: &mut Vec<bool>, queue: &mut Vec<usize>| {
            if !to_split[f] {
                to_split[f] = true;
                queue.push(f);
            }
        };
        for &e in marked {
            // Refinement edge is opposite local vertex 0.
            mark(self.element_faces[e][0], &mut to_split, &mut queue);
        }
        // Closure: an element with any split edge must split its refinement edge.
        while let Some(f) = queue.pop() {
            for e in self.faces[f].adjacent() {
                mark(self.element_faces[e][0], &mut to_split, &mut queue);
            }
        }

        let mut vertices = self.vertices.clone();
        let mut parents = vec![None; vertices.len()];
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            if to_split[f] {
                let [a, b] = face.vertices;
                midpoint.insert((a.min(b), a.max(b)), vertices.len());
                vertices.push(geometry::midpoint(self.vertices[a], self.vertices[b]));
                parents.push(Some((a.min(b), a.max(b))));
            }
        }

        fn split(tri: [usize; 3], midpoint: &HashMap<(usize, usize), usize>, out: &mut Vec<[usize; 3]>) {
            let [a, b, c] = tri;
            match midpoint.get(&(b.min(c), b.max(c))) {
                Some(&m) => {
                    split([m, a, b], midpoint, out);
                    split([m, c, a], midpoint, out);
                }
                None => out.push(tri),
            }
        }
        let mut elements = Vec::with_capacity(self.num_elements() + 2 * midpoint.len());
        for &tri in &self.elements {
            split(tri, &midpoint, &mut elements);
        }
        let mesh = Mesh::from_oriented(vertices, elements).expect("bisection preserves conformity");
        Refinement { mesh, parents }
    }

    /// Bisects every element `sweeps` times.
    pub fn refine_uniform(&self, sweeps: usize) -> Mesh {
        let mut mesh = self.clone();
        for _ in 0..sweeps {
            let all: Vec<usize> = (0..mesh.num_elements()).collect();
            mesh = mesh.bisect(&all);
        }
        mesh
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn mark_none_is_identity() {
        let m = criss_cross_square(2);
        let r = m.bisect(&[]);
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.elements(), m.elements());
    }

    #[test]
    fn closure_on_two_triangles() {
        // The shared diagonal is the refinement edge of both triangles, so
        // marking one forces its neighbor to split as well.
        let m = two_triangle_square();
        let r = m.bisect(&[0]);
        assert_eq!(r.num_elements(), 4);
        assert_eq!(r.num_vertices(), 5);
        assert_eq!(r.vertex(4), [0.5, 0.5]);
        r.audit().unwrap();
    }

    #[test]
    fn full_sweeps_double_element_count() {
        let mut m = two_triangle_square();
        for sweep in 1..=3 {
            m = m.refine_uniform(1);
            assert_eq!(m.num_elements(), 2 << sweep);
            m.audit().unwrap();
            assert!((m.total_area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_refinement_stays_conforming() {
        let mut m = l_shape(2);
        let mu0 = m.shape_regularity();
        for _ in 0..8 {
            // Refine toward the re-entrant corner.
            let marked: Vec<usize> = (0..m.num_elements())
                .filter(|&e| crate::geometry::norm(m.triangle(e).centroid()) < 0.5)
                .collect();
            m = m.bisect(&marked);
            m.audit().unwrap();
        }
        assert!((m.total_area() - 3.0).abs() < 1e-12);
        assert!(m.shape_regularity() < 4.0 * mu0);
    }

    #[test]
    fn prolongation_is_exact_for_linear_functions() {
        let m = perturbed_square(4, 0.2, 3);
        let lin = |p: [f64; 2]| 2.0 * p[0] - 0.5 * p[1] + 1.0;
        let values: Vec<f64> = m.vertices().iter().map(|&p| lin(p)).collect();
        let r = m.bisect_with_parents(&[0, 5, 9]);
        let fine = r.prolong(&values);
        for (v, &p) in r.mesh.vertices().iter().enumerate() {
            assert!((fine[v] - lin(p)).abs() < 1e-14);
        }
    }
}
