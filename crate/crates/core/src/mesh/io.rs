//! Plain-text mesh format.
//!
//! ```text
//! nv ne
//! x y          (nv lines)
//! i j k        (ne lines, 0-based, counter-clockwise)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, MeshError};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (n, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad count `{t}`"))))
        .collect::<Result<_, _>>()?;
    let [nv, ne] = counts[..] else {
        return Err(parse_err(n, "header must be `nv ne`"));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in vertex block"))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad coordinate `{t}`"))))
            .collect::<Result<_, _>>()?;
        match xy[..] {
            [x, y] if x.is_finite() && y.is_finite() => vertices.push([x, y]),
            _ => return Err(parse_err(n, "vertex line must hold two finite numbers")),
        }
    }

    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in element block"))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad vertex index `{t}`"))))
            .collect::<Result<_, _>>()?;
        match ids[..] {
            [i, j, k] => elements.push([i, j, k]),
            _ => return Err(parse_err(n, "element line must hold three indices")),
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing data after element block"));
    }
    Mesh::new(vertices, elements)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| MeshError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_mesh(&text)
}

/// Serializes in the format accepted by [`parse_mesh`].
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_elements());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
    }
    for e in mesh.elements() {
        let _ = writeln!(out, "{} {} {}", e[0], e[1], e[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_square() {
        let m = parse_mesh("4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n").unwrap();
        assert_eq!(m.num_faces(), 5);
        assert_eq!(m.num_interior_faces(), 1);
    }

    #[test]
    fn comments_and_roundtrip() {
        let m = parse_mesh("# unit triangle\n3 1\n\n0 0\n1 0\n0 1\n0 1 2\n").unwrap();
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(again.vertices(), m.vertices());
        assert_eq!(again.elements(), m.elements());
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(parse_mesh(""), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_mesh("3 1\n0 0\n1 0\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(parse_mesh("3 1\n0 0\n1 x\n0 1\n0 1 2\n"), Err(MeshError::Parse { line: 3, .. })));
        assert!(matches!(
            parse_mesh("3 1\n0 0\n1 0\n0 1\n0 1 5\n"),
            Err(MeshError::VertexOutOfRange { .. })
        ));
        let dup = "4 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 2\n";
        let err = parse_mesh(dup).unwrap_err();
        assert!(err.to_string().contains("non-conforming"), "{err}");
        let missing = load_mesh("/nonexistent/mesh.txt").unwrap_err();
        assert!(missing.to_string().contains("/nonexistent/mesh.txt"));
    }
}
