//! Plain-text mesh exchange format.
//!
//! Layout: a header line `V E F k`, then `V` vertex lines (3 floats), `F`
//! triangle lines (3 indices), and one line of `k` marked-vertex indices
//! (empty when `k = 0`). Floats are written in shortest round-trip form and
//! rows appear in index order, so files are deterministic and diffable.

use std::io::{BufRead, Write};

use super::{DomainMesh, GeometryError, SpherePoint};

pub(super) fn write_mesh<W: Write>(mesh: &DomainMesh, w: &mut W) -> Result<(), GeometryError> {
    writeln!(
        w,
        "{} {} {} {}",
        mesh.vertex_count(),
        mesh.edge_count(),
        mesh.triangle_count(),
        mesh.marked_vertices().len()
    )?;
    for v in mesh.vertices() {
        let [x, y, z] = v.coords();
        writeln!(w, "{x} {y} {z}")?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    let marked: Vec<String> = mesh
        .marked_vertices()
        .iter()
        .map(|m| m.to_string())
        .collect();
    writeln!(w, "{}", marked.join(" "))?;
    Ok(())
}

pub(super) fn read_mesh<R: BufRead>(r: R) -> Result<DomainMesh, GeometryError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, String), GeometryError> {
        match lines.next() {
            Some((n, Ok(line))) => Ok((n + 1, line)),
            Some((n, Err(e))) => Err(GeometryError::ParseError {
                line: n + 1,
                msg: e.to_string(),
            }),
            None => Err(GeometryError::ParseError {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (hline, header) = next_line("header")?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| GeometryError::ParseError {
            line: hline,
            msg: format!("bad header: {e}"),
        })?;
    if counts.len() != 4 {
        return Err(GeometryError::ParseError {
            line: hline,
            msg: "header must be `V E F k`".into(),
        });
    }
    let (nv, ne, nf, nk) = (counts[0], counts[1], counts[2], counts[3]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, line) = next_line("a vertex line")?;
        let xs: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeometryError::ParseError {
                line: n,
                msg: format!("bad vertex: {e}"),
            })?;
        if xs.len() != 3 {
            return Err(GeometryError::ParseError {
                line: n,
                msg: "vertex line must have 3 floats".into(),
            });
        }
        vertices.push(SpherePoint::new(xs[0], xs[1], xs[2]).map_err(|e| {
            GeometryError::ParseError {
                line: n,
                msg: e.to_string(),
            }
        })?);
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (n, line) = next_line("a triangle line")?;
        let ix: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeometryError::ParseError {
                line: n,
                msg: format!("bad triangle: {e}"),
            })?;
        if ix.len() != 3 {
            return Err(GeometryError::ParseError {
                line: n,
                msg: "triangle line must have 3 indices".into(),
            });
        }
        triangles.push([ix[0], ix[1], ix[2]]);
    }

    let (mline, marked_line) = next_line("the marked-vertex line")?;
    let marked: Vec<usize> = marked_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| GeometryError::ParseError {
            line: mline,
            msg: format!("bad marked vertex: {e}"),
        })?;
    if marked.len() != nk {
        return Err(GeometryError::ParseError {
            line: mline,
            msg: format!("expected {nk} marked vertices, found {}", marked.len()),
        });
    }

    let snap = vec![0.0; marked.len()];
    let mesh = DomainMesh::from_parts(vertices, triangles, marked, snap)?;
    if mesh.edge_count() != ne {
        return Err(GeometryError::ParseError {
            line: hline,
            msg: format!(
                "header claims {ne} edges but the mesh has {}",
                mesh.edge_count()
            ),
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::super::{DomainMesh, SpherePoint};

    #[test]
    fn roundtrip_preserves_structure() {
        let marked = [
            SpherePoint::new(1.0, 0.0, 0.0).unwrap(),
            SpherePoint::new(-1.0, 0.0, 0.0).unwrap(),
        ];
        let mesh = DomainMesh::build_icosphere(2, &marked, None).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let back = DomainMesh::read_text(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.vertex_count(), mesh.vertex_count());
        assert_eq!(back.triangle_count(), mesh.triangle_count());
        assert_eq!(back.marked_vertices(), mesh.marked_vertices());
        // byte determinism
        let mut buf2 = Vec::new();
        back.write_text(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
