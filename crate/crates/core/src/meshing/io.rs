//! Mesh files:
//!
//! ```text
//! vertices N
//! x y marker            (0 interior, 1 boundary, 2 road, 3 road and boundary)
//! triangles M
//! i j k
//! road_edges R
//! i j parent_road_edge  (oriented along the parent, in chain order)
//! ```
//!
//! Arc-length positions are rebuilt by accumulating distances along each chain.

use std::fmt::Write;

use crate::geometry::Point;
use crate::textio::{content_lines, expect_end, next_line, parse_err, parse_fields, parse_header};

use super::{Mesh, MeshError, RoadEdge, VertexMarker};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", mesh.vertex_count()).unwrap();
    for (p, m) in mesh.vertices().iter().zip(mesh.markers()) {
        writeln!(out, "{:.17e} {:.17e} {}", p.x, p.y, m.code()).unwrap();
    }
    writeln!(out, "triangles {}", mesh.triangle_count()).unwrap();
    for [i, j, k] in mesh.triangles() {
        writeln!(out, "{i} {j} {k}").unwrap();
    }
    writeln!(out, "road_edges {}", mesh.road_edges().len()).unwrap();
    for r in mesh.road_edges() {
        writeln!(out, "{} {} {}", r.a, r.b, r.parent).unwrap();
    }
    out
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = content_lines(text);
    let (_, nv) = parse_header(&mut lines, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut markers = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next_line(&mut lines, "vertex list")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(n, format!("expected 3 fields, found {}", f.len())).into());
        }
        let xy: Vec<f64> = parse_fields(n, &f[..2].join(" "), 2)?;
        let marker = f[2]
            .parse::<u8>()
            .ok()
            .and_then(VertexMarker::from_code)
            .ok_or_else(|| parse_err(n, format!("bad vertex marker `{}`", f[2])))?;
        vertices.push(Point::new(xy[0], xy[1]));
        markers.push(marker);
    }
    let (_, nt) = parse_header(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next_line(&mut lines, "triangle list")?;
        let f: Vec<usize> = parse_fields(n, l, 3)?;
        if f.iter().any(|&v| v >= nv) {
            return Err(parse_err(n, "vertex index out of range").into());
        }
        triangles.push([f[0], f[1], f[2]]);
    }
    let (_, nr) = parse_header(&mut lines, "road_edges")?;
    let mut road_edges: Vec<RoadEdge> = Vec::with_capacity(nr);
    for _ in 0..nr {
        let (n, l) = next_line(&mut lines, "road edge list")?;
        let f: Vec<usize> = parse_fields(n, l, 3)?;
        let (a, b, parent) = (f[0], f[1], f[2]);
        if a >= nv || b >= nv {
            return Err(parse_err(n, "vertex index out of range").into());
        }
        let s0 = match road_edges.last() {
            Some(prev) if prev.parent == parent => {
                if prev.b != a {
                    return Err(parse_err(n, "road chain is not consecutive").into());
                }
                prev.s1
            }
            Some(prev) if prev.parent > parent => {
                return Err(parse_err(n, "road edges are not grouped by parent").into());
            }
            _ => 0.0,
        };
        let s1 = s0 + vertices[a].dist(vertices[b]);
        road_edges.push(RoadEdge {
            a,
            b,
            parent,
            s0,
            s1,
        });
    }
    expect_end(&mut lines)?;
    Mesh::from_parts(vertices, triangles, markers, road_edges, None)
}
