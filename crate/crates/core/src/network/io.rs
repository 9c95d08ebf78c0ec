//! Line-oriented network files:
//!
//! ```text
//! vertices N
//! x y boundary_flag      (N lines, flag 0 or 1)
//! edges M
//! i j                    (M lines, 0-based)
//! ```
//!
//! Blank lines and `#` comments are ignored.

use std::fmt::Write;

use crate::geometry::Point;

use crate::textio::{
    content_lines, expect_end, next_line, parse_err, parse_fields, parse_header, ParseError,
};

use super::{NetworkError, RoadNetwork};

impl From<ParseError> for NetworkError {
    fn from(e: ParseError) -> Self {
        NetworkError::Parse {
            line: e.line,
            message: e.message,
        }
    }
}


pub fn parse_network(text: &str) -> Result<RoadNetwork, NetworkError> {
    let mut lines = content_lines(text);
    let (_, nv) = parse_header(&mut lines, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next_line(&mut lines, "vertex list")?;
        let f: Vec<f64> = parse_fields(n, l, 3)?;
        let flag = match f[2] {
            x if x == 0.0 => false,
            x if x == 1.0 => true,
            _ => return Err(parse_err(n, "boundary flag must be 0 or 1").into()),
        };
        vertices.push(Point::new(f[0], f[1]));
        flags.push(flag);
    }
    let (_, ne) = parse_header(&mut lines, "edges")?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = next_line(&mut lines, "edge list")?;
        let f: Vec<usize> = parse_fields(n, l, 2)?;
        edges.push((f[0], f[1]));
    }
    expect_end(&mut lines)?;
    RoadNetwork::new(vertices, edges, flags)
}

pub fn write_network(net: &RoadNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", net.vertex_count()).unwrap();
    for (p, &b) in net.vertices().iter().zip(net.boundary_flags()) {
        writeln!(out, "{:.17e} {:.17e} {}", p.x, p.y, u8::from(b)).unwrap();
    }
    writeln!(out, "edges {}", net.edge_count()).unwrap();
    for &(i, j) in net.edges() {
        writeln!(out, "{i} {j}").unwrap();
    }
    out
}
