use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::geometry::{
    point_in_polygon, polygon_boundary_distance, polygon_signed_area, segment_contact, Point,
    SegmentContact,
};

use crate::textio::{content_lines, expect_end, next_line, parse_fields, parse_header};

use super::MeshError;

/// A simple polygon, stored counterclockwise without a repeated closing vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainGeometry {
    polygon: Vec<Point>,
}

impl DomainGeometry {
    /// Accepts either orientation and an optional closing vertex equal to the first.
    pub fn new(mut polygon: Vec<Point>) -> Result<Self, MeshError> {
        if polygon.len() > 1 && polygon.first() == polygon.last() {
            polygon.pop();
        }
        if polygon.len() < 3 {
            return Err(MeshError::InvalidDomain(format!(
                "polygon needs at least 3 vertices, got {}",
                polygon.len()
            )));
        }
        if let Some(i) = polygon.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::InvalidDomain(format!(
                "vertex {i} has non-finite coordinates"
            )));
        }
        let area = polygon_signed_area(&polygon);
        if area == 0.0 || !area.is_finite() {
            return Err(MeshError::InvalidDomain("polygon has zero area".into()));
        }
        if area < 0.0 {
            polygon.reverse();
        }
        let domain = Self { polygon };
        domain.check_simple()?;
        Ok(domain)
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, MeshError> {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0).expect("unit square is valid")
    }

    /// `[0,1]² ∖ (1/2,1]²`.
    pub fn l_shape() -> Self {
        Self::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ])
        .expect("L-shape is valid")
    }

    fn check_simple(&self) -> Result<(), MeshError> {
        let n = self.polygon.len();
        let tol = 1e-12 * self.diameter();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if a.dist(b) <= tol {
                return Err(MeshError::InvalidDomain(format!("edge {i} has zero length")));
            }
            for j in i + 1..n {
                let (c, d) = self.edge(j);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let contact = segment_contact(a, b, c, d, tol);
                let bad = if adjacent {
                    contact == SegmentContact::Overlap
                } else {
                    contact != SegmentContact::Disjoint
                };
                if bad {
                    return Err(MeshError::InvalidDomain(format!(
                        "boundary edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn polygon(&self) -> &[Point] {
        &self.polygon
    }

    pub fn edge_count(&self) -> usize {
        self.polygon.len()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.polygon[i], self.polygon[(i + 1) % self.polygon.len()])
    }

    pub fn area(&self) -> f64 {
        polygon_signed_area(&self.polygon)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.edge_count())
            .map(|i| {
                let (a, b) = self.edge(i);
                a.dist(b)
            })
            .sum()
    }

    /// Diameter of the vertex set.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, p) in self.polygon.iter().enumerate() {
            for q in &self.polygon[i + 1..] {
                d = d.max(p.dist(*q));
            }
        }
        d
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.polygon {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        polygon_boundary_distance(&self.polygon, p)
    }

    /// Strict interior test with a distance tolerance from the boundary.
    pub fn contains_strictly(&self, p: Point, tol: f64) -> bool {
        point_in_polygon(&self.polygon, p) && self.boundary_distance(p) > tol
    }

    /// Closed-domain membership with a distance tolerance.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        point_in_polygon(&self.polygon, p) || self.boundary_distance(p) <= tol
    }

    /// Point at arc-length `s` along the boundary, starting from the first vertex.
    /// `s` is taken modulo the perimeter.
    pub fn boundary_point(&self, s: f64) -> Point {
        let perimeter = self.perimeter();
        let mut s = s.rem_euclid(perimeter);
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let len = a.dist(b);
            if s <= len {
                return a.lerp(b, s / len);
            }
            s -= len;
        }
        self.polygon[0]
    }

    /// Arc-length coordinate of the boundary point nearest to `p`.
    pub fn boundary_parameter(&self, p: Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut start = 0.0;
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            let len = a.dist(b);
            let (d, t) = crate::geometry::segment_point_distance(a, b, p);
            if d < best.0 {
                best = (d, start + t * len);
            }
            start += len;
        }
        best.1
    }

    /// Hash of the exact vertex coordinates.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.polygon {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Domain files: `polygon N` followed by `N` lines `x y`.
pub fn parse_domain(text: &str) -> Result<DomainGeometry, MeshError> {
    let mut lines = content_lines(text);
    let (_, n) = parse_header(&mut lines, "polygon")?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, l) = next_line(&mut lines, "polygon")?;
        let f: Vec<f64> = parse_fields(line, l, 2)?;
        pts.push(Point::new(f[0], f[1]));
    }
    expect_end(&mut lines)?;
    DomainGeometry::new(pts)
}

pub fn write_domain(domain: &DomainGeometry) -> String {
    let mut out = format!("polygon {}\n", domain.polygon.len());
    for p in &domain.polygon {
        out.push_str(&format!("{:.17e} {:.17e}\n", p.x, p.y));
    }
    out
}
