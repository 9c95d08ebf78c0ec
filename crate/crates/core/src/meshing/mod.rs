//! Triangulations of the field that carry the road network in their edge skeleton.

mod domain;
mod io;
mod triangulate;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::geometry::{orient, triangle_angles, Point};
use crate::network::{NetworkError, RoadNetwork};
use crate::textio::ParseError;

pub use domain::{parse_domain, write_domain, DomainGeometry};
pub use io::{parse_mesh, write_mesh};
pub use triangulate::{check_road_in_domain, triangulate, triangulate_domain, MeshOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid road network: {0}")]
    InvalidNetwork(#[from] NetworkError),
    #[error("target edge length must be positive and finite, got {0}")]
    BadEdgeLength(f64),
    #[error("road vertex {vertex} at ({x}, {y}) lies outside the domain")]
    RoadOutsideDomain { vertex: usize, x: f64, y: f64 },
    #[error("road vertex {vertex}: boundary flag is {flagged} but the vertex is {} the domain boundary", if *.on_boundary { "on" } else { "off" })]
    BoundaryFlagMismatch {
        vertex: usize,
        flagged: bool,
        on_boundary: bool,
    },
    #[error("road edge {edge} leaves the domain or runs along its boundary")]
    RoadCrossesBoundary { edge: usize },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("triangle {triangle} is degenerate or inverted")]
    DegenerateTriangle { triangle: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<ParseError> for MeshError {
    fn from(e: ParseError) -> Self {
        MeshError::Parse {
            line: e.line,
            message: e.message,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexMarker {
    Interior = 0,
    Boundary = 1,
    Road = 2,
    RoadBoundary = 3,
}

impl VertexMarker {
    pub fn from_flags(on_boundary: bool, on_road: bool) -> Self {
        match (on_boundary, on_road) {
            (false, false) => Self::Interior,
            (true, false) => Self::Boundary,
            (false, true) => Self::Road,
            (true, true) => Self::RoadBoundary,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        [Self::Interior, Self::Boundary, Self::Road, Self::RoadBoundary]
            .get(code as usize)
            .copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn on_boundary(self) -> bool {
        matches!(self, Self::Boundary | Self::RoadBoundary)
    }

    pub fn on_road(self) -> bool {
        matches!(self, Self::Road | Self::RoadBoundary)
    }
}

/// A mesh edge lying on road edge `parent`, oriented from the parent's first
/// endpoint towards its second. `s0 < s1` are arc-length positions along the parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoadEdge {
    pub a: usize,
    pub b: usize,
    pub parent: usize,
    pub s0: f64,
    pub s1: f64,
}

impl RoadEdge {
    pub fn length(&self) -> f64 {
        self.s1 - self.s0
    }
}

/// What a mesh was built from: the domain and the target edge length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOrigin {
    pub domain: u64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    markers: Vec<VertexMarker>,
    boundary_edges: Vec<(usize, usize)>,
    road_edges: Vec<RoadEdge>,
    origin: Option<MeshOrigin>,
}

impl Mesh {
    /// Assembles a mesh from raw parts. Triangles are reoriented counterclockwise;
    /// boundary edges are recomputed. Road edges must be sorted by `(parent, s0)`.
    pub fn from_parts(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        markers: Vec<VertexMarker>,
        road_edges: Vec<RoadEdge>,
        origin: Option<MeshOrigin>,
    ) -> Result<Self, MeshError> {
        if markers.len() != vertices.len() {
            return Err(MeshError::InvalidMesh(format!(
                "{} markers for {} vertices",
                markers.len(),
                vertices.len()
            )));
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area = orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        for (k, e) in road_edges.iter().enumerate() {
            if e.a >= vertices.len() || e.b >= vertices.len() || !(e.s1 > e.s0) {
                return Err(MeshError::InvalidMesh(format!("road edge {k} is malformed")));
            }
            if k > 0 {
                let p = road_edges[k - 1];
                if (p.parent, p.s0) >= (e.parent, e.s0) {
                    return Err(MeshError::InvalidMesh("road edges are not sorted".into()));
                }
            }
        }
        let boundary_edges = boundary_edges_of(&triangles)?;
        Ok(Self {
            vertices,
            triangles,
            markers,
            boundary_edges,
            road_edges,
            origin,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn markers(&self) -> &[VertexMarker] {
        &self.markers
    }

    pub fn boundary_edges(&self) -> &[(usize, usize)] {
        &self.boundary_edges
    }

    pub fn road_edges(&self) -> &[RoadEdge] {
        &self.road_edges
    }

    pub fn origin(&self) -> Option<MeshOrigin> {
        self.origin
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Mesh vertices lying on the road, ascending.
    pub fn road_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.markers[v].on_road())
            .collect()
    }

    pub fn road_length(&self) -> f64 {
        self.road_edges.iter().map(RoadEdge::length).sum()
    }

    /// Number of distinct parent road edges.
    pub fn road_parent_count(&self) -> usize {
        self.road_edges.last().map_or(0, |e| e.parent + 1)
    }

    /// The chain of road edges lying on `parent`.
    pub fn road_chain(&self, parent: usize) -> &[RoadEdge] {
        let lo = self.road_edges.partition_point(|e| e.parent < parent);
        let hi = self.road_edges.partition_point(|e| e.parent <= parent);
        &self.road_edges[lo..hi]
    }

    /// Mesh vertex of every network vertex, checked against the network geometry.
    pub fn network_vertex_map(&self, net: &RoadNetwork) -> Result<Vec<usize>, MeshError> {
        let tol = 1e-9 * net.bounding_diameter().max(f64::MIN_POSITIVE);
        let mut map = vec![usize::MAX; net.vertex_count()];
        for (e, &(i, j)) in net.edges().iter().enumerate() {
            let chain = self.road_chain(e);
            let (Some(first), Some(last)) = (chain.first(), chain.last()) else {
                return Err(MeshError::InvalidMesh(format!("road edge {e} is missing")));
            };
            for (v, m) in [(i, first.a), (j, last.b)] {
                if self.vertices[m].dist(net.vertices()[v]) > tol
                    || (map[v] != usize::MAX && map[v] != m)
                {
                    return Err(MeshError::InvalidMesh(format!(
                        "network vertex {v} does not match the mesh"
                    )));
                }
                map[v] = m;
            }
        }
        Ok(map)
    }

    /// Checks that every road edge is reproduced by a consecutive chain of mesh
    /// edges with matching endpoints and length.
    pub fn check_conformity(&self, net: &RoadNetwork) -> Result<(), MeshError> {
        if self.road_parent_count() != net.edge_count() {
            return Err(MeshError::InvalidMesh(format!(
                "mesh carries {} road edges, network has {}",
                self.road_parent_count(),
                net.edge_count()
            )));
        }
        self.network_vertex_map(net)?;
        let edges = self.edge_set();
        for e in 0..net.edge_count() {
            let chain = self.road_chain(e);
            let len = net.edge_length(e);
            let bad = |what: &str| MeshError::InvalidMesh(format!("road edge {e}: {what}"));
            if chain.windows(2).any(|w| w[0].b != w[1].a || w[0].s1 != w[1].s0) {
                return Err(bad("chain is not consecutive"));
            }
            let chain_len: f64 = chain
                .iter()
                .map(|r| self.vertices[r.a].dist(self.vertices[r.b]))
                .sum();
            if chain[0].s0 != 0.0
                || (chain[chain.len() - 1].s1 - len).abs() > 1e-12 * len
                || (chain_len - len).abs() > 1e-12 * len
            {
                return Err(bad("chain length does not match"));
            }
            if chain.iter().any(|r| !edges.contains_key(&sorted(r.a, r.b))) {
                return Err(bad("chain uses a non-mesh edge"));
            }
        }
        Ok(())
    }

    /// Checks that boundary edges form closed loops whose vertices lie on the polygon
    /// and whose total length equals its perimeter.
    pub fn check_boundary_closure(&self, domain: &DomainGeometry) -> Result<(), MeshError> {
        let tol = 1e-9 * domain.diameter();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in &self.boundary_edges {
            if next.insert(a, b).is_some() {
                return Err(MeshError::InvalidMesh(format!(
                    "boundary vertex {a} starts two boundary edges"
                )));
            }
        }
        let mut length = 0.0;
        for &(a, b) in &self.boundary_edges {
            if !next.contains_key(&b) {
                return Err(MeshError::InvalidMesh("boundary is not closed".into()));
            }
            if domain.boundary_distance(self.vertices[a]) > tol
                || domain.boundary_distance(self.vertices[a].lerp(self.vertices[b], 0.5)) > tol
            {
                return Err(MeshError::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) is off the domain boundary"
                )));
            }
            length += self.vertices[a].dist(self.vertices[b]);
        }
        if (length - domain.perimeter()).abs() > 1e-12 * domain.perimeter() {
            return Err(MeshError::InvalidMesh(format!(
                "boundary length {length} differs from the perimeter {}",
                domain.perimeter()
            )));
        }
        Ok(())
    }

    /// Checks that the triangles form a conforming triangulation: each interior edge
    /// is shared by two oppositely oriented triangles, every vertex is used, areas
    /// are positive and the Euler characteristic matches the boundary loops.
    pub fn check_triangulation(&self) -> Result<(), MeshError> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(MeshError::InvalidMesh(format!(
                        "edge {e:?} is used twice with the same orientation"
                    )));
                }
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
        }
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(MeshError::InvalidMesh(format!("vertex {v} is unused")));
        }
        // Euler characteristic per boundary loop: V - E + F = 2 - loops (plus the outer face).
        let edges = self.edge_set().len();
        let loops = count_loops(&self.boundary_edges);
        let euler = self.vertices.len() as isize - edges as isize + self.triangles.len() as isize;
        if euler != 2 - loops as isize {
            return Err(MeshError::InvalidMesh(format!(
                "Euler characteristic {euler} does not match {loops} boundary loop(s)"
            )));
        }
        Ok(())
    }

    /// Undirected edges mapped to the number of adjacent triangles.
    pub fn edge_set(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *edges.entry(sorted(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Hash of the exact coordinates and connectivity.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.vertices {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
        }
        self.triangles.hash(&mut h);
        self.markers.hash(&mut h);
        for r in &self.road_edges {
            (r.a, r.b, r.parent).hash(&mut h);
        }
        h.finish()
    }

    /// Uniform midpoint subdivision: every triangle becomes four similar ones.
    pub fn refine(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut markers = self.markers.clone();
        let road: HashMap<(usize, usize), ()> = self
            .road_edges
            .iter()
            .map(|r| (sorted(r.a, r.b), ()))
            .collect();
        let boundary: HashMap<(usize, usize), ()> = self
            .boundary_edges
            .iter()
            .map(|&(a, b)| (sorted(a, b), ()))
            .collect();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize| -> usize {
            let key = sorted(a, b);
            *midpoint.entry(key).or_insert_with(|| {
                vertices.push(self.vertices[a].lerp(self.vertices[b], 0.5));
                markers.push(VertexMarker::from_flags(
                    boundary.contains_key(&key),
                    road.contains_key(&key),
                ));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut road_edges = Vec::with_capacity(2 * self.road_edges.len());
        for r in &self.road_edges {
            let m = mid(r.a, r.b);
            let sm = 0.5 * (r.s0 + r.s1);
            road_edges.push(RoadEdge {
                a: r.a,
                b: m,
                parent: r.parent,
                s0: r.s0,
                s1: sm,
            });
            road_edges.push(RoadEdge {
                a: m,
                b: r.b,
                parent: r.parent,
                s0: sm,
                s1: r.s1,
            });
        }
        let origin = self.origin.map(|o| MeshOrigin {
            domain: o.domain,
            h: 0.5 * o.h,
        });
        Mesh::from_parts(vertices, triangles, markers, road_edges, origin)
            .expect("midpoint subdivision of a valid mesh is valid")
    }
}

/// Exact per-triangle statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    /// Circumradius over twice the inradius; 1 for an equilateral triangle.
    pub max_aspect_ratio: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub road_edges: usize,
    pub area: f64,
}

pub fn mesh_quality(mesh: &Mesh) -> MeshQuality {
    let mut q = MeshQuality {
        min_angle_deg: f64::INFINITY,
        max_angle_deg: 0.0,
        max_aspect_ratio: 0.0,
        h_max: 0.0,
        h_min: f64::INFINITY,
        vertices: mesh.vertex_count(),
        triangles: mesh.triangle_count(),
        boundary_edges: mesh.boundary_edges.len(),
        road_edges: mesh.road_edges.len(),
        area: mesh.area(),
    };
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_points(t);
        for angle in triangle_angles(a, b, c) {
            q.min_angle_deg = q.min_angle_deg.min(angle.to_degrees());
            q.max_angle_deg = q.max_angle_deg.max(angle.to_degrees());
        }
        let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
        q.h_max = q.h_max.max(la).max(lb).max(lc);
        q.h_min = q.h_min.min(la).min(lb).min(lc);
        let area = mesh.triangle_area(t);
        let s = 0.5 * (la + lb + lc);
        let inradius = area / s;
        let circumradius = la * lb * lc / (4.0 * area);
        q.max_aspect_ratio = q.max_aspect_ratio.max(circumradius / (2.0 * inradius));
    }
    q
}

fn sorted(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn boundary_edges_of(triangles: &[[usize; 3]]) -> Result<Vec<(usize, usize)>, MeshError> {
    let mut count: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let e = (tri[k], tri[(k + 1) % 3]);
            count.entry(sorted(e.0, e.1)).or_insert((0, e)).0 += 1;
        }
    }
    let mut edges = Vec::new();
    for (key, (n, directed)) in count {
        match n {
            1 => edges.push(directed),
            2 => {}
            _ => {
                return Err(MeshError::InvalidMesh(format!(
                    "edge {key:?} is shared by {n} triangles"
                )))
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

fn count_loops(edges: &[(usize, usize)]) -> usize {
    let next: HashMap<usize, usize> = edges.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut loops = 0;
    for &(start, _) in edges {
        if seen.contains(&start) {
            continue;
        }
        loops += 1;
        let mut v = start;
        while seen.insert(v) {
            match next.get(&v) {
                Some(&w) => v = w,
                None => break,
            }
        }
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(points: [Point; 3]) -> Mesh {
        Mesh::from_parts(
            points.to_vec(),
            vec![[0, 1, 2]],
            vec![VertexMarker::Boundary; 3],
            vec![],
            None,
        )
        .unwrap()
    }

    #[test]
    fn one_triangle_refines_into_four() {
        let m = single([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        let r = m.refine();
        assert_eq!(r.triangle_count(), 4);
        assert_eq!(r.vertex_count(), 6);
        assert_eq!(r.boundary_edges().len(), 6);
        assert!((r.area() - m.area()).abs() <= 1e-12 * m.area());
        assert!(r.markers().iter().all(|m| *m == VertexMarker::Boundary));
        r.check_triangulation().unwrap();
    }

    #[test]
    fn quality_of_reference_triangles() {
        let eq = single([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        ]);
        let q = mesh_quality(&eq);
        assert!((q.min_angle_deg - 60.0).abs() < 1e-12);
        assert!((q.max_aspect_ratio - 1.0).abs() < 1e-12);
        let right = single([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        let q = mesh_quality(&right);
        assert!((q.min_angle_deg - 45.0).abs() < 1e-12);
        assert!((q.max_angle_deg - 90.0).abs() < 1e-12);
        assert_eq!(mesh_quality(&right.refine()).min_angle_deg, q.min_angle_deg);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = single([Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)]);
        assert!(m.triangle_area(0) > 0.0);
    }
}
