//! Road networks: embedded planar graphs with straight edges.
//!
//! A [`RoadNetwork`] is the finite, polygonal stand-in for the road. Everything here
//! is read-only once the network is built, so networks can be shared across threads.

mod ahlfors;
mod inequalities;
mod io;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::geometry::{segment_contact, segment_point_distance, Point, SegmentContact};

pub use ahlfors::{
    ahlfors_upper_constant, ball_length, lower_ahlfors_check, AhlforsEstimate, AhlforsSampling,
    LowerAhlforsReport,
};
pub use inequalities::{holder_embedding_check, linfty_bound_check, HolderReport, LinftyReport};
pub use io::{parse_network, write_network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("edge {edge} references vertex {vertex}, but the network has {count} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        count: usize,
    },
    #[error("{flags} boundary flags given for {vertices} vertices")]
    FlagCountMismatch { flags: usize, vertices: usize },
    #[error("vertex {0} has non-finite coordinates")]
    NonFinite(usize),
    #[error("network point is not on the network: {0}")]
    NotOnNetwork(String),
    #[error("network has no edges")]
    Empty,
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An embedded planar graph with straight edges.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadNetwork {
    vertices: Vec<Point>,
    edges: Vec<(usize, usize)>,
    boundary: Vec<bool>,
}

/// A point of the network: a vertex or a parametrized point `(1-t)·p + t·q` on edge `(p, q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NetworkPoint {
    Vertex(usize),
    OnEdge { edge: usize, t: f64 },
}

/// Outcome of [`RoadNetwork::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub components: usize,
    pub zero_length_edges: Vec<usize>,
    pub duplicate_edges: Vec<usize>,
    pub crossing_pairs: Vec<(usize, usize)>,
    pub isolated_vertices: Vec<usize>,
}

impl ValidationReport {
    pub fn connected(&self) -> bool {
        self.components == 1
    }

    pub fn is_valid(&self) -> bool {
        self.connected()
            && self.zero_length_edges.is_empty()
            && self.duplicate_edges.is_empty()
            && self.crossing_pairs.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut problems = Vec::new();
        if !self.connected() {
            problems.push(format!("disconnected ({} components)", self.components));
        }
        if !self.zero_length_edges.is_empty() {
            problems.push(format!("zero-length edges {:?}", self.zero_length_edges));
        }
        if !self.duplicate_edges.is_empty() {
            problems.push(format!("duplicate edges {:?}", self.duplicate_edges));
        }
        if !self.crossing_pairs.is_empty() {
            problems.push(format!("crossing edge pairs {:?}", self.crossing_pairs));
        }
        if problems.is_empty() {
            "valid".to_string()
        } else {
            problems.join("; ")
        }
    }
}

impl RoadNetwork {
    /// Builds a network, checking indices and flag counts. Geometric validity is
    /// checked separately by [`validate`](Self::validate).
    pub fn new(
        vertices: Vec<Point>,
        edges: Vec<(usize, usize)>,
        boundary: Vec<bool>,
    ) -> Result<Self, NetworkError> {
        if boundary.len() != vertices.len() {
            return Err(NetworkError::FlagCountMismatch {
                flags: boundary.len(),
                vertices: vertices.len(),
            });
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(NetworkError::NonFinite(i));
        }
        for (e, &(i, j)) in edges.iter().enumerate() {
            for v in [i, j] {
                if v >= vertices.len() {
                    return Err(NetworkError::VertexOutOfRange {
                        edge: e,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
            }
        }
        if edges.is_empty() {
            return Err(NetworkError::Empty);
        }
        Ok(Self {
            vertices,
            edges,
            boundary,
        })
    }

    /// A network with no vertex on the domain boundary.
    pub fn interior(vertices: Vec<Point>, edges: Vec<(usize, usize)>) -> Result<Self, NetworkError> {
        let n = vertices.len();
        Self::new(vertices, edges, vec![false; n])
    }

    /// Like [`new`](Self::new) but also rejects geometrically invalid networks.
    pub fn new_validated(
        vertices: Vec<Point>,
        edges: Vec<(usize, usize)>,
        boundary: Vec<bool>,
    ) -> Result<Self, NetworkError> {
        let net = Self::new(vertices, edges, boundary)?;
        net.ensure_valid()?;
        Ok(net)
    }

    pub fn ensure_valid(&self) -> Result<(), NetworkError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(NetworkError::Invalid(report.summary()))
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_endpoints(&self, e: usize) -> (Point, Point) {
        let (i, j) = self.edges[e];
        (self.vertices[i], self.vertices[j])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (p, q) = self.edge_endpoints(e);
        p.dist(q)
    }

    /// Unit tangent of edge `e`, oriented from its first to its second vertex.
    pub fn tangent(&self, e: usize) -> Point {
        let (p, q) = self.edge_endpoints(e);
        (q - p) * (1.0 / p.dist(q))
    }

    pub fn total_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum()
    }

    /// Diameter of the vertex set's bounding box.
    pub fn bounding_diameter(&self) -> f64 {
        let (mut lo, mut hi) = (self.vertices[0], self.vertices[0]);
        for p in &self.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        lo.dist(hi)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold(Point::default(), |acc, &p| acc + p);
        s * (1.0 / n)
    }

    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            adj[i].push((j, e));
            adj[j].push((i, e));
        }
        adj
    }

    /// Checks connectivity, degenerate and duplicate edges, and non-shared crossings.
    pub fn validate(&self) -> ValidationReport {
        let tol = 1e-12 * self.bounding_diameter().max(1e-300);
        let zero_length_edges: Vec<usize> = (0..self.edges.len())
            .filter(|&e| self.edge_length(e) <= tol)
            .collect();

        let mut seen = HashSet::new();
        let duplicate_edges = self
            .edges
            .iter()
            .enumerate()
            .filter_map(|(e, &(i, j))| (!seen.insert((i.min(j), i.max(j)))).then_some(e))
            .collect();

        let mut crossing_pairs = Vec::new();
        for e in 0..self.edges.len() {
            if zero_length_edges.contains(&e) {
                continue;
            }
            for f in e + 1..self.edges.len() {
                if zero_length_edges.contains(&f) {
                    continue;
                }
                let (a, b) = self.edges[e];
                let (c, d) = self.edges[f];
                let shared = [a, b].iter().filter(|v| **v == c || **v == d).count();
                if shared == 2 {
                    continue; // duplicate, reported above
                }
                let contact = segment_contact(
                    self.vertices[a],
                    self.vertices[b],
                    self.vertices[c],
                    self.vertices[d],
                    tol,
                );
                // Segments sharing one endpoint can only meet elsewhere by overlapping.
                let bad = match (shared, contact) {
                    (_, SegmentContact::Overlap) => true,
                    (0, SegmentContact::Point) => true,
                    _ => false,
                };
                if bad {
                    crossing_pairs.push((e, f));
                }
            }
        }

        let (components, isolated_vertices) = self.components();
        ValidationReport {
            components,
            zero_length_edges,
            duplicate_edges,
            crossing_pairs,
            isolated_vertices,
        }
    }

    /// Number of connected components (isolated vertices count as components) and
    /// the list of isolated vertices.
    fn components(&self) -> (usize, Vec<usize>) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut degree = vec![0usize; n];
        for &(i, j) in &self.edges {
            degree[i] += 1;
            degree[j] += 1;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let roots: HashSet<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let isolated = (0..n).filter(|&i| degree[i] == 0).collect();
        (roots.len(), isolated)
    }

    pub fn point_coordinates(&self, p: NetworkPoint) -> Result<Point, NetworkError> {
        match p {
            NetworkPoint::Vertex(v) => self
                .vertices
                .get(v)
                .copied()
                .ok_or_else(|| NetworkError::NotOnNetwork(format!("vertex {v} does not exist"))),
            NetworkPoint::OnEdge { edge, t } => {
                if edge >= self.edges.len() {
                    return Err(NetworkError::NotOnNetwork(format!("edge {edge} does not exist")));
                }
                if !(0.0..=1.0).contains(&t) {
                    return Err(NetworkError::NotOnNetwork(format!(
                        "edge parameter {t} outside [0, 1]"
                    )));
                }
                let (a, b) = self.edge_endpoints(edge);
                Ok(a.lerp(b, t))
            }
        }
    }

    /// Locates a planar point on the network within `tol`.
    pub fn locate(&self, p: Point, tol: f64) -> Option<NetworkPoint> {
        if let Some(v) = self.vertices.iter().position(|&q| q.dist(p) <= tol) {
            return Some(NetworkPoint::Vertex(v));
        }
        (0..self.edges.len())
            .map(|e| {
                let (a, b) = self.edge_endpoints(e);
                let (d, t) = segment_point_distance(a, b, p);
                (d, e, t)
            })
            .filter(|&(d, _, _)| d <= tol)
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, edge, t)| NetworkPoint::OnEdge { edge, t })
    }

    /// Graph vertices a network point attaches to, with the path length to each.
    fn attachments(&self, p: NetworkPoint) -> Result<Vec<(usize, f64)>, NetworkError> {
        self.point_coordinates(p)?;
        Ok(match p {
            NetworkPoint::Vertex(v) => vec![(v, 0.0)],
            NetworkPoint::OnEdge { edge, t } => {
                let (i, j) = self.edges[edge];
                let len = self.edge_length(edge);
                vec![(i, t * len), (j, (1.0 - t) * len)]
            }
        })
    }

    /// Shortest-path distances from a set of weighted sources to every vertex.
    fn dijkstra(&self, sources: &[(usize, f64)]) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }

        let adj = self.adjacency();
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        for &(v, d) in sources {
            if d < dist[v] {
                dist[v] = d;
                heap.push(Item(d, v));
            }
        }
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, e) in &adj[v] {
                let nd = d + self.edge_length(e);
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Item(nd, w));
                }
            }
        }
        dist
    }

    /// Length of the shortest path inside the network between two network points.
    ///
    /// Edge-interior points are spliced in as temporary vertices; the network itself
    /// is not modified.
    pub fn geodesic_distance(&self, p: NetworkPoint, q: NetworkPoint) -> Result<f64, NetworkError> {
        let from = self.attachments(p)?;
        let to = self.attachments(q)?;
        let dist = self.dijkstra(&from);
        let mut best = to
            .iter()
            .map(|&(v, d)| dist[v] + d)
            .fold(f64::INFINITY, f64::min);
        if let (
            NetworkPoint::OnEdge { edge: e1, t: t1 },
            NetworkPoint::OnEdge { edge: e2, t: t2 },
        ) = (p, q)
        {
            if e1 == e2 {
                best = best.min((t1 - t2).abs() * self.edge_length(e1));
            }
        }
        Ok(best)
    }

    /// Geodesic distance between planar points that must lie on the network (within `tol`).
    pub fn geodesic_distance_between(&self, p: Point, q: Point, tol: f64) -> Result<f64, NetworkError> {
        let locate = |x: Point| {
            self.locate(x, tol).ok_or_else(|| {
                NetworkError::NotOnNetwork(format!("({}, {}) is not on the network", x.x, x.y))
            })
        };
        self.geodesic_distance(locate(p)?, locate(q)?)
    }

    /// All-pairs geodesic distances between vertices.
    pub fn vertex_distance_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.vertices.len())
            .map(|v| self.dijkstra(&[(v, 0.0)]))
            .collect()
    }
}

/// A piecewise-linear function on the network, given by its vertex values.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkFunction {
    values: Vec<f64>,
}

impl NetworkFunction {
    pub fn new(net: &RoadNetwork, values: Vec<f64>) -> Result<Self, NetworkError> {
        if values.len() != net.vertex_count() {
            return Err(NetworkError::Invalid(format!(
                "{} values for {} vertices",
                values.len(),
                net.vertex_count()
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Tangential derivative on edge `e` (along the edge's orientation).
    pub fn edge_slope(&self, net: &RoadNetwork, e: usize) -> f64 {
        let (i, j) = net.edges()[e];
        (self.values[j] - self.values[i]) / net.edge_length(e)
    }

    /// `‖f‖_{L²(K)}`, integrated exactly edge by edge.
    pub fn l2_norm(&self, net: &RoadNetwork) -> f64 {
        net.edges()
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| {
                let (a, b) = (self.values[i], self.values[j]);
                net.edge_length(e) * (a * a + a * b + b * b) / 3.0
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇_K f‖_{L²(K)}`.
    pub fn gradient_l2_norm(&self, net: &RoadNetwork) -> f64 {
        (0..net.edge_count())
            .map(|e| self.edge_slope(net, e).powi(2) * net.edge_length(e))
            .sum::<f64>()
            .sqrt()
    }

    /// Sup norm; attained at a vertex for piecewise-linear functions.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn unit_segment_is_valid() {
        let net = RoadNetwork::interior(vec![p(0.0, 0.0), p(1.0, 0.0)], vec![(0, 1)]).unwrap();
        let r = net.validate();
        assert!(r.is_valid());
        assert!(r.connected());
        assert_eq!(net.total_length(), 1.0);
    }

    #[test]
    fn disjoint_segments_are_disconnected() {
        let net = RoadNetwork::interior(
            vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)],
            vec![(0, 1), (2, 3)],
        )
        .unwrap();
        let r = net.validate();
        assert!(!r.is_valid());
        assert_eq!(r.components, 2);
    }

    #[test]
    fn crossing_without_shared_vertex_is_invalid() {
        let net = RoadNetwork::interior(
            vec![p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(1.0, 0.0)],
            vec![(0, 1), (2, 3)],
        )
        .unwrap();
        let r = net.validate();
        assert_eq!(r.crossing_pairs, vec![(0, 1)]);
        assert!(!r.is_valid());
    }

    #[test]
    fn folded_back_edges_overlap() {
        // (0,0)-(1,0) and (0,0)-(2,0) share a vertex but overlap along [0, 1].
        let net = RoadNetwork::interior(
            vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)],
            vec![(0, 1), (0, 2)],
        )
        .unwrap();
        assert_eq!(net.validate().crossing_pairs, vec![(0, 1)]);
    }

    #[test]
    fn zero_length_and_duplicate_edges() {
        let net = RoadNetwork::interior(
            vec![p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0)],
            vec![(0, 1), (1, 2), (2, 1)],
        )
        .unwrap();
        let r = net.validate();
        assert_eq!(r.zero_length_edges, vec![0]);
        assert_eq!(r.duplicate_edges, vec![2]);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            RoadNetwork::interior(vec![p(0.0, 0.0)], vec![(0, 3)]),
            Err(NetworkError::VertexOutOfRange { .. })
        ));
        assert!(matches!(
            RoadNetwork::new(vec![p(0.0, 0.0), p(1.0, 0.0)], vec![(0, 1)], vec![false]),
            Err(NetworkError::FlagCountMismatch { .. })
        ));
        assert_eq!(
            RoadNetwork::interior(vec![p(0.0, 0.0)], vec![]),
            Err(NetworkError::Empty)
        );
    }

    #[test]
    fn lengths() {
        let cross = RoadNetwork::interior(
            vec![p(0.0, 0.5), p(1.0, 0.5), p(0.5, 0.0), p(0.5, 1.0), p(0.5, 0.5)],
            vec![(0, 4), (4, 1), (2, 4), (4, 3)],
        )
        .unwrap();
        assert_eq!(cross.total_length(), 2.0);
        let poly = RoadNetwork::interior(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)], vec![(0, 1), (1, 2)])
            .unwrap();
        assert_eq!(poly.total_length(), 2.0);
    }

    #[test]
    fn geodesics_on_an_l_path() {
        let net = RoadNetwork::interior(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)], vec![(0, 1), (1, 2)])
            .unwrap();
        let d = net
            .geodesic_distance(NetworkPoint::Vertex(0), NetworkPoint::Vertex(2))
            .unwrap();
        assert_eq!(d, 2.0);
        assert!(d > p(0.0, 0.0).dist(p(1.0, 1.0)));
        let mid = net
            .geodesic_distance(
                NetworkPoint::OnEdge { edge: 0, t: 0.25 },
                NetworkPoint::OnEdge { edge: 1, t: 0.5 },
            )
            .unwrap();
        assert!((mid - 1.25).abs() < 1e-15);
        let same_edge = net
            .geodesic_distance(
                NetworkPoint::OnEdge { edge: 0, t: 0.25 },
                NetworkPoint::OnEdge { edge: 0, t: 0.75 },
            )
            .unwrap();
        assert!((same_edge - 0.5).abs() < 1e-15);
    }

    #[test]
    fn geodesic_rejects_points_off_the_network() {
        let net = RoadNetwork::interior(vec![p(0.0, 0.0), p(1.0, 0.0)], vec![(0, 1)]).unwrap();
        assert!(matches!(
            net.geodesic_distance_between(p(0.0, 0.0), p(0.5, 0.5), 1e-12),
            Err(NetworkError::NotOnNetwork(_))
        ));
        assert!(net
            .geodesic_distance(NetworkPoint::OnEdge { edge: 0, t: 1.5 }, NetworkPoint::Vertex(0))
            .is_err());
        assert_eq!(
            net.geodesic_distance_between(p(0.0, 0.0), p(0.5, 0.0), 1e-12)
                .unwrap(),
            0.5
        );
    }

    #[test]
    fn function_norms_on_unit_segment() {
        let net = RoadNetwork::interior(vec![p(0.0, 0.0), p(1.0, 0.0)], vec![(0, 1)]).unwrap();
        let f = NetworkFunction::new(&net, vec![0.0, 1.0]).unwrap();
        assert!((f.l2_norm(&net) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(f.gradient_l2_norm(&net), 1.0);
        assert_eq!(f.sup_norm(), 1.0);
        assert!(NetworkFunction::new(&net, vec![1.0]).is_err());
    }
}
