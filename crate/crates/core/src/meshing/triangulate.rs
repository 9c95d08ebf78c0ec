//! Constrained Delaunay triangulation of the domain with the road edges as constraints.

use std::collections::HashMap;

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use crate::geometry::{orient, point_in_polygon, segment_point_distance, Point};
use crate::network::RoadNetwork;

use super::{DomainGeometry, Mesh, MeshError, MeshOrigin, RoadEdge, VertexMarker};

#[derive(Clone, Debug, PartialEq)]
pub struct MeshOptions {
    /// Target edge length.
    pub h: f64,
    /// Angle the Delaunay refinement tries to keep every triangle above.
    pub min_angle_deg: f64,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            min_angle_deg: 20.0,
        }
    }
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

/// Constraint points, merged when closer than `tol`.
struct PointPool {
    points: Vec<Point>,
    tol: f64,
}

impl PointPool {
    fn intern(&mut self, p: Point) -> usize {
        if let Some(i) = self.points.iter().position(|q| q.dist(p) <= self.tol) {
            return i;
        }
        self.points.push(p);
        self.points.len() - 1
    }
}

/// Triangulates the domain alone.
pub fn triangulate_domain(domain: &DomainGeometry, options: &MeshOptions) -> Result<Mesh, MeshError> {
    build(domain, None, options)
}

/// Triangulates the domain so that every road edge is a union of mesh edges.
pub fn triangulate(
    domain: &DomainGeometry,
    net: &RoadNetwork,
    options: &MeshOptions,
) -> Result<Mesh, MeshError> {
    build(domain, Some(net), options)
}

/// Checks that `net` is a valid network lying in the closed domain, with boundary flags
/// matching geometry and edges meeting the boundary only at flagged vertices.
pub fn check_road_in_domain(domain: &DomainGeometry, net: &RoadNetwork) -> Result<(), MeshError> {
    check_road(domain, net, 1e-9 * domain.diameter())
}

fn check_road(domain: &DomainGeometry, net: &RoadNetwork, tol: f64) -> Result<(), MeshError> {
    net.ensure_valid()?;
    for (v, (&p, &flag)) in net.vertices().iter().zip(net.boundary_flags()).enumerate() {
        let on_boundary = domain.boundary_distance(p) <= tol;
        if !on_boundary && !point_in_polygon(domain.polygon(), p) {
            return Err(MeshError::RoadOutsideDomain {
                vertex: v,
                x: p.x,
                y: p.y,
            });
        }
        if flag != on_boundary {
            return Err(MeshError::BoundaryFlagMismatch {
                vertex: v,
                flagged: flag,
                on_boundary,
            });
        }
    }
    for e in 0..net.edge_count() {
        let (a, b) = net.edge_endpoints(e);
        // Split the edge wherever it touches the boundary and require every
        // open piece to lie strictly inside.
        let mut ts = vec![0.0, 1.0];
        ts.extend(road_breakpoints(domain, a, b, tol));
        for i in 0..domain.edge_count() {
            let (c, d) = domain.edge(i);
            let (o1, o2) = (orient(a, b, c), orient(a, b, d));
            let (o3, o4) = (orient(c, d, a), orient(c, d, b));
            let scale_ab = a.dist(b);
            let scale_cd = c.dist(d);
            let strict = |x: f64, s: f64| x.abs() > tol * s;
            if strict(o1, scale_ab)
                && strict(o2, scale_ab)
                && strict(o3, scale_cd)
                && strict(o4, scale_cd)
                && (o1 > 0.0) != (o2 > 0.0)
                && (o3 > 0.0) != (o4 > 0.0)
            {
                return Err(MeshError::RoadCrossesBoundary { edge: e });
            }
        }
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            if w[1] - w[0] <= 0.0 {
                continue;
            }
            let m = a.lerp(b, 0.5 * (w[0] + w[1]));
            if !domain.contains_strictly(m, tol) {
                return Err(MeshError::RoadCrossesBoundary { edge: e });
            }
        }
    }
    Ok(())
}

/// Parameters in `(0, 1)` of boundary vertices lying on the open segment `(a, b)`.
fn road_breakpoints(domain: &DomainGeometry, a: Point, b: Point, tol: f64) -> Vec<f64> {
    let len = a.dist(b);
    domain
        .polygon()
        .iter()
        .filter_map(|&c| {
            let (d, t) = segment_point_distance(a, b, c);
            (d <= tol && t * len > tol && (1.0 - t) * len > tol).then_some(t)
        })
        .collect()
}

/// Splits `[p, q]` into `ceil(len / h)` equal pieces, pushing interior points.
fn split_segment(p: Point, q: Point, h: f64, out: &mut Vec<Point>) -> Vec<usize> {
    let n = ((p.dist(q) / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (1..n)
        .map(|k| {
            out.push(p.lerp(q, k as f64 / n as f64));
            out.len() - 1
        })
        .collect()
}

fn build(
    domain: &DomainGeometry,
    net: Option<&RoadNetwork>,
    options: &MeshOptions,
) -> Result<Mesh, MeshError> {
    let h = options.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::BadEdgeLength(h));
    }
    let diam = domain.diameter();
    let tol = 1e-9 * diam;
    if let Some(net) = net {
        check_road(domain, net, tol)?;
    }

    // Constraint skeleton: boundary and road segments with shared breakpoints.
    let mut pool = PointPool {
        points: Vec::new(),
        tol,
    };
    let poly_ids: Vec<usize> = domain.polygon().iter().map(|&p| pool.intern(p)).collect();
    let road_ids: Vec<usize> = net
        .map(|n| n.vertices().iter().map(|&p| pool.intern(p)).collect())
        .unwrap_or_default();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    if let Some(net) = net {
        for (e, &(i, j)) in net.edges().iter().enumerate() {
            let (a, b) = net.edge_endpoints(e);
            let mut ts = road_breakpoints(domain, a, b, tol);
            ts.sort_by(f64::total_cmp);
            let mut chain = vec![road_ids[i]];
            chain.extend(ts.iter().map(|&t| pool.intern(a.lerp(b, t))));
            chain.push(road_ids[j]);
            segments.extend(chain.windows(2).map(|w| (w[0], w[1])));
        }
    }
    let n = poly_ids.len();
    for k in 0..n {
        let (a, b) = domain.edge(k);
        let len = a.dist(b);
        // Pool points (road vertices, earlier breakpoints) lying on this boundary edge.
        let mut on_edge: Vec<(f64, usize)> = pool
            .points
            .iter()
            .enumerate()
            .filter(|&(id, _)| id != poly_ids[k] && id != poly_ids[(k + 1) % n])
            .filter_map(|(id, &p)| {
                let (d, t) = segment_point_distance(a, b, p);
                (d <= tol && t * len > tol && (1.0 - t) * len > tol).then_some((t, id))
            })
            .collect();
        on_edge.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut chain = vec![poly_ids[k]];
        chain.extend(on_edge.iter().map(|&(_, id)| id));
        chain.push(poly_ids[(k + 1) % n]);
        segments.extend(chain.windows(2).map(|w| (w[0], w[1])));
    }

    let mut points = pool.points.clone();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    for &(s, t) in &segments {
        let (p, q) = (points[s], points[t]);
        let inner = split_segment(p, q, h, &mut points);
        let mut chain = vec![s];
        chain.extend(inner);
        chain.push(t);
        constraints.extend(chain.windows(2).map(|w| [w[0], w[1]]));
    }
    let seg_geom: Vec<(Point, Point)> = segments
        .iter()
        .map(|&(s, t)| (pool.points[s], pool.points[t]))
        .collect();

    // Triangular lattice away from the constraints.
    let (lo, hi) = domain.bounding_box();
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).floor() as usize;
    for r in 0..=rows {
        let y = lo.y + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * h } else { 0.0 };
        let cols = ((hi.x - lo.x) / h).floor() as usize + 1;
        for c in 0..=cols {
            let p = Point::new(lo.x + shift + c as f64 * h, y);
            if !point_in_polygon(domain.polygon(), p) {
                continue;
            }
            let clear = seg_geom
                .iter()
                .all(|&(a, b)| segment_point_distance(a, b, p).0 > 0.5 * h);
            if clear {
                points.push(p);
            }
        }
    }

    let input: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let input_count = input.len();
    let mut conflicts = Vec::new();
    let mut cdt = Cdt::try_bulk_load_cdt(input, constraints, |e| conflicts.push(e))
        .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    if !conflicts.is_empty() {
        return Err(MeshError::Triangulation(format!(
            "{} overlapping constraint segment(s)",
            conflicts.len()
        )));
    }
    if cdt.num_vertices() != input_count {
        return Err(MeshError::Triangulation(
            "coincident input points after merging".into(),
        ));
    }
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(false)
        .with_angle_limit(AngleLimit::from_deg(options.min_angle_deg))
        .with_max_allowed_area(0.5 * h * h)
        .with_max_additional_vertices(10 * input_count + 1000);
    cdt.refine(params);

    extract(domain, net, &cdt, tol, h)
}

fn extract(
    domain: &DomainGeometry,
    net: Option<&RoadNetwork>,
    cdt: &Cdt,
    tol: f64,
    h: f64,
) -> Result<Mesh, MeshError> {
    let all: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let mut remap = vec![usize::MAX; all.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let ids = face.vertices().map(|v| v.fix().index());
        let [a, b, c] = ids.map(|i| all[i]);
        let centroid = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        if !point_in_polygon(domain.polygon(), centroid) {
            continue;
        }
        let tri = ids.map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = vertices.len();
                vertices.push(all[i]);
            }
            remap[i]
        });
        triangles.push(tri);
    }

    let on_boundary: Vec<bool> = vertices
        .iter()
        .map(|&p| domain.boundary_distance(p) <= tol)
        .collect();
    // Road edges each mesh vertex lies on.
    let mut road_of: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    if let Some(net) = net {
        for e in 0..net.edge_count() {
            let (a, b) = net.edge_endpoints(e);
            for (v, &p) in vertices.iter().enumerate() {
                if segment_point_distance(a, b, p).0 <= tol {
                    road_of[v].push(e);
                }
            }
        }
    }
    let markers: Vec<VertexMarker> = (0..vertices.len())
        .map(|v| VertexMarker::from_flags(on_boundary[v], !road_of[v].is_empty()))
        .collect();

    let mut road_edges = Vec::new();
    if let Some(net) = net {
        let mut seen = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (u, w) = (tri[k], tri[(k + 1) % 3]);
                if seen.insert((u.min(w), u.max(w)), ()).is_some() {
                    continue;
                }
                for &e in &road_of[u] {
                    if !road_of[w].contains(&e) {
                        continue;
                    }
                    let (pa, pb) = net.edge_endpoints(e);
                    let len = pa.dist(pb);
                    let (su, sw) = (
                        segment_point_distance(pa, pb, vertices[u]).1 * len,
                        segment_point_distance(pa, pb, vertices[w]).1 * len,
                    );
                    let (a, b, s0, s1) = if su < sw { (u, w, su, sw) } else { (w, u, sw, su) };
                    road_edges.push(RoadEdge {
                        a,
                        b,
                        parent: e,
                        s0,
                        s1,
                    });
                }
            }
        }
        road_edges.sort_by(|x, y| (x.parent, x.s0).partial_cmp(&(y.parent, y.s0)).unwrap());
        // Snap chain ends to exact arc-length values.
        for e in 0..net.edge_count() {
            let lo = road_edges.partition_point(|r| r.parent < e);
            let hi = road_edges.partition_point(|r| r.parent <= e);
            if lo == hi {
                return Err(MeshError::Triangulation(format!(
                    "road edge {e} was not recovered"
                )));
            }
            road_edges[lo].s0 = 0.0;
            road_edges[hi - 1].s1 = net.edge_length(e);
        }
    }

    let origin = MeshOrigin {
        domain: domain.fingerprint(),
        h,
    };
    let mesh = Mesh::from_parts(vertices, triangles, markers, road_edges, Some(origin))?;
    if let Some(net) = net {
        mesh.check_conformity(net)
            .map_err(|e| MeshError::Triangulation(e.to_string()))?;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::mesh_quality;

    fn mid_line() -> RoadNetwork {
        RoadNetwork::new(
            vec![Point::new(0.0, 0.5), Point::new(1.0, 0.5)],
            vec![(0, 1)],
            vec![true, true],
        )
        .unwrap()
    }

    #[test]
    fn mid_line_is_split_into_h_pieces() {
        let sq = DomainGeometry::unit_square();
        let mesh = triangulate(&sq, &mid_line(), &MeshOptions::new(1.0 / 8.0)).unwrap();
        assert_eq!(mesh.road_edges().len(), 8);
        mesh.check_triangulation().unwrap();
        mesh.check_boundary_closure(&sq).unwrap();
        assert!((mesh.area() - 1.0).abs() < 1e-12);
        let q = mesh_quality(&mesh);
        assert!(q.min_angle_deg >= 20.0, "{q:?}");
        let ends: Vec<_> = mesh
            .markers()
            .iter()
            .filter(|m| **m == VertexMarker::RoadBoundary)
            .collect();
        assert_eq!(ends.len(), 2);
    }

    #[test]
    fn domain_only_mesh() {
        let l = DomainGeometry::l_shape();
        let mesh = triangulate_domain(&l, &MeshOptions::new(0.1)).unwrap();
        assert!((mesh.area() - 0.75).abs() < 1e-12);
        mesh.check_triangulation().unwrap();
        mesh.check_boundary_closure(&l).unwrap();
        assert!(mesh.road_edges().is_empty());
        assert!(mesh_quality(&mesh).min_angle_deg >= 20.0);
    }

    #[test]
    fn road_through_reentrant_corner() {
        let l = DomainGeometry::l_shape();
        let net = RoadNetwork::interior(
            vec![Point::new(0.25, 0.25), Point::new(0.75, 0.75 - 0.5)],
            vec![(0, 1)],
        )
        .unwrap();
        triangulate(&l, &net, &MeshOptions::new(0.1)).unwrap();
        // Diagonal from (0.25, 0.75) to (0.75, 0.25) passes through the corner (0.5, 0.5).
        let through = RoadNetwork::interior(
            vec![Point::new(0.25, 0.75), Point::new(0.75, 0.25)],
            vec![(0, 1)],
        )
        .unwrap();
        let mesh = triangulate(&l, &through, &MeshOptions::new(0.1)).unwrap();
        let corner = mesh
            .vertices()
            .iter()
            .position(|p| p.dist(Point::new(0.5, 0.5)) < 1e-12)
            .unwrap();
        assert_eq!(mesh.markers()[corner], VertexMarker::RoadBoundary);
    }

    #[test]
    fn geometric_errors() {
        let sq = DomainGeometry::unit_square();
        let outside = RoadNetwork::interior(
            vec![Point::new(0.5, 0.5), Point::new(1.5, 0.5)],
            vec![(0, 1)],
        )
        .unwrap();
        assert!(matches!(
            triangulate(&sq, &outside, &MeshOptions::new(0.2)),
            Err(MeshError::RoadOutsideDomain { vertex: 1, .. })
        ));
        let unflagged = RoadNetwork::interior(
            vec![Point::new(0.0, 0.5), Point::new(0.5, 0.5)],
            vec![(0, 1)],
        )
        .unwrap();
        assert!(matches!(
            triangulate(&sq, &unflagged, &MeshOptions::new(0.2)),
            Err(MeshError::BoundaryFlagMismatch { vertex: 0, .. })
        ));
        let along = RoadNetwork::new(
            vec![Point::new(0.0, 0.0), Point::new(0.5, 0.0)],
            vec![(0, 1)],
            vec![true, true],
        )
        .unwrap();
        assert!(matches!(
            triangulate(&sq, &along, &MeshOptions::new(0.2)),
            Err(MeshError::RoadCrossesBoundary { edge: 0 })
        ));
        let l = DomainGeometry::l_shape();
        let across = RoadNetwork::new(
            vec![Point::new(0.4, 0.9), Point::new(0.9, 0.4)],
            vec![(0, 1)],
            vec![false, false],
        )
        .unwrap();
        assert!(matches!(
            triangulate(&l, &across, &MeshOptions::new(0.2)),
            Err(MeshError::RoadCrossesBoundary { edge: 0 })
        ));
        assert!(matches!(
            triangulate_domain(&sq, &MeshOptions::new(0.0)),
            Err(MeshError::BadEdgeLength(_))
        ));
    }

    #[test]
    fn deterministic() {
        let sq = DomainGeometry::unit_square();
        let a = triangulate(&sq, &mid_line(), &MeshOptions::new(0.1)).unwrap();
        let b = triangulate(&sq, &mid_line(), &MeshOptions::new(0.1)).unwrap();
        assert_eq!(a, b);
    }
}
