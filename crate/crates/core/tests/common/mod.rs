//! Shared fixtures: reference domains, roads and a seeded random corpus.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadfield_core::assembly::CouplingParams;
use roadfield_core::geometry::{segment_point_distance, Point};
use roadfield_core::meshing::DomainGeometry;
use roadfield_core::network::RoadNetwork;

pub fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Horizontal segment across the unit square at `y = 1/2`.
pub fn mid_segment() -> RoadNetwork {
    RoadNetwork::new(vec![p(0.0, 0.5), p(1.0, 0.5)], vec![(0, 1)], vec![true, true]).unwrap()
}

/// Interior cross centred in the unit square with arm length `arm`.
pub fn cross(arm: f64) -> RoadNetwork {
    RoadNetwork::interior(
        vec![
            p(0.5, 0.5),
            p(0.5 - arm, 0.5),
            p(0.5 + arm, 0.5),
            p(0.5, 0.5 - arm),
            p(0.5, 0.5 + arm),
        ],
        vec![(1, 0), (0, 2), (3, 0), (0, 4)],
    )
    .unwrap()
}

/// Segment in the lower arm of the L-shape, touching the left side.
pub fn l_segment() -> RoadNetwork {
    RoadNetwork::new(vec![p(0.0, 0.25), p(0.8, 0.25)], vec![(0, 1)], vec![true, false]).unwrap()
}

pub fn rect12() -> DomainGeometry {
    DomainGeometry::rectangle(0.0, 0.0, 1.0, 2.0).unwrap()
}

pub struct Config {
    pub name: String,
    pub domain: DomainGeometry,
    pub net: RoadNetwork,
    pub params: CouplingParams,
    pub h: f64,
}

fn angle_ok(dir: Point, others: &[Point]) -> bool {
    let min_cos = (30f64).to_radians().cos();
    others.iter().all(|o| dir.dot(*o) / (dir.norm() * o.norm()) < min_cos)
}

/// Random tree of at most `max_edges` edges with all edge angles at least 30°,
/// kept `margin` away from the boundary except for an optional boundary spur.
pub fn random_tree(rng: &mut ChaCha8Rng, domain: &DomainGeometry, max_edges: usize) -> RoadNetwork {
    let margin = 0.08;
    let (lo, hi) = domain.bounding_box();
    let inside = |q: Point| domain.contains_strictly(q, margin);
    let start = loop {
        let q = p(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if inside(q) {
            break q;
        }
    };
    let mut verts = vec![start];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let target = rng.gen_range(1..=max_edges);
    let mut attempts = 0;
    while edges.len() < target && attempts < 400 {
        attempts += 1;
        let from = rng.gen_range(0..verts.len());
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let len = rng.gen_range(0.12..0.3);
        let q = verts[from] + p(theta.cos(), theta.sin()) * len;
        if !inside(q) || !edge_fits(&verts, &edges, from, q) {
            continue;
        }
        verts.push(q);
        edges.push((from, verts.len() - 1));
    }
    let mut flags = vec![false; verts.len()];
    if rng.gen_bool(0.5) {
        // Spur from some vertex straight to the nearest boundary point.
        for from in 0..verts.len() {
            let v = verts[from];
            let s = domain.boundary_parameter(v);
            let foot = domain.boundary_point(s);
            let at_corner = domain.polygon().iter().any(|c| c.dist(foot) < 0.05);
            if at_corner || !edge_fits(&verts, &edges, from, foot) {
                continue;
            }
            verts.push(foot);
            flags.push(true);
            edges.push((from, verts.len() - 1));
            break;
        }
    }
    RoadNetwork::new_validated(verts, edges, flags).unwrap()
}

fn edge_fits(verts: &[Point], edges: &[(usize, usize)], from: usize, q: Point) -> bool {
    let a = verts[from];
    let dir = q - a;
    let at_from: Vec<Point> = edges
        .iter()
        .filter_map(|&(i, j)| {
            if i == from {
                Some(verts[j] - a)
            } else if j == from {
                Some(verts[i] - a)
            } else {
                None
            }
        })
        .collect();
    if !angle_ok(dir, &at_from) {
        return false;
    }
    if verts.iter().any(|v| v.dist(q) < 0.1) {
        return false;
    }
    edges.iter().all(|&(i, j)| {
        let (c, d) = (verts[i], verts[j]);
        let shares = i == from || j == from;
        let dq = segment_point_distance(c, d, q).0;
        let far_from_segment = (0..=16).all(|k| {
            let m = a.lerp(q, k as f64 / 16.0);
            shares && k < 4 || segment_point_distance(c, d, m).0 > 0.06
        });
        dq > 0.06 && far_from_segment
    })
}

pub fn random_params(rng: &mut ChaCha8Rng) -> CouplingParams {
    let mut draw = || 10f64.powf(rng.gen_range(-0.5..0.5));
    CouplingParams::new(draw(), draw(), draw(), draw()).unwrap()
}

fn reference_domains() -> [(&'static str, DomainGeometry, f64); 3] {
    [
        ("square", DomainGeometry::unit_square(), 0.125),
        ("rect12", rect12(), 0.16),
        ("lshape", DomainGeometry::l_shape(), 0.1),
    ]
}

fn draw_config(rng: &mut ChaCha8Rng, which: usize, index: usize) -> Config {
    let (name, domain, h) = reference_domains()[which % 3].clone();
    let net = random_tree(rng, &domain, 6);
    Config {
        name: format!("{name}-{index}"),
        domain,
        net,
        params: random_params(rng),
        h,
    }
}

/// Random road/parameter draws cycling through the square, the 1×2 rectangle and the L-shape.
pub fn corpus(count: usize, seed: u64) -> Vec<Config> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| draw_config(&mut rng, i, i)).collect()
}

/// One random configuration on a domain chosen by the seed.
pub fn random_config(seed: u64) -> Config {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_config(&mut rng, (seed % 3) as usize, 0)
}

/// Random networks for metric checks: trees plus up to two non-crossing chords.
pub fn random_networks(count: usize, seed: u64, max_edges: usize) -> Vec<RoadNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = DomainGeometry::rectangle(-1.0, -1.0, 2.0, 2.0).unwrap();
    (0..count)
        .map(|_| {
            let tree = random_tree(&mut rng, &domain, max_edges);
            let verts = tree.vertices().to_vec();
            let mut edges = tree.edges().to_vec();
            let flags = tree.boundary_flags().to_vec();
            for _ in 0..2 {
                let i = rng.gen_range(0..verts.len());
                let j = rng.gen_range(0..verts.len());
                if i == j || edges.contains(&(i, j)) || edges.contains(&(j, i)) {
                    continue;
                }
                edges.push((i, j));
                let ok = RoadNetwork::new(verts.clone(), edges.clone(), flags.clone())
                    .map_or(false, |n| n.validate().is_valid());
                if !ok {
                    edges.pop();
                }
            }
            RoadNetwork::new_validated(verts, edges, flags).unwrap()
        })
        .collect()
}
