//! Upper and lower Ahlfors regularity of a road network.
//!
//! The upper constant is `sup H¹(K ∩ B(x, r)) / r` over centers `x ∈ K` and radii `r > 0`.
//! For polygonal networks the ratio changes form only at finitely many event radii
//! (distances to vertices and to the nearest point of each edge), so sampling those
//! events plus a geometric grid captures the supremum at a given center.

use crate::geometry::{segment_disk_length, segment_point_distance, Point};

use super::RoadNetwork;

/// Sampling resolution for [`ahlfors_upper_constant`].
#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsSampling {
    /// Centers per edge in addition to the vertices and the edge midpoint.
    pub interior_samples_per_edge: usize,
    /// Size of the geometric radius grid at each center.
    pub radii_per_center: usize,
    /// Fixed `(r_min, r_max)` for the geometric grid. When `None`, the grid spans
    /// `[1e-3, 1] × ` the distance from the center to the farthest vertex.
    pub radius_range: Option<(f64, f64)>,
}

impl Default for AhlforsSampling {
    fn default() -> Self {
        Self {
            interior_samples_per_edge: 8,
            radii_per_center: 32,
            radius_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsEstimate {
    pub lambda: f64,
    pub center: Point,
    pub radius: f64,
    pub centers_evaluated: usize,
    pub radii_evaluated: usize,
}

/// `H¹(K ∩ B̄(center, r))`.
pub fn ball_length(net: &RoadNetwork, center: Point, r: f64) -> f64 {
    (0..net.edge_count())
        .map(|e| {
            let (a, b) = net.edge_endpoints(e);
            segment_disk_length(a, b, center, r)
        })
        .sum()
}

fn sample_centers(net: &RoadNetwork, per_edge: usize) -> Vec<Point> {
    let mut centers: Vec<Point> = net.vertices().to_vec();
    for e in 0..net.edge_count() {
        let (a, b) = net.edge_endpoints(e);
        centers.push(a.lerp(b, 0.5));
        for k in 1..=per_edge {
            let t = k as f64 / (per_edge + 1) as f64;
            if (t - 0.5).abs() > 1e-12 {
                centers.push(a.lerp(b, t));
            }
        }
    }
    centers
}

fn farthest_vertex_distance(net: &RoadNetwork, x: Point) -> f64 {
    net.vertices().iter().map(|v| v.dist(x)).fold(0.0, f64::max)
}

/// Estimates the upper Ahlfors constant `Λ_K`.
pub fn ahlfors_upper_constant(net: &RoadNetwork, sampling: &AhlforsSampling) -> AhlforsEstimate {
    let centers = sample_centers(net, sampling.interior_samples_per_edge);
    let mut best = AhlforsEstimate {
        lambda: 0.0,
        center: centers[0],
        radius: 0.0,
        centers_evaluated: centers.len(),
        radii_evaluated: 0,
    };
    let mut radii = Vec::new();
    for &x in &centers {
        radii.clear();
        radii.extend(net.vertices().iter().map(|v| v.dist(x)));
        for e in 0..net.edge_count() {
            let (a, b) = net.edge_endpoints(e);
            radii.push(segment_point_distance(a, b, x).0);
        }
        let (lo, hi) = sampling.radius_range.unwrap_or_else(|| {
            let far = farthest_vertex_distance(net, x);
            (1e-3 * far, far)
        });
        let m = sampling.radii_per_center;
        if m == 1 {
            radii.push(hi);
        } else if m > 1 && lo > 0.0 && hi > lo {
            let ratio = (hi / lo).ln();
            radii.extend((0..m).map(|j| lo * (ratio * j as f64 / (m - 1) as f64).exp()));
        }
        for &r in radii.iter().filter(|&&r| r > 0.0) {
            best.radii_evaluated += 1;
            let ratio = ball_length(net, x, r) / r;
            if ratio > best.lambda {
                best.lambda = ratio;
                best.center = x;
                best.radius = r;
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerAhlforsReport {
    /// Whether every sampled ratio is at least `1 - 1e-12`.
    pub holds: bool,
    pub worst_ratio: f64,
    pub worst_center: Point,
    pub worst_radius: f64,
    pub evaluations: usize,
}

/// Checks `H¹(K ∩ B(x, r)) ≥ r` for sampled centers `x ∈ K` and radii below the
/// distance from `x` to the farthest network point.
///
/// `samples` controls both the number of centers per edge and the number of
/// radii per center.
pub fn lower_ahlfors_check(net: &RoadNetwork, samples: usize) -> LowerAhlforsReport {
    let samples = samples.max(1);
    let centers = sample_centers(net, samples);
    let mut report = LowerAhlforsReport {
        holds: true,
        worst_ratio: f64::INFINITY,
        worst_center: centers[0],
        worst_radius: 0.0,
        evaluations: 0,
    };
    for &x in &centers {
        let far = farthest_vertex_distance(net, x);
        if far <= 0.0 {
            continue;
        }
        let mut radii: Vec<f64> = (1..=samples)
            .map(|j| far * j as f64 / (samples + 1) as f64)
            .collect();
        radii.extend((1..=samples.min(40)).map(|j| far * 0.5f64.powi(j as i32 + 1)));
        // Event radii strictly below the far distance.
        radii.extend(
            net.vertices()
                .iter()
                .map(|v| v.dist(x))
                .filter(|&d| d > 0.0 && d < far),
        );
        for r in radii {
            report.evaluations += 1;
            let ratio = ball_length(net, x, r) / r;
            if ratio < report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_center = x;
                report.worst_radius = r;
            }
        }
    }
    report.holds = report.worst_ratio >= 1.0 - 1e-12;
    report
}
