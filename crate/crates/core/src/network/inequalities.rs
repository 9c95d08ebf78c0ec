//! Discrete checks of the Hölder embedding and the sup-norm bound for
//! piecewise-linear road functions.

use super::{NetworkFunction, RoadNetwork};

/// Relative round-off allowance when comparing two sides of an inequality.
const REL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    pub holds: bool,
    /// `min over vertex pairs of dist^{1/2}·‖∇f‖ − |f(x) − f(y)|`.
    pub worst_slack: f64,
    pub worst_pair: (usize, usize),
}

/// Verifies `|f(x) − f(y)| ≤ dist_K(x, y)^{1/2} ‖∇_K f‖_{L²(K)}` over all vertex pairs.
pub fn holder_embedding_check(net: &RoadNetwork, f: &NetworkFunction) -> HolderReport {
    let grad = f.gradient_l2_norm(net);
    let dist = net.vertex_distance_matrix();
    let v = f.values();
    let mut report = HolderReport {
        holds: true,
        worst_slack: f64::INFINITY,
        worst_pair: (0, 0),
    };
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let lhs = (v[i] - v[j]).abs();
            let rhs = dist[i][j].sqrt() * grad;
            let slack = rhs - lhs;
            if slack < report.worst_slack {
                report.worst_slack = slack;
                report.worst_pair = (i, j);
            }
            if slack < -REL_SLACK * lhs.max(rhs) {
                report.holds = false;
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinftyReport {
    pub holds: bool,
    pub sup_norm: f64,
    pub bound: f64,
}

/// Verifies `‖f‖_∞ ≤ ‖f‖₂ / H¹(K)^{1/2} + H¹(K)^{1/2} ‖∇_K f‖₂`.
pub fn linfty_bound_check(net: &RoadNetwork, f: &NetworkFunction) -> LinftyReport {
    let total = net.total_length();
    let sup_norm = f.sup_norm();
    let bound = f.l2_norm(net) / total.sqrt() + total.sqrt() * f.gradient_l2_norm(net);
    LinftyReport {
        holds: sup_norm <= bound * (1.0 + REL_SLACK),
        sup_norm,
        bound,
    }
}
