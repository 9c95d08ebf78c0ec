//! CSV and legacy VTK writers. Numbers are written with 17 significant digits and LF line endings.

use std::fmt::Write;

use crate::analysis::EfficiencyReport;
use crate::evolution::EvolutionTrace;
use crate::meshing::{Mesh, MeshQuality};
use crate::network::RoadNetwork;
use crate::optimize::SearchResult;
use crate::spectral::Spectrum;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("index,eigenvalue,residual,cluster\n");
    let clusters = spec.clusters();
    for (i, (&l, &r)) in spec.eigenvalues().iter().zip(spec.residuals()).enumerate() {
        let c = clusters.iter().position(|c| c.contains(&i)).unwrap_or(0);
        writeln!(out, "{},{},{},{}", i + 1, fmt_f64(l), fmt_f64(r), c + 1).unwrap();
    }
    out
}

pub fn trace_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::from("step,time,l_norm\n");
    for (j, (&t, &n)) in trace.times.iter().zip(&trace.l_norms).enumerate() {
        writeln!(out, "{j},{},{}", fmt_f64(t), fmt_f64(n)).unwrap();
    }
    out
}

pub const REPORT_HEADER: &str = "road_id,lambda1,gamma1,ratio,classification,c_p,c_t,lambda_k,alpha,c0,c_coer,h,lower_bound_holds,ahlfors_samples_per_edge,ahlfors_radii_per_center";

pub fn report_row(r: &EfficiencyReport) -> String {
    let c = &r.constants;
    [
        r.road_id.clone(),
        fmt_f64(r.lambda1),
        fmt_f64(r.gamma1),
        fmt_f64(r.ratio),
        r.classification.to_string(),
        fmt_f64(c.c_p),
        fmt_f64(c.c_t),
        fmt_f64(c.lambda_k),
        fmt_f64(c.alpha),
        fmt_f64(c.c0),
        fmt_f64(c.c_coer),
        fmt_opt(c.h),
        r.lower_bound_holds.to_string(),
        c.ahlfors_sampling.interior_samples_per_edge.to_string(),
        c.ahlfors_sampling.radii_per_center.to_string(),
    ]
    .join(",")
}

pub fn reports_csv(reports: &[EfficiencyReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports {
        out.push_str(&report_row(r));
        out.push('\n');
    }
    out
}

/// One row per ranked candidate; parameters are `;`-separated.
pub fn search_csv(result: &SearchResult) -> String {
    let mut out = String::from("rank,candidate_id,parameters,length,lambda1,gamma1,ratio,classification,refined_ratio,converged\n");
    for (i, e) in result.ranked.iter().enumerate() {
        let params: Vec<String> = e.candidate.params.iter().map(|&p| fmt_f64(p)).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            e.candidate.id,
            params.join(";"),
            fmt_f64(e.length),
            fmt_f64(e.report.lambda1),
            fmt_f64(e.report.gamma1),
            fmt_f64(e.report.ratio),
            e.report.classification,
            fmt_opt(e.refined_ratio),
            e.converged.map_or_else(String::new, |c| c.to_string()),
        )
        .unwrap();
    }
    out
}

pub fn network_stats_csv(net: &RoadNetwork, lambda_k: f64, lower_ratio: f64) -> String {
    let report = net.validate();
    let mut out = String::from("quantity,value\n");
    let rows = [
        ("vertices", net.vertex_count().to_string()),
        ("edges", net.edge_count().to_string()),
        ("boundary_vertices", net.boundary_flags().iter().filter(|&&f| f).count().to_string()),
        ("components", report.components.to_string()),
        ("valid", report.is_valid().to_string()),
        ("total_length", fmt_f64(net.total_length())),
        ("bounding_diameter", fmt_f64(net.bounding_diameter())),
        ("ahlfors_upper", fmt_f64(lambda_k)),
        ("ahlfors_lower_min_ratio", fmt_f64(lower_ratio)),
    ];
    for (k, v) in rows {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

pub fn quality_csv(q: &MeshQuality) -> String {
    let mut out = String::from("quantity,value\n");
    let rows = [
        ("vertices", q.vertices.to_string()),
        ("triangles", q.triangles.to_string()),
        ("boundary_edges", q.boundary_edges.to_string()),
        ("road_edges", q.road_edges.to_string()),
        ("area", fmt_f64(q.area)),
        ("min_angle_deg", fmt_f64(q.min_angle_deg)),
        ("max_angle_deg", fmt_f64(q.max_angle_deg)),
        ("max_aspect_ratio", fmt_f64(q.max_aspect_ratio)),
        ("h_min", fmt_f64(q.h_min)),
        ("h_max", fmt_f64(q.h_max)),
    ];
    for (k, v) in rows {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

/// Legacy ASCII unstructured grid with triangles, road segments and nodal `v`, `u`.
pub fn vtk(mesh: &Mesh, v: &[f64], u: &[f64]) -> String {
    let n = mesh.vertex_count();
    let (nt, nr) = (mesh.triangle_count(), mesh.road_edges().len());
    let mut out = String::from("# vtk DataFile Version 3.0\nroadfield\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {n} double").unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{} {} 0", fmt_f64(p.x), fmt_f64(p.y)).unwrap();
    }
    writeln!(out, "CELLS {} {}", nt + nr, 4 * nt + 3 * nr).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for e in mesh.road_edges() {
        writeln!(out, "2 {} {}", e.a, e.b).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", nt + nr).unwrap();
    out.push_str(&"5\n".repeat(nt));
    out.push_str(&"3\n".repeat(nr));
    writeln!(out, "POINT_DATA {n}").unwrap();
    for (name, data) in [("v", v), ("u", u)] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for &x in data {
            writeln!(out, "{}", fmt_f64(x)).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::{triangulate_domain, DomainGeometry, MeshOptions};

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn vtk_layout() {
        let mesh = triangulate_domain(&DomainGeometry::unit_square(), &MeshOptions::new(0.5)).unwrap();
        let n = mesh.vertex_count();
        let text = vtk(&mesh, &vec![1.0; n], &vec![0.0; n]);
        assert!(text.contains(&format!("POINTS {n} double")));
        assert!(text.contains(&format!("CELLS {} {}", mesh.triangle_count(), 4 * mesh.triangle_count())));
        assert_eq!(text.matches("LOOKUP_TABLE default").count(), 2);
        assert!(!text.contains('\r'));
    }
}
