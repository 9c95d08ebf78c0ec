mod common;

use std::f64::consts::PI;

use common::{cross, mid_segment, p, rect12};
use rand::{Rng, SeedableRng};
use roadfield_core::analysis::{
    alpha_root, classify, coercivity_constant, compute_constants, efficiency_report, elementary_inequality_check,
    lambda1_lower_bound, poincare_constant, tau, trace_constant, Classification, MeshTag,
};
use roadfield_core::assembly::{assemble_field, assemble_trace_coupling, build_system, CouplingParams};
use roadfield_core::meshing::{triangulate, triangulate_domain, DomainGeometry, Mesh, MeshOptions, VertexMarker};
use roadfield_core::network::{AhlforsSampling, RoadNetwork};
use roadfield_core::optimize::{EvaluationSettings, Evaluator};
use roadfield_core::spectral::{dense_generalized, smallest_eigenpairs, DENSE_CAP};

#[test]
fn poincare_of_reference_domains() {
    let square = triangulate_domain(&DomainGeometry::unit_square(), &MeshOptions::new(1.0 / 64.0)).unwrap();
    let c = poincare_constant(&square, 1e-10).unwrap();
    let exact = 1.0 / (2.0 * PI * PI);
    assert!((c - exact).abs() / exact < 0.01, "{c}");

    let rect = triangulate_domain(&rect12(), &MeshOptions::new(1.0 / 32.0)).unwrap();
    let c = poincare_constant(&rect, 1e-10).unwrap();
    let exact = 1.0 / (1.25 * PI * PI);
    assert!((c - exact).abs() / exact < 0.01, "{c}");
}

#[test]
fn poincare_grows_under_refinement() {
    let mut mesh = triangulate_domain(&DomainGeometry::l_shape(), &MeshOptions::new(0.25)).unwrap();
    let mut prev = poincare_constant(&mesh, 1e-11).unwrap();
    for _ in 0..3 {
        mesh = mesh.refine();
        let next = poincare_constant(&mesh, 1e-11).unwrap();
        assert!(next >= prev * (1.0 - 1e-10), "{prev} -> {next}");
        prev = next;
    }
}

fn free_field_pencil(mesh: &Mesh) -> (roadfield_core::sparse::CsrMatrix, roadfield_core::sparse::CsrMatrix) {
    let free: Vec<usize> = (0..mesh.vertex_count()).filter(|&v| !mesh.markers()[v].on_boundary()).collect();
    let (stiff, _) = assemble_field(mesh).unwrap();
    let t = assemble_trace_coupling(mesh).t_ff;
    (t.restrict(&free, &free), stiff.restrict(&free, &free))
}

#[test]
fn trace_constant_bounds_samples_and_matches_dense() {
    let mesh = triangulate(&DomainGeometry::unit_square(), &cross(0.3), &MeshOptions::new(0.125)).unwrap();
    let c_t = trace_constant(&mesh, 1e-12).unwrap();
    let (t, a) = free_field_pencil(&mesh);
    assert!(a.nrows() <= 300);
    let dense = dense_generalized(&t, &a, DENSE_CAP).unwrap();
    let top = *dense.eigenvalues().last().unwrap();
    assert!((c_t - top).abs() <= 1e-8 * top, "{c_t} vs {top}");

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(t.quad_form(&v) <= c_t * a.quad_form(&v) * (1.0 + 1e-12));
    }
}

#[test]
fn trace_constant_shrinks_with_the_road() {
    let mesh = triangulate(&DomainGeometry::unit_square(), &cross(0.3), &MeshOptions::new(0.1)).unwrap();
    let kept: Vec<_> = mesh.road_edges().iter().copied().filter(|e| e.parent < 2).collect();
    let mut on_road = vec![false; mesh.vertex_count()];
    for e in &kept {
        on_road[e.a] = true;
        on_road[e.b] = true;
    }
    let markers = mesh
        .markers()
        .iter()
        .zip(&on_road)
        .map(|(m, &r)| VertexMarker::from_flags(m.on_boundary(), r))
        .collect();
    let sub = Mesh::from_parts(mesh.vertices().to_vec(), mesh.triangles().to_vec(), markers, kept, mesh.origin()).unwrap();
    assert!((sub.road_length() - 0.6).abs() < 1e-12);
    let (full, part) = (trace_constant(&mesh, 1e-12).unwrap(), trace_constant(&sub, 1e-12).unwrap());
    assert!(part <= full * (1.0 + 1e-10), "{part} > {full}");
}

#[test]
fn elementary_inequality_examples() {
    assert!(elementary_inequality_check(1.0, 1.0, 0.0));
    for (beta, eps) in [(1.0, 0.5), (3.0, 2.0), (-2.0, 1e-3)] {
        assert!(elementary_inequality_check(0.0, beta, eps));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100_000 {
        let (a, b) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let eps = 10f64.powf(rng.gen_range(-6.0..3.0));
        assert!(elementary_inequality_check(a, b, eps));
    }
}

#[test]
fn coercivity_examples() {
    let p1 = CouplingParams::new(3.0, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(coercivity_constant(&p1, 1.0, 1.0).unwrap(), 0.5);
    let mut prev = f64::INFINITY;
    for b in [1e-1, 1e-3, 1e-6] {
        let c = coercivity_constant(&CouplingParams::new(3.0, b, 1.0, 1.0).unwrap(), 1.0, 1.0).unwrap();
        assert!(c <= b && c < prev);
        prev = c;
    }
}

#[test]
fn alpha_examples() {
    let alpha = alpha_root(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!((alpha - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
    assert!(tau(1.0, 1.0, 1.0, 1.0, 1.0, alpha).abs() < 1e-15);

    let (a, c_p, mu) = (2.0, 0.5, 1.5);
    let alpha = alpha_root(a, mu, 1.0, c_p, 0.0).unwrap();
    assert!((alpha - c_p * mu / a).abs() < 1e-15);

    let mut prev = 1.0;
    for mu in [1e-2, 1e-5, 1e-9] {
        let alpha = alpha_root(1.0, mu, 1.0, 1.0, 1.0).unwrap();
        assert!(alpha < prev && alpha <= 2.0 * mu);
        prev = alpha;
    }
}

#[test]
fn lower_bound_examples() {
    let alpha = (3.0 - 5f64.sqrt()) / 2.0;
    let c0 = lambda1_lower_bound(1.0, 1.0 / (2.0 * PI * PI), alpha).unwrap();
    assert!((c0 - 2.0 * PI * PI * alpha).abs() < 1e-12);
    assert!((c0 - 7.5397).abs() < 1e-3, "{c0}");

    let (c_p, mu, c_t, nu) = (0.05, 2.0, 0.3, 1.5);
    for a in [1.0, 2.0] {
        let alpha = alpha_root(a, mu, nu, c_p, c_t).unwrap();
        let s = a + c_p * mu + c_t * nu;
        let oracle = (s - (s * s - 4.0 * a * c_p * mu).sqrt()) / (2.0 * a);
        assert!((alpha - oracle).abs() < 1e-12);
        let c0 = lambda1_lower_bound(a, c_p, alpha).unwrap();
        assert!((c0 - a / c_p * oracle).abs() < 1e-9);
    }
    assert!(lambda1_lower_bound(1.0, 1.0, 1e-12).unwrap() < 1e-11);
}

#[test]
fn report_bounds_and_self_comparison() {
    let domain = DomainGeometry::unit_square();
    let mesh = triangulate(&domain, &mid_segment(), &MeshOptions::new(0.125)).unwrap();
    let params = CouplingParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let sys = build_system(&mesh, params).unwrap();
    let l1 = smallest_eigenpairs(&sys, 1, 1e-10).unwrap().eigenvalues()[0];
    let constants = compute_constants(&mesh, &mid_segment(), &params, 1e-10, &AhlforsSampling::default()).unwrap();
    let tag = MeshTag::of(&mesh);
    let report = efficiency_report("mid", (l1, tag), (l1, tag), constants.clone(), 1e-3).unwrap();
    assert_eq!(report.ratio, 1.0);
    assert_eq!(report.classification, Classification::Neutral);
    assert!(report.lower_bound_holds && report.constants.c0 <= l1);

    let other = triangulate_domain(&domain, &MeshOptions::new(0.25)).unwrap();
    assert!(efficiency_report("mid", (l1, tag), (l1, MeshTag::of(&other)), constants, 1e-3).is_err());
    assert_eq!(classify(1.002, 1e-3), Classification::Improves);
    assert_eq!(classify(0.998, 1e-3), Classification::Slows);
}

#[test]
fn ranking_survives_refinement() {
    let params = CouplingParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let eval = Evaluator::new(DomainGeometry::unit_square(), EvaluationSettings::new(params, 1.0 / 16.0));
    let corner =
        RoadNetwork::new(vec![p(0.0, 0.6), p(0.4, 1.0)], vec![(0, 1)], vec![true, true]).unwrap();
    let roads = [("mid", mid_segment()), ("corner", corner)];
    let mut orders = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let ratios: Vec<f64> = roads.iter().map(|(id, n)| eval.evaluate_at(id, n, h).unwrap().ratio).collect();
        let converged = prev
            .as_ref()
            .is_some_and(|q| q.iter().zip(&ratios).all(|(a, b)| (a - b).abs() < 5e-4 * b));
        if converged || prev.is_none() {
            orders.push(ratios[0] < ratios[1]);
        }
        prev = Some(ratios);
    }
    assert!(orders.len() >= 2, "{orders:?}");
    assert!(orders.windows(2).all(|w| w[0] == w[1]), "{orders:?}");
}
