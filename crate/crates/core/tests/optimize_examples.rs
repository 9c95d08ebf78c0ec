mod common;

use common::{mid_segment, p};
use roadfield_core::assembly::CouplingParams;
use roadfield_core::meshing::DomainGeometry;
use roadfield_core::network::RoadNetwork;
use roadfield_core::optimize::{
    enumerate_candidates, grid_search, local_search, rank, vertex_params, Candidate, EvaluationSettings, Evaluator,
    FamilyKind, LocalSearchOptions, OptimizeError, RoadFamilySpec, SearchLog,
};

fn evaluator(h: f64) -> Evaluator {
    let params = CouplingParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    Evaluator::new(DomainGeometry::unit_square(), EvaluationSettings::new(params, h))
}

fn seed(domain: &DomainGeometry, net: RoadNetwork) -> Candidate {
    Candidate {
        id: "seed".into(),
        params: vertex_params(domain, &net),
        net,
    }
}

#[test]
fn evaluation_is_deterministic_and_caches_gamma() {
    let eval = evaluator(0.125);
    let r1 = eval.evaluate("mid", &mid_segment()).unwrap();
    assert_eq!(eval.gamma_misses(), 1);
    let r2 = eval.evaluate("mid", &mid_segment()).unwrap();
    assert_eq!(r1, r2);
    let other = RoadNetwork::interior(vec![p(0.3, 0.3), p(0.7, 0.6)], vec![(0, 1)]).unwrap();
    eval.evaluate("other", &other).unwrap();
    assert_eq!(eval.gamma_misses(), 1);
    eval.evaluate_at("mid", &mid_segment(), 0.0625).unwrap();
    assert_eq!(eval.gamma_misses(), 2);
}

#[test]
fn tiny_road_approaches_the_bare_domain() {
    let params = CouplingParams::new(1.0, 1.0, 100.0, 1.0).unwrap();
    let eval = Evaluator::new(DomainGeometry::unit_square(), EvaluationSettings::new(params, 1.0 / 16.0));
    let tiny = RoadNetwork::interior(vec![p(0.4995, 0.5), p(0.5005, 0.5)], vec![(0, 1)]).unwrap();
    let r = eval.evaluate("tiny", &tiny).unwrap();
    assert!((r.ratio - 1.0).abs() < 0.03, "{}", r.ratio);
}

#[test]
fn every_family_emits_valid_candidates() {
    let d = DomainGeometry::unit_square();
    for (kind, budget) in [
        (FamilyKind::SegmentBundle, 1.5),
        (FamilyKind::Cross, 1.0),
        (FamilyKind::Tree, 1.2),
        (FamilyKind::Comb, 2.0),
    ] {
        let spec = RoadFamilySpec::new(kind, budget, &d, 4);
        let en = enumerate_candidates(&d, &spec).unwrap();
        assert!(!en.candidates.is_empty(), "{kind}");
        for c in &en.candidates {
            assert!(c.net.validate().is_valid(), "{kind} {}", c.id);
            assert!(c.net.total_length() <= budget + 1e-9);
        }
    }
}

#[test]
fn empty_feasible_set_is_reported() {
    let d = DomainGeometry::unit_square();
    let spec = RoadFamilySpec::new(FamilyKind::SegmentBundle, 0.01, &d, 4);
    match grid_search(&evaluator(0.25), &spec) {
        Err(OptimizeError::NoFeasibleCandidate { considered, summary }) => {
            assert!(considered > 0);
            assert!(summary.contains("over budget"), "{summary}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn zero_iterations_return_the_seed() {
    let eval = evaluator(0.125);
    let d = eval.domain().clone();
    let spec = RoadFamilySpec::new(FamilyKind::SegmentBundle, 1.5, &d, 4);
    let result = local_search(&eval, &spec, seed(&d, mid_segment()), LocalSearchOptions { step: 0.1, iterations: 0 }).unwrap();
    assert_eq!(result.ranked.len(), 1);
    assert_eq!(result.best().candidate.id, "seed");
    assert_eq!(result.best().report, eval.evaluate("seed", &mid_segment()).unwrap());
}

#[test]
fn accepted_ratios_never_decrease() {
    let eval = evaluator(0.125);
    let d = eval.domain().clone();
    let spec = RoadFamilySpec::new(FamilyKind::SegmentBundle, 1.2, &d, 4);
    let start = RoadNetwork::new(vec![p(0.0, 0.7), p(0.7, 1.0)], vec![(0, 1)], vec![true, true]).unwrap();
    let result = local_search(&eval, &spec, seed(&d, start), LocalSearchOptions { step: 0.125, iterations: 5 }).unwrap();
    let accepted = &result.log.accepted;
    assert!(!accepted.is_empty());
    assert!(accepted.windows(2).all(|w| w[1].1 > w[0].1));
    assert_eq!(result.best().report.ratio, accepted.last().unwrap().1);
}

#[test]
fn ranking_rules() {
    let eval = evaluator(0.25);
    let d = eval.domain().clone();
    let spec = RoadFamilySpec::new(FamilyKind::SegmentBundle, 1.5, &d, 4);
    let mut result = grid_search(&eval, &spec).unwrap();
    let one = rank(vec![result.ranked[0].clone()], SearchLog::default()).unwrap();
    assert_eq!(one.ranked, vec![result.ranked[0].clone()]);

    let mut reversed = result.ranked.clone();
    reversed.reverse();
    let again = rank(reversed, SearchLog::default()).unwrap();
    let ids = |r: &[roadfield_core::optimize::Evaluation]| r.iter().map(|e| e.candidate.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&again.ranked), ids(&result.ranked));

    let (mut long, mut short) = (result.ranked[0].clone(), result.ranked[1].clone());
    short.report.ratio = long.report.ratio;
    long.length = short.length + 0.1;
    long.candidate.id = "a-long".into();
    short.candidate.id = "b-short".into();
    let tie = rank(vec![long, short], SearchLog::default()).unwrap();
    assert_eq!(tie.ranked[0].candidate.id, "b-short");

    result.ranked.clear();
    assert!(matches!(rank(result.ranked, SearchLog::default()), Err(OptimizeError::EmptyRanking)));
}
