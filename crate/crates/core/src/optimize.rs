//! Candidate road families, grid enumeration, greedy local search and ranking by `λ₁/γ₁`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    constants_from, efficiency_report, poincare_constant, trace_constant_of, AnalysisError,
    EfficiencyReport, MeshTag, DEFAULT_BAND,
};
use crate::assembly::{build_system, CouplingParams};
use crate::geometry::{orient, segment_contact, segment_point_distance, Point, SegmentContact};
use crate::meshing::{check_road_in_domain, triangulate, triangulate_domain, DomainGeometry, MeshOptions};
use crate::network::{AhlforsSampling, RoadNetwork};
use crate::spectral::{dirichlet_gamma, smallest_eigenpairs_with, EigenOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid family spec: {0}")]
    InvalidSpec(String),
    #[error("no feasible candidate among {considered} parameter points ({summary})")]
    NoFeasibleCandidate { considered: usize, summary: String },
    #[error("evaluation of {id} failed: {message}")]
    Evaluation { id: String, message: String },
    #[error("nothing to rank")]
    EmptyRanking,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// Straight chords with both endpoints on the boundary, joined at their crossings.
    SegmentBundle,
    /// Four perpendicular arms of equal length from a center.
    Cross,
    /// A straight spine with evenly spaced perpendicular teeth.
    Comb,
    /// Three arms of equal length at 120° from a center.
    Tree,
    /// Explicitly listed networks.
    UserList,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SegmentBundle => "segment-bundle",
            Self::Cross => "cross",
            Self::Comb => "comb",
            Self::Tree => "tree",
            Self::UserList => "user-list",
        }
    }

    /// Names of the free parameters, in grid order.
    pub fn param_names(self, segments: usize) -> Vec<String> {
        let fixed = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        match self {
            Self::SegmentBundle => (1..=segments)
                .flat_map(|i| [format!("s{i}_start"), format!("s{i}_end")])
                .collect(),
            Self::Cross | Self::Tree => fixed(&["cx", "cy", "arm", "theta"]),
            Self::Comb => fixed(&["x0", "x1", "y", "tooth"]),
            Self::UserList => Vec::new(),
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "segment-bundle" => Self::SegmentBundle,
            "cross" => Self::Cross,
            "comb" => Self::Comb,
            "tree" => Self::Tree,
            "user-list" => Self::UserList,
            other => return Err(OptimizeError::InvalidSpec(format!("unknown family {other:?}"))),
        })
    }
}

/// Uniform grid `lo, lo + (hi−lo)/(steps−1), …, hi`; a single step yields `lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    /// `n` points of `[0, 1)` for periodic perimeter parameters.
    pub fn periodic(n: usize) -> Self {
        Self::new(0.0, 1.0 - 1.0 / n as f64, n)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.steps <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.steps - 1) as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadFamilySpec {
    pub kind: FamilyKind,
    /// Upper bound on the total road length.
    pub budget: f64,
    /// Points every candidate must pass through.
    pub required_points: Vec<Point>,
    /// Reject candidates that do not touch the boundary.
    pub boundary_anchored: bool,
    /// One range per entry of [`FamilyKind::param_names`].
    pub ranges: Vec<ParamRange>,
    /// Number of chords in a segment bundle.
    pub segments: usize,
    /// Number of teeth on a comb.
    pub teeth: usize,
    pub user_roads: Vec<RoadNetwork>,
}

impl RoadFamilySpec {
    /// Family with default parameter ranges over the bounding box of `domain`.
    pub fn new(kind: FamilyKind, budget: f64, domain: &DomainGeometry, resolution: usize) -> Self {
        let (lo, hi) = domain.bounding_box();
        let n = resolution.max(2);
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let ranges = match kind {
            FamilyKind::SegmentBundle => vec![ParamRange::periodic(n); 2],
            FamilyKind::Cross | FamilyKind::Tree => vec![
                ParamRange::new(lo.x, hi.x, n),
                ParamRange::new(lo.y, hi.y, n),
                ParamRange::new(span / (4.0 * n as f64), span / 2.0, n),
                ParamRange::new(0.0, std::f64::consts::FRAC_PI_2 * (1.0 - 1.0 / n as f64), n),
            ],
            FamilyKind::Comb => vec![
                ParamRange::new(lo.x, hi.x, n),
                ParamRange::new(lo.x, hi.x, n),
                ParamRange::new(lo.y, hi.y, n),
                ParamRange::new(0.0, (hi.y - lo.y) / 2.0, n),
            ],
            FamilyKind::UserList => Vec::new(),
        };
        Self {
            kind,
            budget,
            required_points: Vec::new(),
            boundary_anchored: false,
            ranges,
            segments: 1,
            teeth: 3,
            user_roads: Vec::new(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        self.kind.param_names(self.segments)
    }

    pub fn validate(&self, domain: &DomainGeometry) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::InvalidSpec(m));
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return bad(format!("budget must be positive, got {}", self.budget));
        }
        let tol = 1e-9 * domain.diameter();
        if let Some(p) = self.required_points.iter().find(|p| !domain.contains(**p, tol)) {
            return bad(format!("required point ({}, {}) lies outside the domain", p.x, p.y));
        }
        if self.kind == FamilyKind::SegmentBundle && self.segments == 0 {
            return bad("a segment bundle needs at least one segment".into());
        }
        if self.kind == FamilyKind::Comb && self.teeth == 0 {
            return bad("a comb needs at least one tooth".into());
        }
        if self.kind == FamilyKind::UserList && self.user_roads.is_empty() {
            return bad("user-list family has no roads".into());
        }
        let expected = self.param_names().len();
        if self.ranges.len() != expected {
            return bad(format!("{} ranges given, family {} has {expected} parameters", self.ranges.len(), self.kind));
        }
        for (name, r) in self.param_names().iter().zip(&self.ranges) {
            if r.steps == 0 || !(r.lo.is_finite() && r.hi.is_finite()) || r.hi < r.lo {
                return bad(format!("range for {name} is invalid: {} {} {}", r.lo, r.hi, r.steps));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub params: Vec<f64>,
    pub net: RoadNetwork,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub id: String,
    pub params: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchLog {
    pub evaluations: usize,
    /// Parameter points or moves that produced an inadmissible road.
    pub rejections: Vec<Rejection>,
    /// Admissible roads whose evaluation failed.
    pub failures: Vec<Rejection>,
    /// Ratios of the accepted iterates of a local search, starting with the seed.
    pub accepted: Vec<(String, f64)>,
}

impl SearchLog {
    /// Rejection counts by reason.
    pub fn rejection_summary(&self) -> String {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.rejections {
            *counts.entry(r.reason.split(':').next().unwrap_or("")).or_default() += 1;
        }
        counts
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub candidate: Candidate,
    pub length: f64,
    pub report: EfficiencyReport,
    /// Ratio recomputed at half the mesh size, for the top entries only.
    pub refined_ratio: Option<f64>,
    pub converged: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub ranked: Vec<Evaluation>,
    pub log: SearchLog,
}

impl SearchResult {
    pub fn best(&self) -> &Evaluation {
        &self.ranked[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub candidates: Vec<Candidate>,
    pub rejections: Vec<Rejection>,
}

fn grid_points(ranges: &[ParamRange]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for r in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r.steps).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(r.value(i));
                    p
                })
            })
            .collect();
    }
    out
}

/// Network from straight segments, split at their mutual contacts. Vertex boundary
/// flags come from geometry.
pub fn planar_network(
    domain: &DomainGeometry,
    segments: &[(Point, Point)],
) -> Result<RoadNetwork, String> {
    let tol = 1e-9 * domain.diameter();
    let mut cuts: Vec<Vec<Point>> = segments.iter().map(|&(a, b)| vec![a, b]).collect();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            let (a, b) = segments[i];
            let (c, d) = segments[j];
            match segment_contact(a, b, c, d, tol) {
                SegmentContact::Disjoint => {}
                SegmentContact::Overlap => return Err(format!("overlap: segments {i} and {j}")),
                SegmentContact::Point => {
                    let x = contact_point(a, b, c, d, tol);
                    cuts[i].push(x);
                    cuts[j].push(x);
                }
            }
        }
    }
    let mut vertices: Vec<Point> = Vec::new();
    let mut intern = |p: Point| match vertices.iter().position(|q| q.dist(p) <= tol) {
        Some(i) => i,
        None => {
            vertices.push(p);
            vertices.len() - 1
        }
    };
    let mut edges = Vec::new();
    for (&(a, b), pts) in segments.iter().zip(&cuts) {
        let dir = b - a;
        let mut pts = pts.clone();
        pts.sort_by(|p, q| (*p - a).dot(dir).total_cmp(&(*q - a).dot(dir)));
        let ids: Vec<usize> = pts.iter().map(|&p| intern(p)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] && !edges.iter().any(|&(i, j)| (i, j) == (w[0], w[1]) || (j, i) == (w[0], w[1])) {
                edges.push((w[0], w[1]));
            }
        }
    }
    flagged_network(domain, vertices, edges)
}

fn contact_point(a: Point, b: Point, c: Point, d: Point, tol: f64) -> Point {
    for (p, (s, t)) in [(c, (a, b)), (d, (a, b)), (a, (c, d)), (b, (c, d))] {
        if segment_point_distance(s, t, p).0 <= tol {
            return p;
        }
    }
    let (oc, od) = (orient(a, b, c), orient(a, b, d));
    c.lerp(d, oc / (oc - od))
}

fn flagged_network(
    domain: &DomainGeometry,
    vertices: Vec<Point>,
    edges: Vec<(usize, usize)>,
) -> Result<RoadNetwork, String> {
    let tol = 1e-9 * domain.diameter();
    let flags = vertices.iter().map(|&p| domain.boundary_distance(p) <= tol).collect();
    RoadNetwork::new(vertices, edges, flags).map_err(|e| format!("invalid: {e}"))
}

fn star(domain: &DomainGeometry, center: Point, arm: f64, theta: f64, arms: usize) -> Result<RoadNetwork, String> {
    let mut vertices = vec![center];
    let mut edges = Vec::new();
    for k in 0..arms {
        let phi = theta + std::f64::consts::TAU * k as f64 / arms as f64;
        vertices.push(center + Point::new(phi.cos(), phi.sin()) * arm);
        edges.push((0, k + 1));
    }
    flagged_network(domain, vertices, edges)
}

fn comb(domain: &DomainGeometry, x0: f64, x1: f64, y: f64, tooth: f64, teeth: usize) -> Result<RoadNetwork, String> {
    if x1 <= x0 {
        return Err("degenerate: spine end before start".into());
    }
    if tooth <= 0.0 {
        return Err("degenerate: zero tooth length".into());
    }
    let mut vertices = vec![Point::new(x0, y)];
    let mut edges = Vec::new();
    for k in 1..=teeth {
        let x = x0 + (x1 - x0) * k as f64 / (teeth + 1) as f64;
        vertices.push(Point::new(x, y));
        vertices.push(Point::new(x, y + tooth));
        let n = vertices.len();
        edges.push((n - 3 - usize::from(k > 1), n - 2));
        edges.push((n - 2, n - 1));
    }
    vertices.push(Point::new(x1, y));
    let n = vertices.len();
    edges.push((n - 3, n - 1));
    flagged_network(domain, vertices, edges)
}

fn build_candidate(domain: &DomainGeometry, spec: &RoadFamilySpec, params: &[f64]) -> Result<RoadNetwork, String> {
    match spec.kind {
        FamilyKind::SegmentBundle => {
            let per = domain.perimeter();
            let mut segments = Vec::with_capacity(spec.segments);
            for pair in params.chunks(2) {
                if pair[0] >= pair[1] {
                    return Err("duplicate: endpoints not in increasing order".into());
                }
                segments.push((domain.boundary_point(pair[0] * per), domain.boundary_point(pair[1] * per)));
            }
            planar_network(domain, &segments)
        }
        FamilyKind::Cross => star(domain, Point::new(params[0], params[1]), params[2], params[3], 4),
        FamilyKind::Tree => star(domain, Point::new(params[0], params[1]), params[2], params[3], 3),
        FamilyKind::Comb => comb(domain, params[0], params[1], params[2], params[3], spec.teeth),
        FamilyKind::UserList => Ok(spec.user_roads[params[0] as usize].clone()),
    }
}

/// Checks the family constraints on an arbitrary network.
pub fn admissible(domain: &DomainGeometry, spec: &RoadFamilySpec, net: &RoadNetwork) -> Result<(), String> {
    let report = net.validate();
    if !report.is_valid() {
        return Err(format!("invalid: {}", report.summary()));
    }
    check_road_in_domain(domain, net).map_err(|e| format!("outside domain: {e}"))?;
    let length = net.total_length();
    if length > spec.budget * (1.0 + 1e-12) {
        return Err(format!("over budget: length {length} > {}", spec.budget));
    }
    let tol = 1e-9 * domain.diameter();
    if let Some(p) = spec.required_points.iter().find(|p| net.locate(**p, tol).is_none()) {
        return Err(format!("missing required point: ({}, {})", p.x, p.y));
    }
    if spec.boundary_anchored && !net.boundary_flags().iter().any(|&f| f) {
        return Err("not anchored: no vertex on the boundary".into());
    }
    Ok(())
}

/// Grid enumeration of the family. Inadmissible parameter points are logged.
pub fn enumerate_candidates(domain: &DomainGeometry, spec: &RoadFamilySpec) -> Result<Enumeration, OptimizeError> {
    spec.validate(domain)?;
    let points: Vec<Vec<f64>> = if spec.kind == FamilyKind::UserList {
        (0..spec.user_roads.len()).map(|i| vec![i as f64]).collect()
    } else {
        grid_points(&spec.ranges)
    };
    let mut out = Enumeration {
        candidates: Vec::new(),
        rejections: Vec::new(),
    };
    for (i, params) in points.into_iter().enumerate() {
        let id = format!("c{i:05}");
        match build_candidate(domain, spec, &params).and_then(|net| admissible(domain, spec, &net).map(|_| net)) {
            Ok(net) => out.candidates.push(Candidate { id, params, net }),
            Err(reason) => out.rejections.push(Rejection { id, params, reason }),
        }
    }
    if out.candidates.is_empty() {
        let log = SearchLog {
            rejections: out.rejections.clone(),
            ..SearchLog::default()
        };
        return Err(OptimizeError::NoFeasibleCandidate {
            considered: out.rejections.len(),
            summary: log.rejection_summary(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationSettings {
    pub params: CouplingParams,
    pub h: f64,
    pub min_angle_deg: f64,
    pub tol: f64,
    pub band: f64,
    pub sampling: AhlforsSampling,
    /// Relative change of the ratio under mesh halving below which a top entry counts as converged.
    pub convergence_tol: f64,
}

impl EvaluationSettings {
    pub fn new(params: CouplingParams, h: f64) -> Self {
        Self {
            params,
            h,
            min_angle_deg: 20.0,
            tol: 1e-8,
            band: DEFAULT_BAND,
            sampling: AhlforsSampling::default(),
            convergence_tol: 5e-3,
        }
    }
}

type GammaSlot = Arc<OnceLock<Result<(f64, MeshTag), OptimizeError>>>;

/// Evaluates roads on a fixed domain, caching `γ₁` per mesh size.
pub struct Evaluator {
    domain: DomainGeometry,
    settings: EvaluationSettings,
    gamma: Mutex<HashMap<u64, GammaSlot>>,
    gamma_misses: AtomicUsize,
}

impl Evaluator {
    pub fn new(domain: DomainGeometry, settings: EvaluationSettings) -> Self {
        Self {
            domain,
            settings,
            gamma: Mutex::new(HashMap::new()),
            gamma_misses: AtomicUsize::new(0),
        }
    }

    pub fn domain(&self) -> &DomainGeometry {
        &self.domain
    }

    pub fn settings(&self) -> &EvaluationSettings {
        &self.settings
    }

    /// Number of `γ₁` computations so far.
    pub fn gamma_misses(&self) -> usize {
        self.gamma_misses.load(Ordering::SeqCst)
    }

    fn mesh_options(&self, h: f64) -> MeshOptions {
        MeshOptions {
            h,
            min_angle_deg: self.settings.min_angle_deg,
        }
    }

    /// `γ₁` of the road-free problem at mesh size `h`.
    pub fn gamma1(&self, h: f64) -> Result<(f64, MeshTag), OptimizeError> {
        let slot = self
            .gamma
            .lock()
            .expect("gamma cache poisoned")
            .entry(h.to_bits())
            .or_default()
            .clone();
        slot.get_or_init(|| {
            self.gamma_misses.fetch_add(1, Ordering::SeqCst);
            let fail = |message: String| OptimizeError::Evaluation {
                id: "gamma1".into(),
                message,
            };
            let mesh = triangulate_domain(&self.domain, &self.mesh_options(h)).map_err(|e| fail(e.to_string()))?;
            let g = dirichlet_gamma(&mesh, self.settings.params.a, 1, self.settings.tol)
                .map_err(|e| fail(e.to_string()))?;
            Ok((g[0], MeshTag::of(&mesh)))
        })
        .clone()
    }

    pub fn evaluate(&self, id: &str, net: &RoadNetwork) -> Result<EfficiencyReport, OptimizeError> {
        self.evaluate_at(id, net, self.settings.h)
    }

    pub fn evaluate_at(&self, id: &str, net: &RoadNetwork, h: f64) -> Result<EfficiencyReport, OptimizeError> {
        let fail = |message: String| OptimizeError::Evaluation {
            id: id.to_string(),
            message,
        };
        let analysis = |e: AnalysisError| fail(e.to_string());
        let s = &self.settings;
        let mesh = triangulate(&self.domain, net, &self.mesh_options(h)).map_err(|e| fail(e.to_string()))?;
        let sys = build_system(&mesh, s.params).map_err(|e| fail(e.to_string()))?;
        let spec = smallest_eigenpairs_with(&sys, &EigenOptions::new(1, s.tol)).map_err(|e| fail(e.to_string()))?;
        let c_p = poincare_constant(&mesh, s.tol).map_err(analysis)?;
        let c_t = trace_constant_of(&sys, s.tol).map_err(analysis)?;
        let constants = constants_from(c_p, c_t, Some(h), net, &s.params, &s.sampling).map_err(analysis)?;
        let gamma = self.gamma1(h)?;
        efficiency_report(id, (spec.eigenvalues()[0], MeshTag::of(&mesh)), gamma, constants, s.band).map_err(analysis)
    }

    fn evaluate_all(&self, candidates: Vec<Candidate>, log: &mut SearchLog) -> Vec<Evaluation> {
        let results: Vec<_> = candidates
            .into_par_iter()
            .map(|c| {
                let r = self.evaluate(&c.id, &c.net);
                (c, r)
            })
            .collect();
        let mut out = Vec::with_capacity(results.len());
        for (candidate, r) in results {
            log.evaluations += 1;
            match r {
                Ok(report) => out.push(Evaluation {
                    length: candidate.net.total_length(),
                    candidate,
                    report,
                    refined_ratio: None,
                    converged: None,
                }),
                Err(e) => log.failures.push(Rejection {
                    id: candidate.id,
                    params: candidate.params,
                    reason: e.to_string(),
                }),
            }
        }
        out
    }

    /// Re-evaluates the first `count` ranked entries at half the mesh size.
    pub fn refine_top(&self, result: &mut SearchResult, count: usize) {
        let h = self.settings.h / 2.0;
        let n = count.min(result.ranked.len());
        let refined: Vec<_> = result.ranked[..n]
            .par_iter()
            .map(|e| self.evaluate_at(&e.candidate.id, &e.candidate.net, h))
            .collect();
        for (e, r) in result.ranked.iter_mut().zip(refined) {
            match r {
                Ok(rep) => {
                    e.converged = Some((rep.ratio - e.report.ratio).abs() <= self.settings.convergence_tol * e.report.ratio);
                    e.refined_ratio = Some(rep.ratio);
                }
                Err(err) => {
                    e.converged = Some(false);
                    result.log.failures.push(Rejection {
                        id: e.candidate.id.clone(),
                        params: e.candidate.params.clone(),
                        reason: format!("refinement: {err}"),
                    });
                }
            }
        }
    }
}

/// Ratio descending, then length ascending, then id.
pub fn rank(mut entries: Vec<Evaluation>, log: SearchLog) -> Result<SearchResult, OptimizeError> {
    if entries.is_empty() {
        return Err(OptimizeError::EmptyRanking);
    }
    entries.sort_by(|x, y| {
        y.report
            .ratio
            .total_cmp(&x.report.ratio)
            .then(x.length.total_cmp(&y.length))
            .then_with(|| x.candidate.id.cmp(&y.candidate.id))
    });
    Ok(SearchResult { ranked: entries, log })
}

/// Enumerates, evaluates and ranks the family, then re-checks the top three on a finer mesh.
pub fn grid_search(evaluator: &Evaluator, spec: &RoadFamilySpec) -> Result<SearchResult, OptimizeError> {
    let en = enumerate_candidates(evaluator.domain(), spec)?;
    let mut log = SearchLog {
        rejections: en.rejections,
        ..SearchLog::default()
    };
    let evaluated = evaluator.evaluate_all(en.candidates, &mut log);
    if evaluated.is_empty() {
        return Err(OptimizeError::NoFeasibleCandidate {
            considered: log.evaluations + log.rejections.len(),
            summary: format!("all {} evaluations failed", log.failures.len()),
        });
    }
    let mut result = rank(evaluated, log)?;
    evaluator.refine_top(&mut result, 3);
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSearchOptions {
    /// Move length: coordinate shift for interior vertices, arc length along the boundary otherwise.
    pub step: f64,
    pub iterations: usize,
}

/// Local coordinates of a network: perimeter fraction for boundary vertices, `(x, y)` otherwise.
pub fn vertex_params(domain: &DomainGeometry, net: &RoadNetwork) -> Vec<f64> {
    let per = domain.perimeter();
    net.vertices()
        .iter()
        .zip(net.boundary_flags())
        .flat_map(|(&p, &on_boundary)| {
            if on_boundary {
                vec![domain.boundary_parameter(p) / per]
            } else {
                vec![p.x, p.y]
            }
        })
        .collect()
}

fn moved(domain: &DomainGeometry, spec: &RoadFamilySpec, net: &RoadNetwork, v: usize, dir: usize, step: f64) -> Result<RoadNetwork, String> {
    let mut verts = net.vertices().to_vec();
    let p = verts[v];
    verts[v] = if net.boundary_flags()[v] {
        let sign = if dir == 0 { 1.0 } else { -1.0 };
        domain.boundary_point(domain.boundary_parameter(p) + sign * step)
    } else {
        p + [Point::new(step, 0.0), Point::new(-step, 0.0), Point::new(0.0, step), Point::new(0.0, -step)][dir]
    };
    let candidate = RoadNetwork::new(verts.clone(), net.edges().to_vec(), net.boundary_flags().to_vec())
        .map_err(|e| format!("invalid: {e}"))?;
    let length = candidate.total_length();
    if length > spec.budget {
        let c = candidate.centroid();
        let sigma = spec.budget / length;
        let tol = 1e-9 * domain.diameter();
        for (i, q) in verts.iter_mut().enumerate() {
            let fixed = spec.required_points.iter().any(|r| r.dist(net.vertices()[i]) <= tol);
            if !fixed {
                *q = c + (*q - c) * sigma;
            }
        }
    }
    let flags = verts.iter().map(|&q| domain.boundary_distance(q) <= 1e-9 * domain.diameter()).collect();
    RoadNetwork::new(verts, net.edges().to_vec(), flags).map_err(|e| format!("invalid: {e}"))
}

/// Best-improvement coordinate search from `seed`. Vertices on required points stay fixed.
pub fn local_search(
    evaluator: &Evaluator,
    spec: &RoadFamilySpec,
    seed: Candidate,
    options: LocalSearchOptions,
) -> Result<SearchResult, OptimizeError> {
    let domain = evaluator.domain();
    admissible(domain, spec, &seed.net).map_err(|r| OptimizeError::InvalidSpec(format!("seed {} is not admissible: {r}", seed.id)))?;
    let mut log = SearchLog::default();
    let mut all = evaluator.evaluate_all(vec![seed.clone()], &mut log);
    let Some(mut current) = all.first().cloned() else {
        let reason = log.failures.first().map_or_else(String::new, |f| f.reason.clone());
        return Err(OptimizeError::Evaluation { id: seed.id, message: reason });
    };
    log.accepted.push((current.candidate.id.clone(), current.report.ratio));
    let tol = 1e-9 * domain.diameter();
    for iter in 1..=options.iterations {
        let net = &current.candidate.net;
        let mut neighbors = Vec::new();
        for v in 0..net.vertex_count() {
            if spec.required_points.iter().any(|r| r.dist(net.vertices()[v]) <= tol) {
                continue;
            }
            let dirs = if net.boundary_flags()[v] { 2 } else { 4 };
            for dir in 0..dirs {
                let id = format!("ls{iter:03}-v{v}-{}", ["a", "b", "c", "d"][dir]);
                match moved(domain, spec, net, v, dir, options.step).and_then(|n| admissible(domain, spec, &n).map(|_| n)) {
                    Ok(n) => neighbors.push(Candidate {
                        id,
                        params: vertex_params(domain, &n),
                        net: n,
                    }),
                    Err(reason) => log.rejections.push(Rejection {
                        id,
                        params: Vec::new(),
                        reason,
                    }),
                }
            }
        }
        let evaluated = evaluator.evaluate_all(neighbors, &mut log);
        let best = evaluated
            .iter()
            .fold(None::<&Evaluation>, |b, e| match b {
                Some(b) if b.report.ratio >= e.report.ratio => Some(b),
                _ => Some(e),
            })
            .cloned();
        all.extend(evaluated);
        match best {
            Some(b) if b.report.ratio > current.report.ratio => {
                log.accepted.push((b.candidate.id.clone(), b.report.ratio));
                current = b;
            }
            _ => break,
        }
    }
    rank(all, log)
}
