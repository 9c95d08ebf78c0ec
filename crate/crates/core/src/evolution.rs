//! Time evolution of the coupled system: exact eigen-expansion and backward Euler.

use thiserror::Error;

use crate::assembly::FemSystem;
use crate::cholesky::{EnvelopeCholesky, FactorError};
use crate::geometry::Point;
use crate::meshing::Mesh;
use crate::sparse::{dot, CsrMatrix};
use crate::spectral::Spectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("factorization failed: {0}")]
    Factorization(#[from] FactorError),
    #[error("decay fit needs at least 10 positive samples in the window, found {found}")]
    TooFewSamples { found: usize },
}

/// Free-dof coefficients at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub values: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, time: 0.0 }
    }

    /// Samples a field function and a road function at the free vertices.
    pub fn from_functions(
        sys: &FemSystem,
        mesh: &Mesh,
        field: impl Fn(Point) -> f64,
        road: impl Fn(Point) -> f64,
    ) -> Self {
        let pts = mesh.vertices();
        let values = sys
            .field_vertices()
            .iter()
            .map(|&v| field(pts[v]))
            .chain(sys.road_vertices().iter().map(|&v| road(pts[v])))
            .collect();
        Self::new(values)
    }
}

/// `sin²(πx)·sin²(πy)` rescaled to the bounding box of the domain, zero on the road.
pub fn default_bump(mesh: &Mesh) -> impl Fn(Point) -> f64 {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in mesh.vertices() {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    move |p: Point| {
        let sx = (std::f64::consts::PI * (p.x - lo.x) / (hi.x - lo.x)).sin();
        let sy = (std::f64::consts::PI * (p.y - lo.y) / (hi.y - lo.y)).sin();
        sx * sx * sy * sy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub l_norms: Vec<f64>,
    /// `(step, state)` every `snapshot_every` steps, including the initial state.
    pub snapshots: Vec<(usize, State)>,
}

fn check_len(x: &[f64], n: usize) -> Result<(), EvolutionError> {
    if x.len() != n {
        return Err(EvolutionError::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(())
}

/// `c_n = ⟨e_n, s0⟩_L`.
pub fn project_initial(
    sys: &FemSystem,
    spec: &Spectrum,
    s0: &State,
) -> Result<Vec<f64>, EvolutionError> {
    check_len(&s0.values, sys.dim())?;
    let ls = sys.lmass().mul_vec(&s0.values);
    spec.eigenvectors()
        .iter()
        .map(|e| {
            check_len(e, sys.dim())?;
            Ok(dot(e, &ls))
        })
        .collect()
}

/// `Σ c_n e^{−λ_n t} e_n`.
pub fn spectral_propagate(spec: &Spectrum, c0: &[f64], t: f64) -> Result<State, EvolutionError> {
    if !(t >= 0.0) {
        return Err(EvolutionError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    check_len(c0, spec.len())?;
    let n = spec.eigenvectors().first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for ((&c, &lambda), e) in c0.iter().zip(spec.eigenvalues()).zip(spec.eigenvectors()) {
        crate::sparse::axpy(c * (-lambda * t).exp(), e, &mut out);
    }
    Ok(State {
        values: out,
        time: t,
    })
}

/// Number of steps of size `dt` needed to reach `t_end`, rounding to the nearest
/// integer when `t_end/dt` is within `1e-9` of one.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    let r = t_end / dt;
    if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

/// Backward Euler for `L s' + B s = 0`: `(L + dt·B) s^{j+1} = L s^j`.
pub fn implicit_euler_pair(
    b: &CsrMatrix,
    l: &CsrMatrix,
    s0: &State,
    dt: f64,
    t_end: f64,
    snapshot_every: usize,
) -> Result<EvolutionTrace, EvolutionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvolutionError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt) {
        return Err(EvolutionError::InvalidArgument(format!(
            "final time {t_end} is shorter than one step {dt}"
        )));
    }
    check_len(&s0.values, b.nrows())?;
    let factor = EnvelopeCholesky::factor(&CsrMatrix::linear_combination(&[(1.0, l), (dt, b)]))?;
    let steps = step_count(dt, t_end);
    let mut s = s0.values.clone();
    let l_norm = |x: &[f64]| l.quad_form(x).max(0.0).sqrt();
    let mut trace = EvolutionTrace {
        times: Vec::with_capacity(steps + 1),
        l_norms: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
    };
    trace.times.push(s0.time);
    trace.l_norms.push(l_norm(&s));
    if snapshot_every > 0 {
        trace.snapshots.push((0, s0.clone()));
    }
    for j in 1..=steps {
        s = factor.solve(&l.mul_vec(&s));
        let t = s0.time + j as f64 * dt;
        trace.times.push(t);
        trace.l_norms.push(l_norm(&s));
        if snapshot_every > 0 && j % snapshot_every == 0 {
            trace.snapshots.push((
                j,
                State {
                    values: s.clone(),
                    time: t,
                },
            ));
        }
    }
    Ok(trace)
}

pub fn implicit_euler(
    sys: &FemSystem,
    s0: &State,
    dt: f64,
    t_end: f64,
    snapshot_every: usize,
) -> Result<EvolutionTrace, EvolutionError> {
    implicit_euler_pair(sys.b(), sys.lmass(), s0, dt, t_end, snapshot_every)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Negated least-squares slope of `ln ‖s‖_L` against time.
    pub rate: f64,
    /// Root-mean-square deviation of `ln ‖s‖_L` from the fitted line.
    pub residual: f64,
    pub samples: usize,
}

/// Fits `‖s(t)‖_L ≈ C e^{−rate·t}` over the trailing `window` fraction of the trace.
/// Samples at or below `1e-300` end the window early.
pub fn decay_rate_fit(trace: &EvolutionTrace, window: f64) -> Result<DecayFit, EvolutionError> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(EvolutionError::InvalidArgument(format!(
            "window must lie in (0, 1], got {window}"
        )));
    }
    let n = trace.times.len();
    let usable = trace
        .l_norms
        .iter()
        .position(|&v| !(v > 1e-300))
        .unwrap_or(n);
    let start = n - ((window * n as f64).ceil() as usize).min(n);
    let (t, y): (Vec<f64>, Vec<f64>) = (start..usable)
        .map(|i| (trace.times[i], trace.l_norms[i].ln()))
        .unzip();
    if t.len() < 10 {
        return Err(EvolutionError::TooFewSamples { found: t.len() });
    }
    let m = t.len() as f64;
    let (tm, ym) = (t.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = t.iter().map(|ti| (ti - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - tm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let ss: f64 = t
        .iter()
        .zip(&y)
        .map(|(ti, yi)| (yi - (ym + slope * (ti - tm))).powi(2))
        .sum();
    Ok(DecayFit {
        rate: -slope,
        residual: (ss / m).sqrt(),
        samples: t.len(),
    })
}
