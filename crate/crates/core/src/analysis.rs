//! Explicit constants of the coercivity and eigenvalue bounds, and the road
//! efficiency ratio `λ₁/γ₁`.

use thiserror::Error;

use crate::assembly::{assemble_field, assemble_trace_coupling, AssemblyError, CouplingParams, FemSystem};
use crate::meshing::{Mesh, MeshOrigin};
use crate::network::{ahlfors_upper_constant, AhlforsSampling, RoadNetwork};
use crate::spectral::{dirichlet_gamma, largest_generalized, EigenOptions, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("eigenvalues come from different meshes: {0}")]
    MeshMismatch(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, AnalysisError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalysisError::InvalidParameter { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, AnalysisError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalysisError::InvalidParameter { name, value })
    }
}

/// `1/γ₁` for the Dirichlet Laplacian on the mesh.
pub fn poincare_constant(mesh: &Mesh, tol: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 / dirichlet_gamma(mesh, 1.0, 1, tol)?[0])
}

/// Best constant in `∫_K v² ≤ C_T ∫_Ω |∇v|²` over field functions vanishing on
/// the boundary: the largest eigenvalue of the pair (road trace mass, stiffness).
pub fn trace_constant(mesh: &Mesh, tol: f64) -> Result<f64, AnalysisError> {
    let (stiff, _) = assemble_field(mesh)?;
    let t = assemble_trace_coupling(mesh).t_ff;
    let free: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !mesh.markers()[v].on_boundary())
        .collect();
    if free.is_empty() {
        return Err(AssemblyError::NoFreeDofs.into());
    }
    let a = stiff.restrict(&free, &free);
    let t = t.restrict(&free, &free);
    if t.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(largest_generalized(&t, &a, &EigenOptions::new(1, tol))?.eigenvalues()[0])
}

/// Trace constant from an assembled system (same value as [`trace_constant`]).
pub fn trace_constant_of(sys: &FemSystem, tol: f64) -> Result<f64, AnalysisError> {
    if sys.field_trace_mass().max_abs() == 0.0 {
        return Ok(0.0);
    }
    let opts = EigenOptions::new(1, tol);
    Ok(largest_generalized(sys.field_trace_mass(), sys.field_stiffness(), &opts)?.eigenvalues()[0])
}

/// Smallest `C` with `|B(x, y)| ≤ C ‖x‖_H ‖y‖_H` on the discrete space.
pub fn continuity_constant(sys: &FemSystem, tol: f64) -> Result<f64, AnalysisError> {
    let opts = EigenOptions::new(1, tol);
    Ok(largest_generalized(sys.b(), sys.hnorm(), &opts)?.eigenvalues()[0])
}

/// `(α − β)² + εα² ≥ ε/(1+ε)·β²`, allowing for rounding.
pub fn elementary_inequality_check(alpha: f64, beta: f64, eps: f64) -> bool {
    if !(eps >= 0.0) {
        return false;
    }
    let lhs = (alpha - beta).powi(2) + eps * alpha * alpha;
    let rhs = eps / (1.0 + eps) * beta * beta;
    let scale = (alpha * alpha + beta * beta) * (1.0 + eps);
    lhs - rhs >= -1e-12 * scale
}

/// `min(a/3, a/(3C_P), b, aμ/(a + 3C_Tν))`.
pub fn coercivity_constant(params: &CouplingParams, c_p: f64, c_t: f64) -> Result<f64, AnalysisError> {
    let a = positive("a", params.a)?;
    let b = positive("b", params.b)?;
    let mu = positive("mu", params.mu)?;
    let nu = positive("nu", params.nu)?;
    let c_p = positive("C_P", c_p)?;
    let c_t = nonnegative("C_T", c_t)?;
    Ok((a / 3.0)
        .min(a / (3.0 * c_p))
        .min(b)
        .min(a * mu / (a + 3.0 * c_t * nu)))
}

/// `τ(X) = aX² − (a + C_Pμ + C_Tν)X + C_Pμ`.
pub fn tau(a: f64, mu: f64, nu: f64, c_p: f64, c_t: f64, x: f64) -> f64 {
    a * x * x - (a + c_p * mu + c_t * nu) * x + c_p * mu
}

/// Sum of the magnitudes of the terms of `τ(x)`, the natural scale of its rounding error.
pub fn tau_scale(a: f64, mu: f64, nu: f64, c_p: f64, c_t: f64, x: f64) -> f64 {
    a * x * x + (a + c_p * mu + c_t * nu) * x.abs() + c_p * mu
}

/// Smaller root of `τ`, computed without cancellation.
pub fn alpha_root(a: f64, mu: f64, nu: f64, c_p: f64, c_t: f64) -> Result<f64, AnalysisError> {
    let a = positive("a", a)?;
    let mu = positive("mu", mu)?;
    let nu = positive("nu", nu)?;
    let c_p = positive("C_P", c_p)?;
    let c_t = nonnegative("C_T", c_t)?;
    let (p, t) = (c_p * mu, c_t * nu);
    let s = a + p + t;
    let disc = (a + t - p).powi(2) + 4.0 * t * p;
    let alpha = 2.0 * p / (s + disc.sqrt());
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(AnalysisError::InvalidAlpha(alpha))
    }
}

/// `c₀ = (a/C_P)·α`.
pub fn lambda1_lower_bound(a: f64, c_p: f64, alpha: f64) -> Result<f64, AnalysisError> {
    let a = positive("a", a)?;
    let c_p = positive("C_P", c_p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::InvalidAlpha(alpha));
    }
    Ok(a / c_p * alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsReport {
    pub c_p: f64,
    pub c_t: f64,
    pub lambda_k: f64,
    pub alpha: f64,
    pub c0: f64,
    pub c_coer: f64,
    /// Target edge length of the mesh the constants were computed on.
    pub h: Option<f64>,
    pub ahlfors_sampling: AhlforsSampling,
}

/// Discrete-optimal `C_P` and `C_T` on `mesh`, `Λ_K` by sampling, and the derived bounds.
pub fn compute_constants(
    mesh: &Mesh,
    net: &RoadNetwork,
    params: &CouplingParams,
    tol: f64,
    sampling: &AhlforsSampling,
) -> Result<ConstantsReport, AnalysisError> {
    let c_p = poincare_constant(mesh, tol)?;
    let c_t = trace_constant(mesh, tol)?;
    constants_from(c_p, c_t, mesh.origin().map(|o| o.h), net, params, sampling)
}

pub fn constants_from(
    c_p: f64,
    c_t: f64,
    h: Option<f64>,
    net: &RoadNetwork,
    params: &CouplingParams,
    sampling: &AhlforsSampling,
) -> Result<ConstantsReport, AnalysisError> {
    let alpha = alpha_root(params.a, params.mu, params.nu, c_p, c_t)?;
    Ok(ConstantsReport {
        c_p,
        c_t,
        lambda_k: ahlfors_upper_constant(net, sampling).lambda,
        alpha,
        c0: lambda1_lower_bound(params.a, c_p, alpha)?,
        c_coer: coercivity_constant(params, c_p, c_t)?,
        h,
        ahlfors_sampling: sampling.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Improves,
    Neutral,
    Slows,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Improves => "improves",
            Self::Neutral => "neutral",
            Self::Slows => "slows",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_BAND: f64 = 1e-3;

pub fn classify(ratio: f64, band: f64) -> Classification {
    if ratio > 1.0 + band {
        Classification::Improves
    } else if ratio < 1.0 - band {
        Classification::Slows
    } else {
        Classification::Neutral
    }
}

/// Identifies the mesh an eigenvalue was computed on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshTag {
    pub fingerprint: u64,
    pub origin: Option<MeshOrigin>,
}

impl MeshTag {
    pub fn of(mesh: &Mesh) -> Self {
        Self {
            fingerprint: mesh.fingerprint(),
            origin: mesh.origin(),
        }
    }

    /// Same mesh, or meshes generated from the same domain at the same resolution.
    pub fn compatible(&self, other: &MeshTag) -> bool {
        self.fingerprint == other.fingerprint
            || matches!((self.origin, other.origin), (Some(a), Some(b))
                if a.domain == b.domain && a.h.to_bits() == b.h.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub road_id: String,
    pub lambda1: f64,
    pub gamma1: f64,
    pub ratio: f64,
    pub classification: Classification,
    pub constants: ConstantsReport,
    /// Whether `c₀ ≤ λ₁` held.
    pub lower_bound_holds: bool,
}

pub fn efficiency_report(
    road_id: impl Into<String>,
    lambda1: (f64, MeshTag),
    gamma1: (f64, MeshTag),
    constants: ConstantsReport,
    band: f64,
) -> Result<EfficiencyReport, AnalysisError> {
    if !lambda1.1.compatible(&gamma1.1) {
        return Err(AnalysisError::MeshMismatch(format!(
            "lambda1 mesh {:?} vs gamma1 mesh {:?}",
            lambda1.1, gamma1.1
        )));
    }
    let l1 = positive("lambda1", lambda1.0)?;
    let g1 = positive("gamma1", gamma1.0)?;
    nonnegative("band", band)?;
    let ratio = l1 / g1;
    Ok(EfficiencyReport {
        road_id: road_id.into(),
        lambda1: l1,
        gamma1: g1,
        ratio,
        classification: classify(ratio, band),
        lower_bound_holds: constants.c0 <= l1,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coercivity_formula() {
        let p = CouplingParams::new(3.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(coercivity_constant(&p, 1.0, 1.0).unwrap(), 0.5);
        let tiny_b = CouplingParams::new(3.0, 1e-9, 1.0, 1.0).unwrap();
        assert_eq!(coercivity_constant(&tiny_b, 1.0, 1.0).unwrap(), 1e-9);
        assert!(coercivity_constant(&p, -1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_examples() {
        let alpha = alpha_root(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((alpha - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let factored = alpha_root(2.0, 1.0, 1.0, 0.5, 0.0).unwrap();
        assert!((factored - 0.25).abs() < 1e-15);
        let tiny = alpha_root(1.0, 1e-12, 1.0, 1.0, 1.0).unwrap();
        assert!(tiny < 1e-11);
        assert!(matches!(
            alpha_root(1.0, 2.0, 1.0, 1.0, 0.0),
            Err(AnalysisError::InvalidAlpha(_))
        ));
        let c0 = lambda1_lower_bound(1.0, 1.0 / (2.0 * std::f64::consts::PI.powi(2)), 0.381966).unwrap();
        assert!((c0 - 7.5397).abs() < 1e-3);
        assert!(lambda1_lower_bound(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn elementary_inequality_cases() {
        assert!(elementary_inequality_check(1.0, 1.0, 0.0));
        assert!(elementary_inequality_check(0.0, 2.0, 0.7));
        // Equality at α = β/(1+ε).
        assert!(elementary_inequality_check(1.0, 1.5, 0.5));
    }

    #[test]
    fn classification_band() {
        assert_eq!(classify(1.01, 1e-3), Classification::Improves);
        assert_eq!(classify(1.0005, 1e-3), Classification::Neutral);
        assert_eq!(classify(0.9, 1e-3), Classification::Slows);
    }
}
