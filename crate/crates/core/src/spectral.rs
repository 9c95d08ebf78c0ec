//! Generalized symmetric eigenproblems `A x = λ M x` with `M` positive definite.
//!
//! The sparse solver is a shift-invert block subspace iteration with a
//! Rayleigh–Ritz step at every sweep. Dense reductions serve as test oracles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{assemble_field, AssemblyError, FemSystem};
use crate::cholesky::{EnvelopeCholesky, FactorError};
use crate::meshing::Mesh;
use crate::sparse::{norm2, CsrMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("factorization failed: {0}")]
    Factorization(#[from] FactorError),
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Relative gap below which neighbouring eigenvalues form a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    pub k: usize,
    /// Bound on `‖A e − λ M e‖ / ‖λ M e‖` for every returned pair.
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(k: usize, tol: f64) -> Self {
        Self {
            k,
            tol,
            max_iterations: 1000,
            seed: 0x5eed,
        }
    }
}

/// Eigenpairs in ascending order, eigenvectors orthonormal in the `M` inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

impl Spectrum {
    /// Wraps raw eigenpairs without re-checking them.
    pub fn from_parts(values: Vec<f64>, vectors: Vec<Vec<f64>>, residuals: Vec<f64>) -> Self {
        assert_eq!(values.len(), vectors.len());
        assert_eq!(values.len(), residuals.len());
        Self {
            values,
            vectors,
            residuals,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn truncated(&self, k: usize) -> Spectrum {
        let k = k.min(self.len());
        Spectrum::from_parts(
            self.values[..k].to_vec(),
            self.vectors[..k].to_vec(),
            self.residuals[..k].to_vec(),
        )
    }

    /// Index ranges of eigenvalues within relative [`CLUSTER_TOL`] of their neighbour.
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        clusters_of(&self.values, CLUSTER_TOL)
    }

    /// Size of the cluster containing the first eigenvalue.
    pub fn first_cluster_size(&self) -> usize {
        self.clusters().first().map_or(0, |c| c.len())
    }
}

pub fn clusters_of(values: &[f64], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (b - a).abs() > rel_tol * a.abs().max(b.abs())
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Flips `x` so that its largest-magnitude entry (first on ties) is positive.
fn normalize_sign(x: &mut [f64]) {
    let mut best = (0.0, 0);
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best.0 {
            best = (v.abs(), i);
        }
    }
    if x.get(best.1).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Orthonormalizes the columns of `y` in the `m` inner product, dropping directions
/// whose Gram eigenvalue falls below `1e-13` of the largest.
fn m_orthonormalize(y: &DMatrix<f64>, m: &CsrMatrix) -> DMatrix<f64> {
    let mut q = y.clone();
    for _pass in 0..2 {
        let my = apply_columns(m, &q);
        let g = q.transpose() * &my;
        let g = (&g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(g);
        let dmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > 1e-13 * dmax && dmax > 0.0)
            .collect();
        let mut t = DMatrix::zeros(q.ncols(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = 1.0 / eig.eigenvalues[i].sqrt();
            t.set_column(c, &(eig.eigenvectors.column(i) * s));
        }
        q = &q * t;
    }
    q
}

fn apply_columns(a: &CsrMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let col: Vec<f64> = x.column(c).iter().copied().collect();
        out.set_column(c, &DVector::from_vec(a.mul_vec(&col)));
    }
    out
}

fn random_block(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
}

/// Extremal Ritz pairs of `(a, m)` in the span of `y`, sorted ascending or descending.
fn rayleigh_ritz(
    y: &DMatrix<f64>,
    a: &CsrMatrix,
    m: &CsrMatrix,
    largest: bool,
) -> (Vec<f64>, DMatrix<f64>) {
    let q = m_orthonormalize(y, m);
    let aq = apply_columns(a, &q);
    let h = q.transpose() * aq;
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if largest {
        order.reverse();
    }
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut w = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (c, &i) in order.iter().enumerate() {
        w.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, q * w)
}

fn relative_residual(a: &CsrMatrix, m: &CsrMatrix, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lambda * q).collect();
    let denom = if lambda != 0.0 {
        (lambda * norm2(&mx)).abs()
    } else {
        norm2(&mx)
    };
    if denom == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / denom
    }
}

/// Block subspace iteration `Y ← op(X)` followed by Rayleigh–Ritz on `(a, m)`.
fn subspace_iteration(
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    a: &CsrMatrix,
    m: &CsrMatrix,
    opts: &EigenOptions,
    largest: bool,
) -> Result<Spectrum, SpectralError> {
    let n = a.nrows();
    let k = opts.k;
    let block = n.min((2 * k).max(k + 8));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = random_block(n, block, &mut rng);
    let mut best_residual = f64::INFINITY;
    for _iter in 0..opts.max_iterations {
        let mut y = DMatrix::zeros(n, x.ncols());
        for c in 0..x.ncols() {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            y.set_column(c, &DVector::from_vec(op(&col)));
        }
        let (values, mut ritz) = rayleigh_ritz(&y, a, m, largest);
        if ritz.ncols() >= k {
            let mut residuals = Vec::with_capacity(k);
            let mut vectors = Vec::with_capacity(k);
            for (c, &lambda) in values.iter().enumerate().take(k) {
                let mut v: Vec<f64> = ritz.column(c).iter().copied().collect();
                normalize_sign(&mut v);
                residuals.push(relative_residual(a, m, lambda, &v));
                vectors.push(v);
            }
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            best_residual = best_residual.min(worst);
            if worst <= opts.tol {
                return Ok(Spectrum::from_parts(values[..k].to_vec(), vectors, residuals));
            }
        }
        if ritz.ncols() < block {
            let extra = random_block(n, block - ritz.ncols(), &mut rng);
            let cols = ritz.ncols();
            ritz = ritz.resize_horizontally(block, 0.0);
            for c in 0..extra.ncols() {
                ritz.set_column(cols + c, &extra.column(c));
            }
        }
        x = ritz;
    }
    Err(SpectralError::NoConvergence {
        iterations: opts.max_iterations,
        best_residual,
    })
}

fn check_pair(a: &CsrMatrix, m: &CsrMatrix, k: usize, tol: f64) -> Result<(), SpectralError> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(SpectralError::InvalidArgument("matrix shapes differ".into()));
    }
    if k == 0 || k > n {
        return Err(SpectralError::InvalidArgument(format!(
            "requested {k} eigenpairs of a {n}-dimensional problem"
        )));
    }
    if !(tol > 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// The `k` smallest eigenpairs of `a x = λ m x` for symmetric positive definite `a`, `m`.
pub fn smallest_generalized(
    a: &CsrMatrix,
    m: &CsrMatrix,
    opts: &EigenOptions,
) -> Result<Spectrum, SpectralError> {
    check_pair(a, m, opts.k, opts.tol)?;
    let factor = match EnvelopeCholesky::factor(a) {
        Ok(f) => f,
        Err(_) => {
            let trace_a: f64 = a.diagonal().iter().sum();
            let trace_m: f64 = m.diagonal().iter().sum();
            let sigma = -1e-8 * trace_a / trace_m;
            EnvelopeCholesky::factor(&CsrMatrix::linear_combination(&[(1.0, a), (-sigma, m)]))?
        }
    };
    let op = |x: &[f64]| factor.solve(&m.mul_vec(x));
    subspace_iteration(&op, a, m, opts, false)
}

/// The `k` largest eigenpairs of `q x = θ p x` for positive definite `p` and
/// symmetric positive semidefinite `q`.
///
/// The top of a discretized spectrum is tightly clustered, so the iteration runs
/// in shift-invert mode about a shift `σ` just above the largest eigenvalue, where
/// `σp − q` is positive definite.
pub fn largest_generalized(
    q: &CsrMatrix,
    p: &CsrMatrix,
    opts: &EigenOptions,
) -> Result<Spectrum, SpectralError> {
    check_pair(q, p, opts.k, opts.tol)?;
    let p_factor = EnvelopeCholesky::factor(p)?;
    let estimate = power_estimate(q, p, &p_factor, opts.seed, 60);
    let shifted = (estimate > 0.0)
        .then(|| {
            let mut delta = 1e-3;
            for _ in 0..40 {
                let sigma = estimate * (1.0 + delta);
                if let Ok(f) = EnvelopeCholesky::factor(&CsrMatrix::linear_combination(&[(sigma, p), (-1.0, q)])) {
                    return Some(f);
                }
                delta *= 4.0;
            }
            None
        })
        .flatten();
    let mut spec = match shifted {
        Some(f) => subspace_iteration(&|x: &[f64]| f.solve(&p.mul_vec(x)), q, p, opts, true)?,
        None => subspace_iteration(&|x: &[f64]| p_factor.solve(&q.mul_vec(x)), q, p, opts, true)?,
    };
    // The eigenvectors are normalized in `p`.
    spec.values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(spec)
}

/// Rayleigh quotient of `(q, p)` after `steps` power iterations with `p⁻¹q`; a lower
/// estimate of the largest eigenvalue.
fn power_estimate(q: &CsrMatrix, p: &CsrMatrix, p_factor: &EnvelopeCholesky, seed: u64, steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut x: Vec<f64> = (0..q.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut theta = 0.0;
    for _ in 0..steps {
        let y = p_factor.solve(&q.mul_vec(&x));
        let scale = norm2(&y);
        if scale == 0.0 || !scale.is_finite() {
            return 0.0;
        }
        x = y.iter().map(|v| v / scale).collect();
        theta = q.quad_form(&x) / p.quad_form(&x);
    }
    theta
}

pub fn smallest_eigenpairs(
    sys: &FemSystem,
    k: usize,
    tol: f64,
) -> Result<Spectrum, SpectralError> {
    smallest_generalized(sys.b(), sys.lmass(), &EigenOptions::new(k, tol))
}

pub fn smallest_eigenpairs_with(
    sys: &FemSystem,
    opts: &EigenOptions,
) -> Result<Spectrum, SpectralError> {
    smallest_generalized(sys.b(), sys.lmass(), opts)
}

/// `(a·A, M)` over vertices off the boundary.
pub fn dirichlet_pencil(mesh: &Mesh, a: f64) -> Result<(CsrMatrix, CsrMatrix), SpectralError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(AssemblyError::InvalidParameter { name: "a", value: a }.into());
    }
    let (stiff, mass) = assemble_field(mesh)?;
    let free: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !mesh.markers()[v].on_boundary())
        .collect();
    if free.is_empty() {
        return Err(AssemblyError::NoFreeDofs.into());
    }
    Ok((
        stiff.restrict(&free, &free).scaled(a),
        mass.restrict(&free, &free),
    ))
}

/// The `k` smallest Dirichlet eigenvalues of `−aΔ` on the mesh, ignoring any road.
pub fn dirichlet_gamma(mesh: &Mesh, a: f64, k: usize, tol: f64) -> Result<Vec<f64>, SpectralError> {
    let (stiff, mass) = dirichlet_pencil(mesh, a)?;
    Ok(smallest_generalized(&stiff, &mass, &EigenOptions::new(k, tol))?
        .eigenvalues()
        .to_vec())
}

pub const DENSE_CAP: usize = 400;

/// Full spectrum of `a x = λ m x` by Cholesky reduction to a standard problem.
pub fn dense_generalized(
    a: &CsrMatrix,
    m: &CsrMatrix,
    cap: usize,
) -> Result<Spectrum, SpectralError> {
    let n = a.nrows();
    if n > cap {
        return Err(SpectralError::CapExceeded { dim: n, cap });
    }
    check_pair(a, m, n.max(1), 1.0)?;
    let chol = nalgebra::Cholesky::new(m.to_dense()).ok_or(SpectralError::Factorization(
        FactorError::NotPositiveDefinite { row: 0, pivot: 0.0 },
    ))?;
    let c = chol.l();
    let c_inv = c
        .clone()
        .try_inverse()
        .ok_or_else(|| SpectralError::InvalidArgument("singular mass factor".into()))?;
    let reduced = &c_inv * a.to_dense() * c_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let back = c_inv.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for &i in &order {
        let lambda = eig.eigenvalues[i];
        let x = &back * eig.eigenvectors.column(i);
        let mut v: Vec<f64> = x.iter().copied().collect();
        normalize_sign(&mut v);
        residuals.push(relative_residual(a, m, lambda, &v));
        values.push(lambda);
        vectors.push(v);
    }
    Ok(Spectrum::from_parts(values, vectors, residuals))
}

pub fn dense_reference_eigen(sys: &FemSystem) -> Result<Spectrum, SpectralError> {
    dense_generalized(sys.b(), sys.lmass(), DENSE_CAP)
}

/// Deviations of the Gram matrices of a spectrum from their ideal values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthonormalityReport {
    /// `max |⟨e_i, e_j⟩_L − δ_ij|`.
    pub l_gram: f64,
    /// `max |B(e_i, e_j) − λ_i δ_ij|`.
    pub b_gram: f64,
    /// `max |B(e_i, e_j) − λ_i δ_ij| / max(λ_i, λ_j)`.
    pub b_gram_relative: f64,
}

pub fn check_orthonormality_pair(spec: &Spectrum, a: &CsrMatrix, m: &CsrMatrix) -> OrthonormalityReport {
    let mut r = OrthonormalityReport {
        l_gram: 0.0,
        b_gram: 0.0,
        b_gram_relative: 0.0,
    };
    let mv: Vec<Vec<f64>> = spec.vectors.iter().map(|v| m.mul_vec(v)).collect();
    let av: Vec<Vec<f64>> = spec.vectors.iter().map(|v| a.mul_vec(v)).collect();
    for i in 0..spec.len() {
        for j in 0..spec.len() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let gl = crate::sparse::dot(&spec.vectors[i], &mv[j]);
            let gb = crate::sparse::dot(&spec.vectors[i], &av[j]);
            r.l_gram = r.l_gram.max((gl - delta).abs());
            let dev = (gb - delta * spec.values[i]).abs();
            r.b_gram = r.b_gram.max(dev);
            let scale = spec.values[i].abs().max(spec.values[j].abs());
            r.b_gram_relative = r.b_gram_relative.max(dev / scale);
        }
    }
    r
}

pub fn check_orthonormality(spec: &Spectrum, sys: &FemSystem) -> OrthonormalityReport {
    check_orthonormality_pair(spec, sys.b(), sys.lmass())
}

/// Largest `M`-norm difference between matching eigenvectors after aligning each
/// cluster of `reference` by an `M`-orthogonal Procrustes rotation. Clusters
/// that extend past the end of `other` are compared as far as they go.
pub fn aligned_eigenvector_distance(reference: &Spectrum, other: &Spectrum, m: &CsrMatrix) -> f64 {
    let k = reference.len().min(other.len());
    let mut worst = 0.0f64;
    for cluster in clusters_of(&reference.values[..k], CLUSTER_TOL) {
        let idx: Vec<usize> = cluster.collect();
        let c = idx.len();
        // C = Oᵀ M R, the cross-Gram of the two bases.
        let mut cross = DMatrix::zeros(c, c);
        let mr: Vec<Vec<f64>> = idx.iter().map(|&j| m.mul_vec(&reference.vectors[j])).collect();
        for (a, &i) in idx.iter().enumerate() {
            for b in 0..c {
                cross[(a, b)] = crate::sparse::dot(&other.vectors[i], &mr[b]);
            }
        }
        let svd = cross.svd(true, true);
        let rot = svd.u.unwrap() * svd.v_t.unwrap();
        for (b, &j) in idx.iter().enumerate() {
            let mut diff = reference.vectors[j].clone();
            for (a, &i) in idx.iter().enumerate() {
                crate::sparse::axpy(-rot[(a, b)], &other.vectors[i], &mut diff);
            }
            worst = worst.max(m.quad_form(&diff).max(0.0).sqrt());
        }
    }
    worst
}
