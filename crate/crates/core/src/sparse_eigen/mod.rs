//! Sparse leading eigenvectors of a symmetric matrix.
//!
//! Three solvers share one result type:
//!
//! * [`qtpm`]: power iteration projected onto the unit sphere intersected with
//!   an `ℓq` ball; `q = 0` is the classical truncated power method (keep the
//!   `k` largest magnitudes).
//! * [`pmd_rank_one`]: rank-one penalized matrix decomposition with an `ℓ1`
//!   bound, via soft-thresholding.
//! * [`spca_leading`]: regression-style sparse PCA with an elastic-net step
//!   solved by cyclic coordinate descent.
//!
//! Further components are obtained by [`deflate`]-ing the matrix and solving
//! again ([`top_m_eigenvectors`]).

mod pmd;
mod power;
mod qtpm;
mod spca;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};
use crate::linalg::{canonical_sign, min_eigenvalue, symmetrize};

pub use pmd::{l1_constrained_direction, pmd_rank_one};
pub use power::{power_init, PowerInit};
pub use qtpm::{default_qtpm_init, find_truncation_level, lq_norm_pow, qtpm, top_k_indices};
pub use spca::{elastic_net_objective, elastic_net_step, spca_leading};

/// Starting vector for a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Solver default: an SPCA pass for qTPM, power iteration for PMD and SPCA.
    Auto,
    PowerMethod,
    Spca {
        delta1: f64,
        delta2: f64,
    },
    Vector(Vec<f64>),
}

/// Diagonal shift applied before iterating. Eigenvectors are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    None,
    Fixed(f64),
    /// `max(0, −λ_min)·(1 + 1e-3)`, making the shifted matrix PSD.
    Auto,
}

/// Default SPCA penalties used when an SPCA pass seeds qTPM.
pub const SPCA_INIT_DELTA1: f64 = 1e-4;
pub const SPCA_INIT_DELTA2: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// `q ∈ [0, 1]`.
    pub q: f64,
    /// `R_q` for `q > 0`; the support size `k` for `q = 0`.
    pub radius: f64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub init: InitStrategy,
    pub shift: Shift,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            q: 0.0,
            radius: 10.0,
            max_iters: 1000,
            conv_tol: 1e-7,
            init: InitStrategy::Auto,
            shift: Shift::None,
        }
    }
}

impl SolverOptions {
    /// Truncated power method keeping `k` entries.
    pub fn tpower(k: usize) -> Self {
        Self {
            radius: k as f64,
            ..Self::default()
        }
    }

    pub fn lq(q: f64, radius: f64) -> Self {
        Self {
            q,
            radius,
            ..Self::default()
        }
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_shift(mut self, shift: Shift) -> Self {
        self.shift = shift;
        self
    }

    /// Support size for `q = 0`.
    pub(crate) fn validated_k(&self, d: usize) -> Result<usize> {
        let k = self.radius;
        if k.fract() != 0.0 || k < 1.0 || k > d as f64 {
            return Err(CocaError::InvalidRadius(format!(
                "q = 0 needs an integer k in 1..={d}, got {k}"
            )));
        }
        Ok(k as usize)
    }

    pub(crate) fn validate(&self, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(CocaError::InvalidRadius(format!(
                "q must lie in [0, 1], got {}",
                self.q
            )));
        }
        if self.q == 0.0 {
            self.validated_k(d)?;
        } else if !(self.radius > 1.0) {
            return Err(CocaError::InvalidRadius(format!(
                "0 < q <= 1 needs R_q > 1, got {}",
                self.radius
            )));
        }
        if self.max_iters == 0 {
            return Err(CocaError::InvalidInput("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseEigenResult {
    pub vector: Vec<f64>,
    pub support: Vec<usize>,
    pub iterations: usize,
    /// `vᵀΓv` on the unshifted input.
    pub objective: f64,
    pub converged: bool,
    /// Objective after each iteration.
    pub trace: Vec<f64>,
}

impl SparseEigenResult {
    pub(crate) fn finish(
        gamma: &DMatrix<f64>,
        mut v: DVector<f64>,
        iterations: usize,
        converged: bool,
        trace: Vec<f64>,
    ) -> Self {
        canonical_sign(&mut v);
        let support = support_of(&v);
        let objective = quadratic_form(gamma, &v);
        Self {
            vector: v.as_slice().to_vec(),
            support,
            iterations,
            objective,
            converged,
            trace,
        }
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.vector)
    }
}

pub(crate) fn quadratic_form(gamma: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(gamma * v))
}

pub(crate) fn support_of(v: &DVector<f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn check_square(gamma: &DMatrix<f64>) -> Result<usize> {
    if !gamma.is_square() || gamma.nrows() == 0 {
        return Err(CocaError::InvalidDimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    if !crate::linalg::is_symmetric(gamma, 1e-10) {
        return Err(CocaError::InvalidInput("matrix must be symmetric".into()));
    }
    Ok(gamma.nrows())
}

/// `gamma + c·I` for the requested shift, plus `c`.
pub(crate) fn apply_shift(gamma: &DMatrix<f64>, shift: Shift) -> Result<(DMatrix<f64>, f64)> {
    let c = match shift {
        Shift::None => 0.0,
        Shift::Fixed(c) if c >= 0.0 && c.is_finite() => c,
        Shift::Fixed(c) => {
            return Err(CocaError::InvalidInput(format!(
                "shift must be nonnegative, got {c}"
            )))
        }
        Shift::Auto => (-min_eigenvalue(gamma)?).max(0.0) * (1.0 + 1e-3),
    };
    let mut shifted = gamma.clone();
    if c > 0.0 {
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += c;
        }
    }
    Ok((shifted, c))
}

pub(crate) fn user_vector(v: &[f64], d: usize) -> Result<DVector<f64>> {
    if v.len() != d {
        return Err(CocaError::InvalidVector(format!(
            "initial vector has length {}, expected {d}",
            v.len()
        )));
    }
    let v = DVector::from_column_slice(v);
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(CocaError::InvalidVector(
            "initial vector must be nonzero and finite".into(),
        ));
    }
    Ok(v / norm)
}

/// `TRC(v, J)`: keep entries indexed by `J`, zero the rest.
pub fn truncate(v: &DVector<f64>, keep: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for &j in keep {
        out[j] = v[j];
    }
    out
}

/// `(I − vvᵀ) Γ (I − vvᵀ)`.
pub fn deflate(gamma: &DMatrix<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_square(gamma)?;
    if v.len() != gamma.nrows() {
        return Err(CocaError::InvalidVector(format!(
            "vector length {} does not match matrix size {}",
            v.len(),
            gamma.nrows()
        )));
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(CocaError::InvalidVector(format!(
            "deflation needs a unit vector, norm is {}",
            v.norm()
        )));
    }
    let gv = gamma * v;
    let curvature = v.dot(&gv);
    let out = gamma - &gv * v.transpose() - v * gv.transpose() + (v * v.transpose()) * curvature;
    Ok(symmetrize(&out))
}

/// One sparse eigenvector problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SparseMethod {
    Qtpm {
        opts: SolverOptions,
    },
    Pmd {
        delta: f64,
        opts: SolverOptions,
    },
    Spca {
        delta1: f64,
        delta2: f64,
        opts: SolverOptions,
    },
}

impl SparseMethod {
    pub fn solve(&self, gamma: &DMatrix<f64>) -> Result<SparseEigenResult> {
        match self {
            SparseMethod::Qtpm { opts } => qtpm(gamma, opts),
            SparseMethod::Pmd { delta, opts } => pmd_rank_one(gamma, *delta, opts),
            SparseMethod::Spca { delta1, delta2, opts } => spca_leading(gamma, *delta1, *delta2, opts),
        }
    }
}

/// First `methods.len()` sparse eigenvectors by repeated deflation; component
/// `i` is solved on the matrix deflated by components `0..i`.
pub fn top_m_eigenvectors(gamma: &DMatrix<f64>, methods: &[SparseMethod]) -> Result<Vec<SparseEigenResult>> {
    let d = check_square(gamma)?;
    if methods.len() > d {
        return Err(CocaError::InvalidDimension(format!(
            "asked for {} components of a {d}-dimensional matrix",
            methods.len()
        )));
    }
    let mut current = gamma.clone();
    let mut out = Vec::with_capacity(methods.len());
    for (i, method) in methods.iter().enumerate() {
        let res = method.solve(&current)?;
        if i + 1 < methods.len() {
            current = deflate(&current, &res.as_dvector())?;
        }
        out.push(res);
    }
    Ok(out)
}
