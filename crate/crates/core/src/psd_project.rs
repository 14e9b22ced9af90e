//! Nearest positive-semidefinite matrix under the elementwise max norm.
//!
//! Solves `min_{M ⪰ 0} ‖R − M‖max` by bisection on the distance `t`. Each
//! step asks whether the PSD cone meets the box `{M : |Mⱼₖ − Rⱼₖ| ≤ t}`, which
//! Dykstra's alternating projections answer. Every feasible point found lowers
//! the upper bracket to its actual distance; the lower bracket is raised by
//! infeasible steps and by dual certificates `t* ≥ −⟨Y, R⟩ / ‖Y‖₁` for PSD `Y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};
use crate::linalg::{max_norm_distance, min_eigenvalue, sym_eigen, symmetrize};
use crate::rank_stats::{
    scale_by_stds, CorrelationEstimate, CorrelationKind, CovarianceEstimate, CovarianceKind, MarginalMoments,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdOptions {
    pub eig_tol: f64,
    pub dist_tol: f64,
    /// Bisection steps.
    pub max_iters: usize,
    /// Dykstra iterations per feasibility test.
    pub inner_cap: usize,
    /// Inner iterations without gap improvement before declaring infeasibility.
    pub stall_window: usize,
}

impl Default for PsdOptions {
    fn default() -> Self {
        Self {
            eig_tol: 1e-8,
            dist_tol: 1e-6,
            max_iters: 200,
            inner_cap: 2000,
            stall_window: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdProjectionResult {
    pub matrix: DMatrix<f64>,
    pub achieved_distance: f64,
    pub min_eigenvalue: f64,
    /// Bisection steps taken.
    pub iterations: usize,
    pub converged: bool,
    /// Largest lower bound on the optimum backed by a dual certificate.
    pub certified_lower_bound: f64,
    /// Bracket after initialisation and after every bisection step.
    pub trace: Vec<Bracket>,
}

/// Zero out the negative part of the spectrum.
pub fn clip_eigenvalues(input: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(input)?;
    Ok(reconstruct_clipped(&eig.values, &eig.vectors))
}

fn reconstruct_clipped(values: &DVector<f64>, vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let d = values.len();
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let w = lambda.max(0.0);
        scaled.column_mut(j).scale_mut(w);
    }
    let out = &scaled * vectors.transpose();
    debug_assert_eq!(out.nrows(), d);
    symmetrize(&out)
}

/// `−⟨Y, R⟩ / ‖Y‖₁`, a lower bound on the optimal distance for any PSD `Y ≠ 0`.
pub fn dual_lower_bound(input: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let l1: f64 = y.iter().map(|v| v.abs()).sum();
    if l1 <= 0.0 {
        return 0.0;
    }
    (-input.dot(y) / l1).max(0.0)
}

struct FeasibilityTest {
    feasible: bool,
    /// Largest dual lower bound seen.
    certificate: f64,
    /// PSD iterate closest to the input, with its distance.
    closest: DMatrix<f64>,
    distance: f64,
}

fn box_project(m: &DMatrix<f64>, center: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    m.zip_map(center, |x, c| x.clamp(c - t, c + t))
}

/// Dykstra's alternating projections between the box of radius `t` and the PSD cone.
///
/// Every PSD iterate is a valid upper bound on the optimum, so the closest one
/// is kept whatever the outcome.
fn test_feasibility(input: &DMatrix<f64>, t: f64, opts: &PsdOptions) -> Result<FeasibilityTest> {
    let d = input.nrows();
    let mut x = input.clone();
    let mut p = DMatrix::zeros(d, d);
    let mut q = DMatrix::zeros(d, d);
    let mut best_gap = f64::INFINITY;
    let mut since_improvement = 0;
    let mut certificate = 0.0_f64;
    let mut closest: Option<(DMatrix<f64>, f64)> = None;

    for _ in 0..opts.inner_cap {
        let y = box_project(&(&x + &p), input, t);
        p = &x + &p - &y;
        let pre = &y + &q;
        let eig = sym_eigen(&pre)?;
        x = reconstruct_clipped(&eig.values, &eig.vectors);
        q = &pre - &x;

        let distance = max_norm_distance(&x, input);
        if closest.as_ref().is_none_or(|(_, best)| distance < *best) {
            closest = Some((x.clone(), distance));
        }
        if distance <= t + opts.eig_tol {
            break;
        }

        // x − (y + q) is minus the negative part of y + q, hence PSD.
        let neg_part = &x - &pre;
        certificate = certificate.max(dual_lower_bound(input, &neg_part));
        if certificate > t {
            break;
        }

        let gap = max_norm_distance(&x, &y);
        if gap < best_gap * (1.0 - 1e-4) {
            best_gap = gap;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= opts.stall_window && best_gap > opts.eig_tol {
                break;
            }
        }
    }
    let (closest, distance) = closest.expect("inner cap is positive");
    Ok(FeasibilityTest {
        feasible: distance <= t + opts.eig_tol,
        certificate,
        closest,
        distance,
    })
}

/// Project a symmetric matrix onto the PSD cone in the elementwise max norm.
pub fn project_matrix_maxnorm(input: &DMatrix<f64>, opts: &PsdOptions) -> Result<PsdProjectionResult> {
    if !crate::linalg::is_symmetric(input, 1e-12) {
        return Err(CocaError::InvalidInput(
            "projection input must be symmetric".into(),
        ));
    }
    let eig = sym_eigen(input)?;
    let lambda_min = eig.min_value();
    if lambda_min >= -opts.eig_tol {
        return Ok(PsdProjectionResult {
            matrix: input.clone(),
            achieved_distance: 0.0,
            min_eigenvalue: lambda_min,
            iterations: 0,
            converged: true,
            certified_lower_bound: 0.0,
            trace: vec![Bracket {
                lower: 0.0,
                upper: 0.0,
            }],
        });
    }

    // Dual certificates from the negative eigenspace: its projector, the
    // negative part itself, and the bottom eigenvector alone.
    let d = input.nrows();
    let negative: Vec<usize> = (0..d).filter(|&j| eig.values[j] < 0.0).collect();
    let mut projector = DMatrix::zeros(d, d);
    let mut neg_part = DMatrix::zeros(d, d);
    for &j in &negative {
        let v = eig.vectors.column(j);
        let outer = v * v.transpose();
        neg_part -= &outer * eig.values[j];
        projector += outer;
    }
    let v_min = eig.vectors.column(d - 1).into_owned();
    let mut certified = [projector, neg_part, &v_min * v_min.transpose()]
        .iter()
        .map(|y| dual_lower_bound(input, y))
        .fold(0.0, f64::max);

    let mut best = reconstruct_clipped(&eig.values, &eig.vectors);
    let mut upper = max_norm_distance(&best, input);
    let mut lower = certified.min(upper);
    let mut trace = vec![Bracket { lower, upper }];
    let mut iterations = 0;

    while upper - lower > opts.dist_tol && iterations < opts.max_iters {
        iterations += 1;
        let mid = 0.5 * (lower + upper);
        let test = test_feasibility(input, mid, opts)?;
        if test.distance < upper {
            upper = test.distance;
            best = test.closest;
        }
        certified = certified.max(test.certificate);
        if !test.feasible {
            lower = lower.max(mid);
        }
        lower = lower.max(certified).min(upper);
        trace.push(Bracket { lower, upper });
    }

    let converged = upper - lower <= opts.dist_tol;
    let result = PsdProjectionResult {
        min_eigenvalue: min_eigenvalue(&best)?,
        matrix: best,
        achieved_distance: upper,
        iterations,
        converged,
        certified_lower_bound: certified,
        trace,
    };
    if converged {
        Ok(result)
    } else {
        Err(CocaError::NotConverged {
            width: upper - lower,
            iterations,
            best: Box::new(result),
        })
    }
}

/// Max-norm PSD projection of a correlation estimate; the result is tagged
/// `psd-projected` and need not keep a unit diagonal.
pub fn project_psd_maxnorm(input: &CorrelationEstimate, opts: &PsdOptions) -> Result<PsdProjectionResult> {
    project_matrix_maxnorm(&input.matrix, opts)
}

impl PsdProjectionResult {
    pub fn into_estimate(self) -> CorrelationEstimate {
        CorrelationEstimate {
            matrix: self.matrix,
            kind: CorrelationKind::PsdProjected,
        }
    }
}

/// `S̃ⱼₖ = σ̂ⱼ σ̂ₖ R̃ⱼₖ`.
pub fn scaled_covariance(
    projected: &PsdProjectionResult,
    moments: &MarginalMoments,
) -> Result<CovarianceEstimate> {
    moments.require_positive()?;
    if moments.stds.len() != projected.matrix.nrows() {
        return Err(CocaError::InvalidDimension(format!(
            "{} standard deviations for a {}x{} matrix",
            moments.stds.len(),
            projected.matrix.nrows(),
            projected.matrix.ncols()
        )));
    }
    Ok(CovarianceEstimate {
        matrix: scale_by_stds(&projected.matrix, &moments.stds),
        kind: CovarianceKind::PsdProjected,
    })
}
