use nalgebra::{DMatrix, DVector};

use crate::error::{CocaError, Result};
use crate::linalg::sign_aware_distance;

use super::qtpm::initial_vector;
use super::{apply_shift, check_square, quadratic_form, SolverOptions, SparseEigenResult};

const CD_TOL: f64 = 1e-8;
const CD_MAX_SWEEPS: usize = 10_000;

/// `(v − w)ᵀΓ(v − w) + δ₁‖w‖₂² + δ₂‖w‖₁`.
pub fn elastic_net_objective(
    gamma: &DMatrix<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    delta1: f64,
    delta2: f64,
) -> f64 {
    let r = v - w;
    quadratic_form(gamma, &r) + delta1 * w.norm_squared() + delta2 * w.lp_norm(1)
}

/// Minimize [`elastic_net_objective`] over `w` by cyclic coordinate descent.
///
/// Up to a constant the objective is `wᵀ(Γ + δ₁I)w − 2(Γv)ᵀw + δ₂‖w‖₁`, so
/// coordinate `j` solves to `soft(bⱼ − Σ_{i≠j} Aⱼᵢwᵢ, δ₂/2) / Aⱼⱼ` with
/// `A = Γ + δ₁I`, `b = Γv`.
pub fn elastic_net_step(
    gamma: &DMatrix<f64>,
    v: &DVector<f64>,
    delta1: f64,
    delta2: f64,
    warm: Option<&DVector<f64>>,
) -> DVector<f64> {
    let d = gamma.nrows();
    let b = gamma * v;
    let half = 0.5 * delta2;
    let mut w = warm.cloned().unwrap_or_else(|| DVector::zeros(d));
    // a_w = (Γ + δ₁I) w
    let mut a_w = gamma * &w + &w * delta1;

    for _ in 0..CD_MAX_SWEEPS {
        let mut max_change = 0.0_f64;
        for j in 0..d {
            let a_jj = gamma[(j, j)] + delta1;
            let old = w[j];
            let new = if a_jj > 0.0 {
                let partial = b[j] - a_w[j] + a_jj * old;
                partial.signum() * (partial.abs() - half).max(0.0) / a_jj
            } else {
                0.0
            };
            let change = new - old;
            if change != 0.0 {
                w[j] = new;
                a_w.axpy(change, &gamma.column(j), 1.0);
                a_w[j] += delta1 * change;
                max_change = max_change.max(change.abs());
            }
        }
        if max_change <= CD_TOL {
            break;
        }
    }
    w
}

/// Regression-style sparse PCA: alternate an elastic-net fit of `w` toward
/// `v` and `v ← Γw / ‖Γw‖₂`; returns `w / ‖w‖₂`.
///
/// `gamma` should be PSD (pass a projected estimate or set a shift), otherwise
/// the elastic-net step is not convex.
pub fn spca_leading(
    gamma: &DMatrix<f64>,
    delta1: f64,
    delta2: f64,
    opts: &SolverOptions,
) -> Result<SparseEigenResult> {
    check_square(gamma)?;
    if !(delta1 >= 0.0 && delta2 >= 0.0) {
        return Err(CocaError::InvalidInput(format!(
            "SPCA penalties must be nonnegative, got delta1 = {delta1}, delta2 = {delta2}"
        )));
    }
    let (shifted, _) = apply_shift(gamma, opts.shift)?;
    let mut v = initial_vector(&shifted, &opts.init, false)?;

    let mut w: Option<DVector<f64>> = None;
    let mut direction: Option<DVector<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=opts.max_iters {
        iterations = t;
        let next_w = elastic_net_step(&shifted, &v, delta1, delta2, w.as_ref());
        let w_norm = next_w.norm();
        if w_norm == 0.0 {
            return Err(CocaError::AllZeroSolution(delta2));
        }
        let gw = &shifted * &next_w;
        let gw_norm = gw.norm();
        if !(gw_norm > 0.0) {
            return Err(CocaError::DegenerateIterate(t));
        }
        v = gw / gw_norm;
        let unit = &next_w / w_norm;
        trace.push(quadratic_form(gamma, &unit));
        let step = direction
            .as_ref()
            .map_or(f64::INFINITY, |prev| sign_aware_distance(&unit, prev));
        direction = Some(unit);
        w = Some(next_w);
        if step <= opts.conv_tol {
            converged = true;
            break;
        }
    }
    let unit = direction.expect("at least one iteration runs");
    Ok(SparseEigenResult::finish(
        gamma, unit, iterations, converged, trace,
    ))
}
