use nalgebra::{DMatrix, DVector};

use crate::error::{CocaError, Result};
use crate::linalg::sign_aware_distance;

use super::qtpm::initial_vector;
use super::{apply_shift, check_square, quadratic_form, SolverOptions, SparseEigenResult};

const BISECTION_STEPS: usize = 60;

fn soft_threshold(a: &DVector<f64>, lambda: f64) -> DVector<f64> {
    a.map(|x| x.signum() * (x.abs() - lambda).max(0.0))
}

/// `argmax uᵀa` subject to `‖u‖₂ ≤ 1` and `‖u‖₁ ≤ delta`.
///
/// The maximizer is a normalized soft-thresholding of `a`. When the plain
/// normalization already meets the `ℓ1` bound the threshold is zero; otherwise
/// the threshold is bisected and the feasible end of the bracket is returned,
/// so the bound always holds.
pub fn l1_constrained_direction(a: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    if delta < 1.0 {
        return Err(CocaError::InvalidRadius(format!(
            "l1 bound must be at least 1, got {delta}"
        )));
    }
    let norm = a.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(CocaError::DegenerateIterate(0));
    }
    let plain = a / norm;
    if plain.lp_norm(1) <= delta {
        return Ok(plain);
    }

    let ratio_ok = |lambda: f64| -> Option<DVector<f64>> {
        let s = soft_threshold(a, lambda);
        let n2 = s.norm();
        if n2 == 0.0 {
            return None;
        }
        let u = s / n2;
        (u.lp_norm(1) <= delta).then_some(u)
    };

    let (mut lo, mut hi) = (0.0, a.amax());
    let mut best: Option<DVector<f64>> = None;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        match ratio_ok(mid) {
            Some(u) => {
                hi = mid;
                best = Some(u);
            }
            None if soft_threshold(a, mid).norm() == 0.0 => hi = mid,
            None => lo = mid,
        }
    }
    Ok(best.map(drop_boundary_entries).unwrap_or_else(|| {
        // only reachable when several entries tie for the largest magnitude
        let j = a.iamax();
        let mut e = DVector::zeros(a.len());
        e[j] = a[j].signum();
        e
    }))
}

/// Entries that survive the threshold only by bisection round-off (below
/// `1e-12` of the largest) are zeroed; this lowers `‖u‖₁/‖u‖₂`, so the bound
/// still holds after renormalizing.
fn drop_boundary_entries(mut u: DVector<f64>) -> DVector<f64> {
    let cut = 1e-12 * u.amax();
    u.apply(|x| {
        if x.abs() < cut {
            *x = 0.0
        }
    });
    let n = u.norm();
    u / n
}

/// Rank-one penalized matrix decomposition of a symmetric matrix.
///
/// Alternates `v ← argmax vᵀΓw` and `w ← argmax vᵀΓw`, both under
/// `‖·‖₂ ≤ 1, ‖·‖₁ ≤ δ`, and returns `w`.
pub fn pmd_rank_one(gamma: &DMatrix<f64>, delta: f64, opts: &SolverOptions) -> Result<SparseEigenResult> {
    check_square(gamma)?;
    if delta < 1.0 {
        return Err(CocaError::InvalidRadius(format!(
            "PMD needs delta >= 1, got {delta}"
        )));
    }
    let (shifted, _) = apply_shift(gamma, opts.shift)?;
    let mut w = initial_vector(&shifted, &opts.init, false)?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=opts.max_iters {
        iterations = t;
        let v = l1_constrained_direction(&(&shifted * &w), delta).map_err(|e| relabel_degenerate(e, t))?;
        let next = l1_constrained_direction(&(&shifted * &v), delta).map_err(|e| relabel_degenerate(e, t))?;
        let step = sign_aware_distance(&next, &w);
        w = next;
        trace.push(quadratic_form(gamma, &w));
        if step <= opts.conv_tol {
            converged = true;
            break;
        }
    }
    Ok(SparseEigenResult::finish(gamma, w, iterations, converged, trace))
}

fn relabel_degenerate(e: CocaError, t: usize) -> CocaError {
    match e {
        CocaError::DegenerateIterate(_) => CocaError::DegenerateIterate(t),
        other => other,
    }
}
