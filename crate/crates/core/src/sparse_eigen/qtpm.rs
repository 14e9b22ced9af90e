use nalgebra::{DMatrix, DVector};

use crate::error::{CocaError, Result};
use crate::linalg::sign_aware_distance;

use super::{
    apply_shift, check_square, power_init, quadratic_form, spca_leading, truncate, user_vector, InitStrategy,
    SolverOptions, SparseEigenResult, SPCA_INIT_DELTA1, SPCA_INIT_DELTA2,
};

/// `‖v‖_q^q`; for `q = 0` the number of nonzeros.
pub fn lq_norm_pow(v: &[f64], q: f64) -> f64 {
    if q == 0.0 {
        v.iter().filter(|x| **x != 0.0).count() as f64
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum()
    }
}

/// Indices of the `k` largest magnitudes; among equal magnitudes the lower index wins.
pub fn top_k_indices(x: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order = magnitude_order(x);
    order.truncate(k);
    order.sort_unstable();
    order
}

fn magnitude_order(x: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // stable sort keeps lower indices first among ties
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    order
}

/// Largest `k` such that the normalized top-`k` truncation of `x` lies in the
/// `ℓq` ball of radius `R_q` (measured as `‖·‖_q^q ≤ R_q`).
///
/// The normalized `ℓq` norm of a top-`k` truncation is nondecreasing in `k`,
/// so the feasible `k` form a prefix and binary search finds its end. Returns
/// `d` when no truncation is needed.
pub fn find_truncation_level(x: &DVector<f64>, q: f64, radius: f64) -> Result<usize> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(CocaError::InvalidRadius(format!("q must lie in (0, 1], got {q}")));
    }
    if !(radius > 1.0) {
        return Err(CocaError::InvalidRadius(format!(
            "R_q must exceed 1, got {radius}"
        )));
    }
    let d = x.len();
    let order = magnitude_order(x);
    let mut sum_q = Vec::with_capacity(d + 1);
    let mut sum_sq = Vec::with_capacity(d + 1);
    sum_q.push(0.0);
    sum_sq.push(0.0);
    for &i in &order {
        let a = x[i].abs();
        sum_q.push(sum_q.last().unwrap() + a.powf(q));
        sum_sq.push(sum_sq.last().unwrap() + a * a);
    }
    let feasible = |k: usize| -> bool {
        if sum_sq[k] == 0.0 {
            return true;
        }
        sum_q[k] / sum_sq[k].powf(q / 2.0) <= radius
    };
    if x.iter().all(|v| *v == 0.0) {
        return Err(CocaError::InvalidVector("cannot truncate the zero vector".into()));
    }
    if feasible(d) {
        return Ok(d);
    }
    if !feasible(1) {
        return Err(CocaError::InvalidRadius(format!(
            "no truncation level satisfies R_q = {radius}"
        )));
    }
    // invariant: feasible(lo), !feasible(hi)
    let (mut lo, mut hi) = (1, d);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn project(x: &DVector<f64>, opts: &SolverOptions) -> Result<DVector<f64>> {
    let d = x.len();
    let keep = if opts.q == 0.0 {
        top_k_indices(x, opts.validated_k(d)?)
    } else {
        let k = find_truncation_level(x, opts.q, opts.radius)?;
        if k == d {
            return Ok(x.clone());
        }
        top_k_indices(x, k)
    };
    let t = truncate(x, &keep);
    let norm = t.norm();
    Ok(t / norm)
}

pub(crate) fn initial_vector(
    gamma: &DMatrix<f64>,
    init: &InitStrategy,
    spca_default: bool,
) -> Result<DVector<f64>> {
    let d = gamma.nrows();
    match init {
        InitStrategy::Vector(v) => user_vector(v, d),
        InitStrategy::PowerMethod => Ok(power_init(gamma)?.vector),
        InitStrategy::Auto if !spca_default => Ok(power_init(gamma)?.vector),
        InitStrategy::Auto | InitStrategy::Spca { .. } => {
            let (delta1, delta2) = match init {
                InitStrategy::Spca { delta1, delta2 } => (*delta1, *delta2),
                _ => (SPCA_INIT_DELTA1, SPCA_INIT_DELTA2),
            };
            let opts = SolverOptions::default().with_init(InitStrategy::PowerMethod);
            match spca_leading(gamma, delta1, delta2, &opts) {
                Ok(res) => Ok(res.as_dvector()),
                Err(_) => Ok(power_init(gamma)?.vector),
            }
        }
    }
}

/// The default starting vector for [`qtpm`]: an SPCA fit at small penalties,
/// or the power-method vector if that fails.
pub fn default_qtpm_init(gamma: &DMatrix<f64>) -> Result<DVector<f64>> {
    initial_vector(gamma, &InitStrategy::Auto, true)
}

/// `ℓq`-constrained truncated power method.
///
/// Each step multiplies by `Γ`, normalizes, and if the result leaves the
/// `ℓq` ball keeps only the top-`k` magnitudes (the largest feasible `k`) and
/// renormalizes. Stops when the iterate moves less than `conv_tol` up to sign.
pub fn qtpm(gamma: &DMatrix<f64>, opts: &SolverOptions) -> Result<SparseEigenResult> {
    let d = check_square(gamma)?;
    opts.validate(d)?;
    let (shifted, _) = apply_shift(gamma, opts.shift)?;
    let mut theta = initial_vector(&shifted, &opts.init, true)?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=opts.max_iters {
        iterations = t;
        let x = &shifted * &theta;
        let norm = x.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CocaError::DegenerateIterate(t));
        }
        let next = project(&(x / norm), opts)?;
        let step = sign_aware_distance(&next, &theta);
        theta = next;
        trace.push(quadratic_form(gamma, &theta));
        if step <= opts.conv_tol {
            converged = true;
            break;
        }
    }
    Ok(SparseEigenResult::finish(
        gamma, theta, iterations, converged, trace,
    ))
}
