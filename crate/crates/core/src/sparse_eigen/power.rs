use nalgebra::{DMatrix, DVector};

use crate::error::{CocaError, Result};
use crate::linalg::sign_aware_distance;

use super::quadratic_form;

const TOL: f64 = 1e-8;
const CAP: usize = 1000;

/// Leading eigenvector estimate from plain power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInit {
    pub vector: DVector<f64>,
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn iterate(gamma: &DMatrix<f64>, start: DVector<f64>) -> Option<PowerInit> {
    let mut v = start;
    for it in 1..=CAP {
        let next = gamma * &v;
        let norm = next.norm();
        if !(norm > 0.0) {
            return None;
        }
        let next = next / norm;
        let step = sign_aware_distance(&next, &v);
        v = next;
        if step <= TOL {
            let eigenvalue = quadratic_form(gamma, &v);
            return Some(PowerInit {
                vector: v,
                eigenvalue,
                iterations: it,
                converged: true,
            });
        }
    }
    let eigenvalue = quadratic_form(gamma, &v);
    Some(PowerInit {
        vector: v,
        eigenvalue,
        iterations: CAP,
        converged: false,
    })
}

/// Fixed, irregular start used alongside the all-ones vector.
fn perturbed_start(d: usize) -> DVector<f64> {
    let golden = 0.618_033_988_749_894_9_f64;
    DVector::from_fn(d, |i, _| 1.0 + ((i + 1) as f64 * golden).fract()).normalize()
}

/// Leading eigenvector by power iteration from the normalized all-ones vector.
///
/// A second run from a fixed perturbed start guards against an all-ones start
/// that is orthogonal to the leading eigenspace. When the two runs end on
/// different directions with the same Rayleigh quotient there is no dominant
/// direction and the result is flagged unconverged.
pub fn power_init(gamma: &DMatrix<f64>) -> Result<PowerInit> {
    let d = super::check_square(gamma)?;
    if gamma.iter().all(|&x| x == 0.0) {
        return Err(CocaError::InvalidInput(
            "power iteration on the zero matrix".into(),
        ));
    }
    let ones = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let first = iterate(gamma, ones);
    let second = iterate(gamma, perturbed_start(d));

    let (a, b) = match (first, second) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) | (None, Some(a)) => return Ok(a),
        (None, None) => return Err(CocaError::DegenerateIterate(1)),
    };
    let cos = a.vector.dot(&b.vector).abs().min(1.0);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    if sin <= 1e-5 {
        let converged = a.converged && b.converged;
        return Ok(PowerInit { converged, ..a });
    }
    let scale = a.eigenvalue.abs().max(b.eigenvalue.abs()).max(f64::MIN_POSITIVE);
    if (a.eigenvalue.abs() - b.eigenvalue.abs()).abs() <= 1e-6 * scale {
        return Ok(PowerInit {
            converged: false,
            ..a
        });
    }
    Ok(if a.eigenvalue.abs() > b.eigenvalue.abs() {
        a
    } else {
        b
    })
}
