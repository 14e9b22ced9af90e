use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};

/// `√(1 − (v₁ᵀv₂)²)` for unit vectors; sign-invariant.
///
/// Evaluated as the norm of the component of `v₁` orthogonal to `v₂`, which
/// equals the same quantity but keeps full precision for tiny angles.
pub fn sin_angle(v1: &DVector<f64>, v2: &DVector<f64>) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(CocaError::InvalidVector(format!(
            "lengths differ: {} vs {}",
            v1.len(),
            v2.len()
        )));
    }
    for (name, v) in [("first", v1), ("second", v2)] {
        if (v.norm() - 1.0).abs() > 1e-8 {
            return Err(CocaError::InvalidVector(format!(
                "{name} vector is not unit-norm (norm {})",
                v.norm()
            )));
        }
    }
    let c = v1.dot(v2);
    let residual = v1 - v2 * c;
    Ok(residual.norm().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub fpn: usize,
    pub fnn: usize,
    pub fpr: f64,
    pub fnr: f64,
}

impl SupportMetrics {
    pub fn error_sum(&self) -> f64 {
        self.fpr + self.fnr
    }
}

/// False positive/negative counts and rates of an estimated support against
/// the true one, over `d` coordinates.
pub fn support_metrics(truth: &[usize], estimate: &[usize], d: usize) -> Result<SupportMetrics> {
    let s = truth.len();
    if s == 0 || d <= s {
        return Err(CocaError::InvalidInput(format!(
            "support metrics need 0 < s < d, got s = {s}, d = {d}"
        )));
    }
    if let Some(&j) = truth.iter().chain(estimate).find(|&&j| j >= d) {
        return Err(CocaError::InvalidInput(format!(
            "index {j} out of range for d = {d}"
        )));
    }
    let mut in_truth = vec![false; d];
    for &j in truth {
        in_truth[j] = true;
    }
    let mut in_est = vec![false; d];
    for &j in estimate {
        in_est[j] = true;
    }
    let fpn = (0..d).filter(|&j| in_est[j] && !in_truth[j]).count();
    let fnn = (0..d).filter(|&j| in_truth[j] && !in_est[j]).count();
    Ok(SupportMetrics {
        fpn,
        fnn,
        fpr: fpn as f64 / (d - s) as f64,
        fnr: fnn as f64 / s as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_angle_basics() {
        let v = DVector::from_vec(vec![0.6, 0.8]);
        assert!(sin_angle(&v, &v).unwrap() < 1e-15);
        assert!(sin_angle(&v, &-v.clone()).unwrap() < 1e-15);
        let w = DVector::from_vec(vec![-0.8, 0.6]);
        assert!((sin_angle(&v, &w).unwrap() - 1.0).abs() < 1e-15);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert!((sin_angle(&v, &e2).unwrap() - 0.6).abs() < 1e-15);
        assert!((sin_angle(&v, &e1).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sin_angle_rejects_non_unit() {
        let v = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(sin_angle(&v, &v), Err(CocaError::InvalidVector(_))));
    }

    #[test]
    fn support_counts() {
        let truth: Vec<usize> = (0..10).collect();
        let mut est: Vec<usize> = (0..9).collect();
        est.push(10);
        let m = support_metrics(&truth, &est, 100).unwrap();
        assert_eq!((m.fpn, m.fnn), (1, 1));
        assert!((m.fpr - 1.0 / 90.0).abs() < 1e-15);
        assert!((m.fnr - 0.1).abs() < 1e-15);

        let exact = support_metrics(&truth, &truth, 100).unwrap();
        assert_eq!((exact.fpn, exact.fnn, exact.fpr, exact.fnr), (0, 0, 0.0, 0.0));

        let empty = support_metrics(&truth, &[], 100).unwrap();
        assert_eq!((empty.fpr, empty.fnr), (0.0, 1.0));
    }
}
