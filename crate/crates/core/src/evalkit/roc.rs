use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};

use super::metrics::SupportMetrics;

/// Which end of a tuning path gives sparser estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparserWhen {
    /// e.g. the support size `k` or an `ℓ1` radius.
    Smaller,
    /// e.g. an `ℓ1` penalty.
    Larger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub delta: f64,
    pub fpr: f64,
    /// `1 − FNR`.
    pub tpr: f64,
    /// Number of replicates averaged into this point.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Sorted by FPR, then TPR.
    pub points: Vec<RocPoint>,
    /// Trapezoid area over the observed FPR range; `None` when every point
    /// shares one FPR and the range is empty.
    pub auc: Option<f64>,
}

impl RocCurve {
    pub fn fpr_range(&self) -> (f64, f64) {
        let lo = self.points.iter().map(|p| p.fpr).fold(f64::INFINITY, f64::min);
        let hi = self
            .points
            .iter()
            .map(|p| p.fpr)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Tuning value with the smallest mean `FPR + FNR`.
    pub fn oracle_delta(&self, sparser: SparserWhen) -> Result<f64> {
        pick_oracle(
            self.points.iter().map(|p| (p.delta, p.fpr + 1.0 - p.tpr)),
            sparser,
        )
    }
}

fn pick_oracle(items: impl Iterator<Item = (f64, f64)>, sparser: SparserWhen) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (delta, err) in items {
        best = match best {
            None => Some((delta, err)),
            Some((bd, be)) => {
                let sparser_tie = match sparser {
                    SparserWhen::Smaller => delta < bd,
                    SparserWhen::Larger => delta > bd,
                };
                if err < be || (err == be && sparser_tie) {
                    Some((delta, err))
                } else {
                    Some((bd, be))
                }
            }
        };
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| CocaError::InvalidInput("oracle tuning needs a nonempty path".into()))
}

/// `δ* = argmin_δ (FPR(δ) + FNR(δ))`, ties resolved toward the sparser end.
pub fn oracle_delta(results: &[(f64, SupportMetrics)], sparser: SparserWhen) -> Result<f64> {
    pick_oracle(results.iter().map(|(d, m)| (*d, m.error_sum())), sparser)
}

/// Average per-`δ` metrics over replicates into an ROC curve.
///
/// `results` may repeat a `δ` once per replicate; the point for that `δ` is
/// the mean of its replicates' (FPR, 1 − FNR).
pub fn roc_curve(results: &[(f64, SupportMetrics)]) -> Result<RocCurve> {
    if results.is_empty() {
        return Err(CocaError::InvalidInput(
            "ROC curve from an empty result list".into(),
        ));
    }
    let mut sorted: Vec<&(f64, SupportMetrics)> = results.iter().collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let delta = sorted[i].0;
        let mut j = i;
        let (mut fpr, mut fnr) = (0.0, 0.0);
        while j < sorted.len() && sorted[j].0 == delta {
            fpr += sorted[j].1.fpr;
            fnr += sorted[j].1.fnr;
            j += 1;
        }
        let count = j - i;
        points.push(RocPoint {
            delta,
            fpr: fpr / count as f64,
            tpr: 1.0 - fnr / count as f64,
            count,
        });
        i = j;
    }
    if points.len() < 2 {
        return Err(CocaError::InvalidInput(
            "ROC curve needs at least two distinct tuning values".into(),
        ));
    }
    points.sort_by(|a, b| {
        a.fpr
            .total_cmp(&b.fpr)
            .then(a.tpr.total_cmp(&b.tpr))
            .then(a.delta.total_cmp(&b.delta))
    });
    let auc = trapezoid_auc(&points);
    Ok(RocCurve { points, auc })
}

fn trapezoid_auc(points: &[RocPoint]) -> Option<f64> {
    let first = points.first()?.fpr;
    let last = points.last()?.fpr;
    if last <= first {
        return None;
    }
    Some(
        points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr))
            .sum(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(fpr: f64, fnr: f64) -> SupportMetrics {
        SupportMetrics {
            fpn: 0,
            fnn: 0,
            fpr,
            fnr,
        }
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(
            oracle_delta(&[(4.0, m(0.2, 0.3))], SparserWhen::Smaller).unwrap(),
            4.0
        );
        let path = [(1.0, m(0.1, 0.2)), (2.0, m(0.0, 0.1)), (3.0, m(0.1, 0.1))];
        assert_eq!(oracle_delta(&path, SparserWhen::Smaller).unwrap(), 2.0);
        let exact = [(1.0, m(0.0, 0.5)), (2.0, m(0.0, 0.0)), (3.0, m(0.3, 0.0))];
        assert_eq!(oracle_delta(&exact, SparserWhen::Larger).unwrap(), 2.0);
        assert!(oracle_delta(&[], SparserWhen::Smaller).is_err());
    }

    #[test]
    fn oracle_ties_go_sparser() {
        let path = [(2.0, m(0.0, 0.1)), (4.0, m(0.1, 0.0))];
        assert_eq!(oracle_delta(&path, SparserWhen::Smaller).unwrap(), 2.0);
        assert_eq!(oracle_delta(&path, SparserWhen::Larger).unwrap(), 4.0);
    }

    #[test]
    fn perfect_recovery_is_degenerate() {
        let r = [(2.0, m(0.0, 0.0)), (4.0, m(0.0, 0.0))];
        let c = roc_curve(&r).unwrap();
        assert!(c.points.iter().all(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(c.auc, None);
    }

    #[test]
    fn points_average_replicates() {
        let r = [
            (1.0, m(0.1, 0.4)),
            (1.0, m(0.2, 0.2)),
            (1.0, m(0.0, 0.3)),
            (2.0, m(0.3, 0.0)),
            (2.0, m(0.6, 0.3)),
            (2.0, m(0.3, 0.0)),
        ];
        let c = roc_curve(&r).unwrap();
        assert_eq!(c.points.len(), 2);
        let p1 = c.points[0];
        assert_eq!(p1.delta, 1.0);
        assert!((p1.fpr - 0.1).abs() < 1e-15);
        assert!((p1.tpr - 0.7).abs() < 1e-15);
        let p2 = c.points[1];
        assert!((p2.fpr - 0.4).abs() < 1e-15);
        assert!((p2.tpr - 0.9).abs() < 1e-15);
        assert!((c.auc.unwrap() - 0.3 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn needs_two_deltas() {
        assert!(roc_curve(&[]).is_err());
        assert!(roc_curve(&[(1.0, m(0.0, 0.0)), (1.0, m(0.1, 0.0))]).is_err());
    }
}
