//! Empirical scaling of the Spearman estimator's max-norm error with `n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};
use crate::linalg::max_norm_distance;
use crate::nonparanormal::{derive_seed, sample_nonparanormal, synthesize_model, TransformSet};
use crate::rank_stats::spearman_correlation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// Mean of `‖R̂ − Σ⁰‖max` over replicates.
    pub mean_error: f64,
    pub max_error: f64,
    /// `√(log d / n)`.
    pub rate: f64,
    /// `8π√(log d / n)`.
    pub bound: f64,
    /// Whether every replicate's error was within `bound`.
    pub bound_holds: bool,
    /// `bound ≥ 2`, the largest possible max-norm error between correlation
    /// matrices, so the bound says nothing at this `n`.
    pub bound_vacuous: bool,
    /// `mean_error / rate`.
    pub scaled_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    /// `mean_error(nᵢ) / mean_error(nⱼ)`.
    pub fn error_ratio(&self, i: usize, j: usize) -> f64 {
        self.rows[i].mean_error / self.rows[j].mean_error
    }

    /// `true` when the mean error never increases with `n`.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].mean_error <= w[0].mean_error)
    }
}

/// Smallest `n` satisfying `n ≥ 21 / log d + 2`.
pub fn min_sample_size(d: usize) -> usize {
    (21.0 / (d as f64).ln() + 2.0).ceil() as usize
}

/// Gaussian draws from the two-spike latent model (`sparsity` 10, or `d / 2`
/// when `d < 20`); reports the mean Spearman max-norm error per `n`.
pub fn rate_check(ns: &[usize], d: usize, replicates: usize, seed: u64) -> Result<RateTable> {
    if d < 2 {
        return Err(CocaError::InvalidDimension(format!(
            "rate check needs d >= 2, got {d}"
        )));
    }
    if ns.is_empty() || replicates == 0 {
        return Err(CocaError::InvalidInput(
            "rate check needs sample sizes and replicates".into(),
        ));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CocaError::InvalidInput(
            "sample sizes must be strictly increasing".into(),
        ));
    }
    let n_min = min_sample_size(d);
    if let Some(n) = ns.iter().find(|&&n| n < n_min) {
        return Err(CocaError::InvalidInput(format!(
            "n = {n} is below 21 / log d + 2 = {n_min} for d = {d}"
        )));
    }
    let model = synthesize_model(d, 10.min(d / 2))?;
    let transforms = TransformSet::identity(d);
    let log_d = (d as f64).ln();

    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let errors: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(derive_seed(seed, n as u64), i as u64);
                let data = sample_nonparanormal(&model.sigma0, &transforms, n, s)?;
                let r = spearman_correlation(&data)?;
                Ok(max_norm_distance(&r.matrix, &model.sigma0))
            })
            .collect::<Result<_>>()?;
        let mean_error = errors.iter().sum::<f64>() / replicates as f64;
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        let rate = (log_d / n as f64).sqrt();
        let bound = 8.0 * std::f64::consts::PI * rate;
        rows.push(RateRow {
            n,
            mean_error,
            max_error,
            rate,
            bound,
            bound_holds: max_error <= bound,
            bound_vacuous: bound >= 2.0,
            scaled_error: mean_error / rate,
        });
    }
    Ok(RateTable {
        d,
        replicates,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size_condition() {
        // 21 / ln 50 + 2 ≈ 7.37
        assert_eq!(min_sample_size(50), 8);
        assert!(rate_check(&[7], 50, 2, 0).is_err());
        assert!(rate_check(&[100, 50], 50, 2, 0).is_err());
    }

    #[test]
    fn small_run() {
        let t = rate_check(&[40, 160], 20, 20, 3).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.bound_holds && r.bound_vacuous));
        assert!(t.error_ratio(0, 1) > 1.2);
    }
}
