//! Ranks, marginal moments and the rank-based latent correlation estimators.
//!
//! The Spearman path is: midranks per column, Pearson correlation of the rank
//! columns, then the sine map `2·sin(πρ/6)` that converts population Spearman's
//! rho into the correlation of the latent Gaussian copula.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CocaError, Result};

/// `n × d` sample matrix, rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(CocaError::InvalidData(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            let (i, j) = (pos % values.nrows(), pos / values.nrows());
            return Err(CocaError::InvalidData(format!(
                "non-finite entry at row {i}, column {j}"
            )));
        }
        Ok(Self { values })
    }

    /// Build from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(CocaError::InvalidData(format!(
                "row {i} has a different length than row 0"
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    fn require_rows(&self, min: usize) -> Result<()> {
        if self.n() < min {
            return Err(CocaError::InvalidData(format!(
                "need at least {min} observations, got {}",
                self.n()
            )));
        }
        Ok(())
    }
}

/// Midranks of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    pub ranks: DMatrix<f64>,
}

impl RankMatrix {
    pub fn from_data(data: &DataMatrix) -> Result<Self> {
        let (n, d) = (data.n(), data.d());
        let mut ranks = DMatrix::zeros(n, d);
        for j in 0..d {
            let r = compute_ranks(data.column(j))?;
            ranks.set_column(j, &DVector::from_vec(r));
        }
        Ok(Self { ranks })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalMoments {
    pub means: Vec<f64>,
    /// Population convention (divide by `n`).
    pub stds: Vec<f64>,
}

impl MarginalMoments {
    /// Indices of columns whose standard deviation is exactly zero.
    pub fn constant_columns(&self) -> Vec<usize> {
        self.stds
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.constant_columns().first() {
            Some(&j) => Err(CocaError::DegenerateColumn(j)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationKind {
    Pearson,
    SpearmanRaw,
    SpearmanSine,
    PsdProjected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub matrix: DMatrix<f64>,
    pub kind: CorrelationKind,
}

impl CorrelationEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    Pearson,
    SpearmanSine,
    PsdProjected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub kind: CovarianceKind,
}

/// Midranks of a single column (ties share the average of the ranks they span).
pub fn compute_ranks(column: &[f64]) -> Result<Vec<f64>> {
    if column.is_empty() {
        return Err(CocaError::InvalidData("cannot rank an empty column".into()));
    }
    if let Some(i) = column.iter().position(|x| !x.is_finite()) {
        return Err(CocaError::InvalidData(format!("non-finite entry at row {i}")));
    }
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));

    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let midrank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = midrank;
        }
        start = end;
    }
    Ok(ranks)
}

pub fn marginal_moments(data: &DataMatrix) -> Result<MarginalMoments> {
    data.require_rows(2)?;
    let n = data.n() as f64;
    let mut means = Vec::with_capacity(data.d());
    let mut stds = Vec::with_capacity(data.d());
    for j in 0..data.d() {
        let col = data.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    Ok(MarginalMoments { means, stds })
}

/// Pearson correlation between the columns of `m`; diagonal set to 1.
///
/// Each off-diagonal entry is an independent dot product of centered
/// columns, so the result does not depend on the parallel schedule.
fn column_correlation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = m.shape();
    let mut centered = m.clone();
    let mut norms = Vec::with_capacity(d);
    for j in 0..d {
        let mut col = centered.column_mut(j);
        if col.iter().all(|&x| x == col[0]) {
            return Err(CocaError::DegenerateColumn(j));
        }
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let ss = col.dot(&col);
        if ss <= 0.0 {
            return Err(CocaError::DegenerateColumn(j));
        }
        norms.push(ss.sqrt());
    }

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let r = centered.column(j).dot(&centered.column(k)) / (norms[j] * norms[k]);
            r.clamp(-1.0, 1.0)
        })
        .collect();

    let mut out = DMatrix::identity(d, d);
    for (&(j, k), &r) in pairs.iter().zip(&values) {
        out[(j, k)] = r;
        out[(k, j)] = r;
    }
    Ok(out)
}

/// Spearman's rho matrix: Pearson correlation of the midrank columns.
pub fn spearman_rho_matrix(data: &DataMatrix) -> Result<CorrelationEstimate> {
    data.require_rows(3)?;
    let ranks = RankMatrix::from_data(data)?;
    Ok(CorrelationEstimate {
        matrix: column_correlation(&ranks.ranks)?,
        kind: CorrelationKind::SpearmanRaw,
    })
}

/// `R̂ⱼₖ = 2·sin(π ρ̂ⱼₖ / 6)` off the diagonal, exactly 1 on it.
pub fn sine_transform(rho: &CorrelationEstimate) -> Result<CorrelationEstimate> {
    if rho.kind != CorrelationKind::SpearmanRaw {
        return Err(CocaError::InvalidInput(format!(
            "sine transform expects a raw Spearman matrix, got {:?}",
            rho.kind
        )));
    }
    let d = rho.dim();
    let matrix = DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            1.0
        } else {
            2.0 * (PI * rho.matrix[(j, k)] / 6.0).sin()
        }
    });
    Ok(CorrelationEstimate {
        matrix,
        kind: CorrelationKind::SpearmanSine,
    })
}

/// Sine-transformed Spearman correlation in one call.
pub fn spearman_correlation(data: &DataMatrix) -> Result<CorrelationEstimate> {
    sine_transform(&spearman_rho_matrix(data)?)
}

/// Scale a correlation matrix into a covariance: `σⱼ σₖ Rⱼₖ`.
pub(crate) fn scale_by_stds(r: &DMatrix<f64>, stds: &[f64]) -> DMatrix<f64> {
    let d = r.nrows();
    DMatrix::from_fn(d, d, |j, k| stds[j] * stds[k] * r[(j, k)])
}

/// `Ŝ = [σ̂ⱼ σ̂ₖ R̂ⱼₖ]` with the sine-transformed Spearman `R̂`.
pub fn spearman_covariance(data: &DataMatrix) -> Result<CovarianceEstimate> {
    let r = spearman_correlation(data)?;
    let moments = marginal_moments(data)?;
    moments.require_positive()?;
    Ok(CovarianceEstimate {
        matrix: scale_by_stds(&r.matrix, &moments.stds),
        kind: CovarianceKind::SpearmanSine,
    })
}

pub fn pearson_correlation(data: &DataMatrix) -> Result<CorrelationEstimate> {
    data.require_rows(2)?;
    Ok(CorrelationEstimate {
        matrix: column_correlation(data.values())?,
        kind: CorrelationKind::Pearson,
    })
}

/// Sample covariance with the `1/n` divisor.
pub fn pearson_covariance(data: &DataMatrix) -> Result<CovarianceEstimate> {
    let r = pearson_correlation(data)?;
    let moments = marginal_moments(data)?;
    Ok(CovarianceEstimate {
        matrix: scale_by_stds(&r.matrix, &moments.stds),
        kind: CovarianceKind::Pearson,
    })
}

/// Replace each entry by `Φ⁻¹(rᵢⱼ / (n + 1))` using column midranks.
pub fn normal_scores(data: &DataMatrix) -> Result<DataMatrix> {
    data.require_rows(2)?;
    let ranks = RankMatrix::from_data(data)?;
    let denom = (data.n() + 1) as f64;
    let std_normal = Normal::standard();
    let scores = ranks.ranks.map(|r| std_normal.inverse_cdf(r / denom));
    DataMatrix::new(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 10.0 - 5.0)).unwrap()
    }

    #[test]
    fn ranks_of_ordered_input() {
        assert_eq!(compute_ranks(&[3.1, 1.2, 2.5]).unwrap(), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(compute_ranks(&[5.0, 5.0, 1.0]).unwrap(), vec![2.5, 2.5, 1.0]);
        assert_eq!(compute_ranks(&[7.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn ranks_reject_non_finite() {
        assert!(matches!(
            compute_ranks(&[1.0, f64::NAN]),
            Err(CocaError::InvalidData(_))
        ));
    }

    #[test]
    fn rank_sum_is_preserved_with_ties() {
        let r = compute_ranks(&[2.0, 2.0, 2.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(r.iter().sum::<f64>(), 21.0);
        assert!(r.iter().all(|&x| (1.0..=6.0).contains(&x)));
    }

    #[test]
    fn moments_of_small_columns() {
        let data = DataMatrix::from_rows(&[vec![1.0, 4.0], vec![2.0, 4.0], vec![3.0, 4.0]]).unwrap();
        let m = marginal_moments(&data).unwrap();
        assert_eq!(m.means, vec![2.0, 4.0]);
        assert!((m.stds[0] - (2.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.stds[1], 0.0);
        assert_eq!(m.constant_columns(), vec![1]);
        assert!(matches!(
            m.require_positive(),
            Err(CocaError::DegenerateColumn(1))
        ));
    }

    #[test]
    fn spearman_extremes() {
        let data = DataMatrix::from_rows(&[
            vec![1.0, 1.0, -1.0],
            vec![3.0, 3.0, -3.0],
            vec![2.0, 2.0, -2.0],
            vec![0.5, 0.5, -0.5],
        ])
        .unwrap();
        let rho = spearman_rho_matrix(&data).unwrap();
        assert_eq!(rho.kind, CorrelationKind::SpearmanRaw);
        assert!((rho.matrix[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((rho.matrix[(0, 2)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_rejects_constant_column() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 2.0], vec![3.0, 2.0]]).unwrap();
        assert!(matches!(
            spearman_rho_matrix(&data),
            Err(CocaError::DegenerateColumn(1))
        ));
        assert!(matches!(
            pearson_correlation(&data),
            Err(CocaError::DegenerateColumn(1))
        ));
    }

    #[test]
    fn spearman_needs_three_rows() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            spearman_rho_matrix(&data),
            Err(CocaError::InvalidData(_))
        ));
    }

    #[test]
    fn sine_transform_values() {
        let rho = CorrelationEstimate {
            matrix: DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 1.0, 0.5, 1.0, 1.0]),
            kind: CorrelationKind::SpearmanRaw,
        };
        let r = sine_transform(&rho).unwrap();
        assert_eq!(r.matrix[(0, 1)], 0.0);
        assert!((r.matrix[(1, 2)] - 1.0).abs() < 1e-15);
        assert!((r.matrix[(0, 2)] - 0.517_638_090_205_041_5).abs() < 1e-12);
        assert_eq!(r.matrix[(2, 2)], 1.0);
        assert!(sine_transform(&r).is_err());
    }

    #[test]
    fn spearman_covariance_scales_by_stds() {
        let data = random_data(50, 4, 3);
        let s = spearman_covariance(&data).unwrap();
        let r = spearman_correlation(&data).unwrap();
        let m = marginal_moments(&data).unwrap();
        let sd = DVector::from_vec(m.stds.clone());
        let outer = &sd * sd.transpose();
        let expected = outer.component_mul(&r.matrix);
        assert!(crate::linalg::max_norm_distance(&s.matrix, &expected) < 1e-12);
        for j in 0..4 {
            assert!((s.matrix[(j, j)] - m.stds[j].powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_covariance_product() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let s = scale_by_stds(&r, &[2.0, 3.0]);
        assert_eq!(s[(0, 1)], 3.0);
    }

    #[test]
    fn pearson_exact_line() {
        let data =
            DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![5.0, 10.0], vec![-1.0, -2.0]])
                .unwrap();
        let r = pearson_correlation(&data).unwrap();
        assert!((r.matrix[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_scores_small_column() {
        let data = DataMatrix::from_rows(&[vec![5.0], vec![1.0], vec![9.0]]).unwrap();
        let z = normal_scores(&data).unwrap();
        let col = z.column(0);
        assert!(col[0].abs() < 1e-12);
        assert!((col[1] + 0.674_489_750_196_081_7).abs() < 1e-9);
        assert!((col[2] - 0.674_489_750_196_081_7).abs() < 1e-9);
    }

    #[test]
    fn normal_scores_keep_ranks() {
        let data = random_data(30, 3, 11);
        let z = normal_scores(&data).unwrap();
        for j in 0..3 {
            assert_eq!(
                compute_ranks(z.column(j)).unwrap(),
                compute_ranks(data.column(j)).unwrap()
            );
        }
    }

    #[test]
    fn data_matrix_rejects_nan() {
        let mut m = DMatrix::zeros(3, 2);
        m[(2, 1)] = f64::INFINITY;
        assert!(matches!(DataMatrix::new(m), Err(CocaError::InvalidData(_))));
    }
}
