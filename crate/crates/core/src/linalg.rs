//! Small dense linear-algebra helpers shared by the estimators and solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CocaError, Result};

/// Eigenvalues (descending) and matching eigenvectors (columns) of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn leading_vector(&self) -> DVector<f64> {
        self.vectors.column(0).into_owned()
    }

    pub fn min_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(CocaError::NumericalError(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(CocaError::NumericalError(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 10_000)
        .ok_or_else(|| CocaError::NumericalError("symmetric eigensolver did not converge".into()))?;
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SortedEigen { values, vectors })
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigen(m)?.min_value())
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Elementwise maximum absolute difference `‖a − b‖max`.
pub fn max_norm_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Symmetric up to a relative tolerance on the largest entry.
pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let d = m.nrows();
    (0..d).all(|i| (i + 1..d).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

/// Flip the sign so the largest-magnitude entry is positive (lowest index wins ties).
pub fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// `min_s ‖a − s·b‖₂` over `s ∈ {±1}`.
pub fn sign_aware_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let plus = (a - b).norm();
    let minus = (a + b).norm();
    plus.min(minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
        assert!((e.leading_vector()[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn canonical_sign_makes_largest_positive() {
        let mut v = DVector::from_vec(vec![0.1, -0.9, 0.3]);
        canonical_sign(&mut v);
        assert!(v[1] > 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(sym_eigen(&m).is_err());
    }
}
