use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenpairs sorted by ascending eigenvalue; column `i` of `vectors`
/// belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct Eigen<T: Scalar> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

/// Dense symmetric eigendecomposition with ascending ordering.
pub fn eigensolve<T: Scalar>(matrix: DMatrix<T>) -> Result<Eigen<T>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::numerical(format!("eigensolve needs a square matrix, got {}x{}", n, matrix.ncols())));
    }
    let norm = matrix.amax();
    if matrix.iter().any(|v| !v.is_finite_value()) {
        return Err(Error::numerical(format!("matrix {n}x{n} contains non-finite entries")));
    }
    let asym = (&matrix - matrix.transpose()).amax();
    if asym > T::lit(1e-10) * norm.max(T::one()) {
        return Err(Error::numerical(format!(
            "matrix {n}x{n} is not symmetric (max asymmetry {:.3e}, max entry {:.3e})",
            asym.to_f64_lossy(),
            norm.to_f64_lossy()
        )));
    }
    let eps = T::lit(T::EPSILON);
    let eig = SymmetricEigen::try_new(matrix, eps, 0).ok_or_else(|| {
        Error::numerical(format!(
            "symmetric eigensolver failed on {n}x{n} matrix (max entry {:.3e})",
            norm.to_f64_lossy()
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_and_identity() {
        let e = eigensolve(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0]);
        let e = eigensolve(DMatrix::<f64>::identity(7, 7)).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_symmetric_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::<f64>::from_fn(50, 50, |_, _| rng.random_range(-1.0..1.0));
        let h = &a + a.transpose();
        let norm = h.norm();
        let e = eigensolve(h.clone()).unwrap();
        for i in 0..50 {
            let v = e.vectors.column(i);
            let r = &h * v - v * e.values[i];
            assert!(r.norm() < 1e-9 * norm);
            if i > 0 {
                assert!(e.values[i] >= e.values[i - 1]);
            }
        }
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(50, 50)).amax() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric_and_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(eigensolve(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(eigensolve(m).is_err());
    }
}
