//! Dense Hermitian eigendecomposition backed by nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::operator::Operator;
use crate::scalar::Scalar;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn to_dmatrix<T: Scalar>(op: &Operator<T>) -> DMatrix<Complex64> {
    let n = op.dim();
    DMatrix::from_fn(n, n, |r, c| op.entry(r, c).to_c64())
}

/// Eigendecomposition of a Hermitian matrix, sorted ascending.
pub fn hermitian_eigen(m: DMatrix<Complex64>) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen { values: vec![], vectors: m };
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Eigen { values, vectors }
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue<T: Scalar>(op: &Operator<T>) -> f64 {
    min_eigenpair(op).0
}

/// Smallest eigenvalue together with a unit eigenvector.
pub fn min_eigenpair<T: Scalar>(op: &Operator<T>) -> (f64, Vec<Complex64>) {
    let eig = hermitian_eigen(to_dmatrix(op));
    let v = eig.vectors.column(0).iter().copied().collect();
    (eig.values[0], v)
}

/// Spectrum in ascending order.
pub fn eigenvalues<T: Scalar>(op: &Operator<T>) -> Vec<f64> {
    hermitian_eigen(to_dmatrix(op)).values
}

/// Largest absolute eigenvalue, i.e. the spectral norm of a Hermitian matrix.
pub fn spectral_norm<T: Scalar>(op: &Operator<T>) -> f64 {
    eigenvalues(op).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Replaces negative eigenvalues with zero: the Frobenius projection onto
/// the PSD cone.
pub fn project_psd(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let eig = hermitian_eigen(m);
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        for c in 0..n {
            let vc = v[c].conj() * lam;
            for r in 0..n {
                out[(r, c)] += v[r] * vc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::{Factorization, Party};
    use crate::operator::FloatOperator;

    #[test]
    fn eigenvalues_sorted() {
        let op = FloatOperator::from_fn(Factorization::single(3, Party::A), |r, c| {
            if r == c {
                Complex64::new([3.0, -1.0, 2.0][r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        assert_eq!(eigenvalues(&op), vec![-1.0, 2.0, 3.0]);
        assert_eq!(spectral_norm(&op), 3.0);
    }

    #[test]
    fn complex_hermitian_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let e = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ];
        let op = FloatOperator::new(Factorization::single(2, Party::A), e).unwrap();
        let (lam, v) = min_eigenpair(&op);
        assert!((lam - 1.0).abs() < 1e-12);
        let q = op.quadratic_form(&v).unwrap();
        assert!((q.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_clips_negative_part() {
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let p = project_psd(m);
        for x in p.iter() {
            assert!((x.re - 0.5).abs() < 1e-12 && x.im.abs() < 1e-12);
        }
    }
}
