//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigen-decomposition of a real symmetric matrix with eigenvalues sorted ascending.
/// Returns (eigenvalues, eigenvectors as columns).
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// exp(scale * M) for real symmetric M and complex scale, via eigen-decomposition.
pub fn exp_symmetric_scaled(m: &DMatrix<f64>, scale: Complex64) -> DMatrix<Complex64> {
    let (vals, vecs) = symmetric_eigen_sorted(m);
    let u = to_complex(&vecs);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&l| (scale * l).exp()));
    &u * DMatrix::from_diagonal(&d) * u.transpose()
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn max_abs_diff_c(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).map(|z| z.norm()).max()
}

/// Largest |entry| of a complex matrix.
pub fn max_abs_c(a: &DMatrix<Complex64>) -> f64 {
    a.map(|z| z.norm()).max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let (vals, vecs) = symmetric_eigen_sorted(&m);
        assert!((vals[0] - (-1.0)).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        // reconstruct
        let rec = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!(max_abs_diff(&rec, &m) < 1e-12);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let m = DMatrix::zeros(3, 3);
        let e = exp_symmetric_scaled(&m, Complex64::new(-0.7, 0.3));
        let id = to_complex(&DMatrix::identity(3, 3));
        assert!(max_abs_diff_c(&e, &id) < 1e-14);
    }

    #[test]
    fn exp_matches_scalar_case() {
        let m = DMatrix::from_row_slice(1, 1, &[2.0]);
        let s = Complex64::new(0.0, 0.5);
        let e = exp_symmetric_scaled(&m, s);
        let want = (s * 2.0).exp();
        assert!((e[(0, 0)] - want).norm() < 1e-14);
    }
}
