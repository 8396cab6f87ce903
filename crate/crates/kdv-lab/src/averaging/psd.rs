//! Symmetric positive-semidefinite square roots via eigendecomposition.

use nalgebra::DMatrix;

use crate::error::AveragingError;

/// Eigenvalues in `(-CLAMP_TOL, 0)` are treated as quadrature jitter and
/// clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Eigenvalues below `-INDEFINITE_TOL` mean the matrix is genuinely not a
/// covariance.
pub const INDEFINITE_TOL: f64 = 1e-8;

/// Symmetric square root `S` of a symmetric PSD matrix: `S = Q sqrt(L) Q^t`,
/// so `S S^t` reproduces the input. Small negative eigenvalues are clamped;
/// materially negative ones are an error.
pub fn symmetric_sqrt(mat: &DMatrix<f64>) -> Result<DMatrix<f64>, AveragingError> {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "square matrix required");
    // symmetrize against accumulation asymmetry before decomposing
    let sym = 0.5 * (mat + mat.transpose());
    let eig = sym.symmetric_eigen();
    let mut sqrt_vals = eig.eigenvalues.clone();
    for v in sqrt_vals.iter_mut() {
        if *v < -INDEFINITE_TOL {
            return Err(AveragingError::IndefiniteCovariance {
                eigenvalue: *v,
                tolerance: INDEFINITE_TOL,
            });
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, col) in scaled.column_iter_mut().enumerate() {
        let mut col = col;
        col *= sqrt_vals[j];
    }
    let root = &scaled * q.transpose();
    Ok(0.5 * (&root + root.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_reproduces_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = symmetric_sqrt(&a).unwrap();
        let back = &s * s.transpose();
        assert!((back - &a).abs().max() < 1e-12);
        assert!((s.clone() - s.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn clamps_tiny_negative_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-13]);
        let s = symmetric_sqrt(&a).unwrap();
        assert!(s[(1, 1)] == 0.0);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert!(matches!(
            symmetric_sqrt(&a),
            Err(AveragingError::IndefiniteCovariance { .. })
        ));
    }
}
