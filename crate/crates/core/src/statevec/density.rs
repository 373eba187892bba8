use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::layout::SubsystemLayout;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-12;

/// Positive semidefinite, trace-one operator over a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    layout: SubsystemLayout,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(layout: SubsystemLayout, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch);
        }
        let mut herm_dev = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                herm_dev = herm_dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_dev > HERMITIAN_TOL {
            return Err(Error::DomainError(format!(
                "matrix is not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let trace: Complex64 = (0..d).map(|i| matrix[(i, i)]).sum();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::DomainError(format!("trace is {trace}, expected 1")));
        }
        let op = DensityOperator { layout, matrix };
        let min_eig = op.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < EIGEN_FLOOR {
            return Err(Error::DomainError(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(op)
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real eigenvalue spectrum (unsorted, tiny negatives clipped to 0).
    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .map(|&l| if l < 0.0 && l > EIGEN_FLOOR { 0.0 } else { l })
            .collect()
    }

    /// Principal square root via eigendecomposition.
    pub(crate) fn sqrtm(&self) -> DMatrix<Complex64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let q = eig.eigenvectors;
        let mut s = DMatrix::<Complex64>::zeros(self.dim(), self.dim());
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            s[(i, i)] = Complex64::new(l.max(0.0).sqrt(), 0.0);
        }
        &q * s * q.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_hermitian_rejected() {
        let l = SubsystemLayout::new(vec![("q", 2)]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.3, 0.0),
            Complex64::new(0.5, 0.0),
        ]);
        assert!(DensityOperator::new(l, m).is_err());
    }

    #[test]
    fn maximally_mixed_accepted() {
        let l = SubsystemLayout::new(vec![("q", 2)]).unwrap();
        let m = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        let rho = DensityOperator::new(l, m).unwrap();
        let mut eigs = rho.eigenvalues();
        eigs.sort_by(f64::total_cmp);
        assert!((eigs[0] - 0.5).abs() < 1e-14 && (eigs[1] - 0.5).abs() < 1e-14);
    }
}
