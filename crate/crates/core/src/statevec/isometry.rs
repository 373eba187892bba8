use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::layout::SubsystemLayout;

/// Tolerance for the isometry condition `V†V = I`.
pub const ISOMETRY_TOL: f64 = 1e-12;

/// A linear isometry from one labelled product space to another.
///
/// The matrix maps the input product space (columns) to the output
/// product space (rows), both flattened leftmost-slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalIsometry {
    input: SubsystemLayout,
    output: SubsystemLayout,
    matrix: DMatrix<Complex64>,
}

impl LocalIsometry {
    pub fn new(
        input: SubsystemLayout,
        output: SubsystemLayout,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        let in_dim = input.total_dim();
        let out_dim = output.total_dim();
        if matrix.nrows() != out_dim || matrix.ncols() != in_dim {
            return Err(Error::DimensionMismatch);
        }
        if out_dim < in_dim {
            return Err(Error::DimensionMismatch);
        }
        let gram = matrix.adjoint() * &matrix;
        let mut dev = 0.0f64;
        for i in 0..in_dim {
            for j in 0..in_dim {
                let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
                dev = dev.max((gram[(i, j)] - want).norm());
            }
        }
        if dev > ISOMETRY_TOL {
            return Err(Error::NotIsometry(dev));
        }
        Ok(LocalIsometry { input, output, matrix })
    }

    /// Identity on the given layout.
    pub fn identity(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        LocalIsometry {
            input: layout.clone(),
            output: layout,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn input(&self) -> &SubsystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SubsystemLayout {
        &self.output
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.input.total_dim() == self.output.total_dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_isometry_rejected() {
        let l = SubsystemLayout::new(vec![("q", 2)]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::ONE,
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
        ]);
        assert!(matches!(
            LocalIsometry::new(l.clone(), l, m).unwrap_err(),
            Error::NotIsometry(_)
        ));
    }

    #[test]
    fn shrinking_map_rejected() {
        let l2 = SubsystemLayout::new(vec![("q", 2)]).unwrap();
        let l1 = SubsystemLayout::new(vec![("r", 1)]).unwrap();
        let m = DMatrix::from_row_slice(1, 2, &[Complex64::ONE, Complex64::ZERO]);
        assert_eq!(LocalIsometry::new(l2, l1, m).unwrap_err(), Error::DimensionMismatch);
    }
}
