//! Entropy, fidelity, and trace-distance measures on density operators.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::density::DensityOperator;

/// Eigenvalues below this threshold contribute nothing to the entropy.
const ENTROPY_FLOOR: f64 = 1e-14;

/// Von Neumann entropy in bits (logarithm base 2).
pub fn entropy(rho: &DensityOperator) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&l| l >= ENTROPY_FLOOR)
        .map(|l| -l * l.log2())
        .sum()
}

/// Sum of singular values of an arbitrary complex matrix.
fn trace_norm(m: DMatrix<Complex64>) -> f64 {
    m.singular_values().iter().sum()
}

/// Fidelity `F(ρ,σ) = ‖√ρ√σ‖₁`, clipped to [0, 1].
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.layout() != sigma.layout() {
        return Err(Error::LayoutMismatch);
    }
    let f = trace_norm(rho.sqrtm() * sigma.sqrtm());
    Ok(f.clamp(0.0, 1.0))
}

/// Unnormalized trace distance `‖ρ − σ‖₁` (ranges over [0, 2]).
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.layout() != sigma.layout() {
        return Err(Error::LayoutMismatch);
    }
    Ok(trace_norm(rho.matrix() - sigma.matrix()))
}
