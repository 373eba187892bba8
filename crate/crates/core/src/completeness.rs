//! The one-extra-round near-perfect-completeness transformation.
//!
//! The original proof system is abstracted by its purified final state
//! `√(1−p)|0⟩|φ₀⟩ + √p|1⟩|φ₁⟩`. The extra round pseudo-copies the
//! verifier's answer qubit, runs a controlled backward exchange turning
//! `φ₁` into `φ₀`, and measures against
//! `√(1−c)|0 0^m⟩ + √c|1 1^m⟩`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exchange::{ExchangeResource, ShiftDirection};
use crate::statevec::{LocalIsometry, PureState, SubsystemLayout};
use crate::Backend;

/// Dense evaluation budget in amplitudes.
pub const DENSE_BUDGET: usize = 20_000_000;

const ORTHO_TOL: f64 = 1e-12;

/// Purified abstraction of an r-round proof system on a yes/no input.
#[derive(Debug, Clone)]
pub struct ProofSystemModel {
    p: f64,
    c: f64,
    s: f64,
    m: usize,
    phi0: PureState,
    phi1: PureState,
    final_state: PureState,
}

/// Result of one simulated extra round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub acceptance_probability: f64,
    pub n: usize,
    pub m: usize,
    pub backend: Backend,
}

impl ProofSystemModel {
    pub fn new(
        p: f64,
        c: f64,
        s: f64,
        m: usize,
        phi0: PureState,
        phi1: PureState,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!("p = {p} out of [0, 1]")));
        }
        if !(0.0 <= s && s < c && c <= 1.0) {
            return Err(Error::DomainError(format!("need 0 ≤ s < c ≤ 1, got s={s}, c={c}")));
        }
        if m == 0 {
            return Err(Error::DomainError("m must be ≥ 1".into()));
        }
        if phi0.layout() != phi1.layout() {
            return Err(Error::LayoutMismatch);
        }
        if phi0.inner(&phi1)?.norm() > ORTHO_TOL {
            return Err(Error::DomainError("residual states must be orthogonal".into()));
        }
        let d = phi0.dim();
        let mut parts = vec![("A".to_string(), 2)];
        parts.extend(
            phi0.layout()
                .subsystems()
                .iter()
                .map(|s| (s.label.clone(), s.dim)),
        );
        let layout = SubsystemLayout::new(parts)?;
        let mut amps = vec![Complex64::ZERO; 2 * d];
        let (w0, w1) = ((1.0 - p).sqrt(), p.sqrt());
        for (i, a) in phi0.amplitudes().iter().enumerate() {
            amps[i] = w0 * a;
        }
        for (i, a) in phi1.amplitudes().iter().enumerate() {
            amps[d + i] = w1 * a;
        }
        let final_state = PureState::new(layout, amps)?;
        Ok(ProofSystemModel { p, c, s, m, phi0, phi1, final_state })
    }

    /// Smallest faithful model: φ₀ = |0⟩, φ₁ = |1⟩ on one combined
    /// residual register P.
    pub fn with_basis_residuals(p: f64, c: f64, s: f64, m: usize) -> Result<Self> {
        let layout = SubsystemLayout::new(vec![("P", 2)])?;
        let phi0 = PureState::basis(layout.clone(), &[0])?;
        let phi1 = PureState::basis(layout, &[1])?;
        Self::new(p, c, s, m, phi0, phi1)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn phi0(&self) -> &PureState {
        &self.phi0
    }

    pub fn phi1(&self) -> &PureState {
        &self.phi1
    }

    /// `√(1−p)|0⟩|φ₀⟩ + √p|1⟩|φ₁⟩` on (A, residuals).
    pub fn final_state(&self) -> &PureState {
        &self.final_state
    }
}

/// The verifier's single-qubit rotation:
/// `|0⟩ ↦ √(1−c)|0⟩ − √c|1⟩`, `|1⟩ ↦ √c|0⟩ + √(1−c)|1⟩`.
pub fn verifier_rotation(c: f64) -> Result<LocalIsometry> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::DomainError(format!("c = {c} out of [0, 1]")));
    }
    let layout = SubsystemLayout::new(vec![("A", 2)])?;
    let (r0, r1) = ((1.0 - c).sqrt(), c.sqrt());
    let m = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(r0, 0.0),
            Complex64::new(r1, 0.0),
            Complex64::new(-r1, 0.0),
            Complex64::new(r0, 0.0),
        ],
    );
    LocalIsometry::new(layout.clone(), layout, m)
}

/// Basis-controlled fan-out `|b⟩|0^m⟩ ↦ |b⟩|b^m⟩` into fresh registers
/// labeled `{source}#c1 … {source}#cm`.
pub fn pseudo_copy(state: &PureState, source_label: &str, m: usize) -> Result<PureState> {
    let layout = state.layout();
    let pos = layout
        .position(source_label)
        .ok_or_else(|| Error::UnknownLabel(source_label.to_string()))?;
    if layout.dim_at(pos) != 2 {
        return Err(Error::NotAQubit(source_label.to_string()));
    }
    let mut parts: Vec<(String, usize)> = layout
        .subsystems()
        .iter()
        .map(|s| (s.label.clone(), s.dim))
        .collect();
    for i in 1..=m {
        parts.push((format!("{source_label}#c{i}"), 2));
    }
    let new_layout = SubsystemLayout::new(parts)?;
    let block = 1usize << m;
    let mut amps = vec![Complex64::ZERO; state.dim() * block];
    let mut digits = vec![0usize; layout.len()];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        layout.digits(idx, &mut digits);
        let copies = if digits[pos] == 1 { block - 1 } else { 0 };
        amps[idx * block + copies] = *a;
    }
    PureState::new(new_layout, amps)
}

/// Labels of the measured registers: A and its pseudo-copies.
fn measured_labels(m: usize) -> Vec<String> {
    let mut labels = vec!["A".to_string()];
    labels.extend((1..=m).map(|i| format!("A#c{i}")));
    labels
}

/// `√(1−c)|0 0^m⟩ + √c|1 1^m⟩` on the measured registers.
fn accept_vector(c: f64, m: usize) -> Result<PureState> {
    let parts: Vec<(String, usize)> = measured_labels(m).into_iter().map(|l| (l, 2)).collect();
    let layout = SubsystemLayout::new(parts)?;
    let dim = 1usize << (m + 1);
    let mut amps = vec![Complex64::ZERO; dim];
    amps[0] = Complex64::new((1.0 - c).sqrt(), 0.0);
    amps[dim - 1] = Complex64::new(c.sqrt(), 0.0);
    PureState::new(layout, amps)
}

/// Simulate (dense) or evaluate in closed form (gram) the extra round.
pub fn run_final_round(model: &ProofSystemModel, n: usize, backend: Backend) -> Result<RoundOutcome> {
    if n == 0 {
        return Err(Error::DomainError("accuracy parameter N must be ≥ 1".into()));
    }
    let (p, c, m) = (model.p, model.c, model.m);
    let acceptance = match backend {
        Backend::Gram => {
            // branch 0 keeps |E_N⟩, branch 1 leaves the shifted resource
            // with ⟨E_N|E'_N⟩ = 1 − 1/N (the residuals are orthogonal)
            let cross = (p * c * (1.0 - p) * (1.0 - c)).sqrt();
            (1.0 - p) * (1.0 - c) + p * c + 2.0 * cross * (1.0 - 1.0 / n as f64)
        }
        Backend::Dense => {
            let d = model.phi0.dim();
            let resource_dim = d
                .checked_pow((n + 1) as u32)
                .ok_or(Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET })?;
            let total = resource_dim
                .checked_mul(2 * d)
                .and_then(|t| t.checked_mul(1usize << m))
                .ok_or(Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET })?;
            if total > DENSE_BUDGET {
                return Err(Error::TooLarge { got: total, budget: DENSE_BUDGET });
            }
            let fanned = pseudo_copy(&model.final_state, "A", m)?;
            let resource = ExchangeResource::build(&model.phi0, &model.phi1, n)?;
            let controls_owned = measured_labels(m);
            let controls: Vec<&str> = controls_owned.iter().map(|s| s.as_str()).collect();
            let exchanged = resource.controlled_exchange(&fanned, &controls, ShiftDirection::Backward)?;
            exchanged.projection_probability(&controls, &accept_vector(c, m)?)?
        }
    };
    Ok(RoundOutcome { acceptance_probability: acceptance, n, m, backend })
}

/// Yes-case acceptance at p = c: `1 − 2c(1−c)/N`.
pub fn yes_acceptance_formula(c: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::DomainError(format!("c = {c} out of [0, 1]")));
    }
    if n == 0 {
        return Err(Error::DomainError("accuracy parameter N must be ≥ 1".into()));
    }
    Ok(1.0 - 2.0 * c * (1.0 - c) / n as f64)
}

/// No-case ceiling `(√(sc) + √((1−s)(1−c)))²` together with the coarser
/// cap `1 − (c−s)²`.
pub fn no_case_ceiling(c: f64, s: f64) -> Result<(f64, f64)> {
    if !(0.0 <= s && s <= c && c <= 1.0) {
        return Err(Error::DomainError(format!("need 0 ≤ s ≤ c ≤ 1, got s={s}, c={c}")));
    }
    let ceiling = ((s * c).sqrt() + ((1.0 - s) * (1.0 - c)).sqrt()).powi(2);
    let cap = 1.0 - (c - s) * (c - s);
    debug_assert!(ceiling <= cap + 1e-12);
    Ok((ceiling, cap))
}
