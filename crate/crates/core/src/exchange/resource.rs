use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{LocalIsometry, PureState, SubsystemLayout};

/// Two states are treated as identical (exchange degenerates to a phase)
/// when their overlap modulus exceeds 1 − this tolerance.
const IDENTICAL_TOL: f64 = 1e-12;

/// Amplitude budget for dense resource states and exchange runs.
pub const DENSE_BUDGET: usize = 20_000_000;

/// How the resource handles a non-orthogonal source/target pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeMethod {
    /// `⟨φ|ψ⟩ = 0`: the plain cyclic-shift resource.
    Orthogonal,
    /// Phase-aligned target `ψ̃ = e^{−iθ}ψ` in the superposition directly.
    DirectNonorthogonal,
    /// Two orthogonal exchanges through an intermediate state `η`.
    ViaIntermediate,
}

impl std::fmt::Display for ExchangeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExchangeMethod::Orthogonal => write!(f, "orthogonal"),
            ExchangeMethod::DirectNonorthogonal => write!(f, "direct_nonorthogonal"),
            ExchangeMethod::ViaIntermediate => write!(f, "via_intermediate"),
        }
    }
}

/// Direction of the cyclic shift: forward turns the source into the
/// target, backward is the inverse shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Forward,
    Backward,
}

/// The shared entangled state enabling coherent exchange of `phi` for
/// `psi`, together with everything recorded about its construction.
#[derive(Debug, Clone)]
pub struct ExchangeResource {
    phi: PureState,
    psi: PureState,
    n: usize,
    a: f64,
    theta: f64,
    psi_tilde: PureState,
    n1: f64,
    resource_state: PureState,
    method: ExchangeMethod,
    /// For `ViaIntermediate`: the φ→η and η→ψ legs.
    legs: Option<Box<(ExchangeResource, ExchangeResource)>>,
}

/// Result of running the exchange procedure.
#[derive(Debug, Clone)]
pub struct ExchangeOutcome {
    /// Contents of the copy-0 registers after the shift (the exact target).
    pub output_state: PureState,
    /// The post-shift resource, normalized.
    pub residual_state: PureState,
    /// `⟨E'_N|E_N⟩`.
    pub residual_overlap: f64,
}

/// Label of copy `t` of data register `label` inside a resource state.
fn copy_label(label: &str, t: usize) -> String {
    format!("{label}@{t}")
}

/// Unnormalized Σ_{k=1}^{N} φ^{⊗(k+shift)} ψ̃^{⊗(N−k+1−shift)} over copies
/// 1..=N+1 of the data layout.
fn superposition(phi: &PureState, psi_tilde: &PureState, n: usize, shift: usize) -> Vec<Complex64> {
    let d = phi.dim();
    let total = d.pow((n + 1) as u32);
    let mut sum = vec![Complex64::ZERO; total];
    for k in 1..=n {
        let phis = k + shift;
        // iterative Kronecker product of n+1 data factors
        let mut term = vec![Complex64::ONE];
        for copy in 1..=(n + 1) {
            let factor = if copy <= phis { phi.amplitudes() } else { psi_tilde.amplitudes() };
            let mut next = Vec::with_capacity(term.len() * d);
            for t in &term {
                for f in factor {
                    next.push(t * f);
                }
            }
            term = next;
        }
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    sum
}

fn resource_layout(data: &SubsystemLayout, n: usize) -> SubsystemLayout {
    let mut parts = Vec::new();
    for t in 1..=(n + 1) {
        for s in data.subsystems() {
            parts.push((copy_label(&s.label, t), s.dim));
        }
    }
    SubsystemLayout::new(parts).expect("copy labels are unique by construction")
}

impl ExchangeResource {
    /// Construct `(1/√N₁) Σ_{k=1}^{N} φ^{⊗k} ψ̃^{⊗(N−k+1)}` with
    /// `ψ̃ = e^{−iθ}ψ` the phase-aligned target.
    pub fn build(phi: &PureState, psi: &PureState, n: usize) -> Result<Self> {
        if phi.layout() != psi.layout() {
            return Err(Error::LayoutMismatch);
        }
        if n == 0 {
            return Err(Error::DomainError("accuracy parameter N must be ≥ 1".into()));
        }
        let ip = phi.inner(psi)?;
        let a = ip.norm();
        if a > 1.0 - IDENTICAL_TOL {
            return Err(Error::IdenticalStates);
        }
        let theta = if a == 0.0 { 0.0 } else { ip.arg() };
        let psi_tilde = psi.phased(Complex64::from_polar(1.0, -theta));

        let total = phi.dim().checked_pow((n + 1) as u32).unwrap_or(usize::MAX);
        if total > DENSE_BUDGET {
            return Err(Error::TooLarge { got: total, budget: DENSE_BUDGET });
        }
        let raw = superposition(phi, &psi_tilde, n, 0);
        let n1 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let inv = Complex64::new(1.0 / n1.sqrt(), 0.0);
        let amps = raw.into_iter().map(|c| c * inv).collect();
        let layout = resource_layout(phi.layout(), n);
        let resource_state = PureState::new(layout, amps)?;
        let method = if a == 0.0 {
            ExchangeMethod::Orthogonal
        } else {
            ExchangeMethod::DirectNonorthogonal
        };
        Ok(ExchangeResource {
            phi: phi.clone(),
            psi: psi.clone(),
            n,
            a,
            theta,
            psi_tilde,
            n1,
            resource_state,
            method,
            legs: None,
        })
    }

    /// Non-orthogonal exchange through an intermediate state `η` orthogonal
    /// to both `φ` and `ψ`; the resource takes the form `|E_N⟩|F_N⟩`.
    pub fn build_via_intermediate(phi: &PureState, psi: &PureState, n: usize) -> Result<Self> {
        if phi.layout() != psi.layout() {
            return Err(Error::LayoutMismatch);
        }
        if phi.dim() < 3 {
            return Err(Error::DimensionTooSmall);
        }
        let combined = phi
            .dim()
            .checked_pow(2 * (n + 1) as u32)
            .unwrap_or(usize::MAX);
        if combined > DENSE_BUDGET {
            return Err(Error::TooLarge { got: combined, budget: DENSE_BUDGET });
        }
        let eta = pick_intermediate(phi, psi)?;
        let leg1 = ExchangeResource::build(phi, &eta, n)?;
        let leg2 = ExchangeResource::build(&eta, psi, n)?;
        let e_part = leg1.resource_state.relabeled(|l| format!("E.{l}"));
        let f_part = leg2.resource_state.relabeled(|l| format!("F.{l}"));
        let resource_state = e_part.tensor(&f_part)?;
        let ip = phi.inner(psi)?;
        let a = ip.norm();
        let theta = if a == 0.0 { 0.0 } else { ip.arg() };
        Ok(ExchangeResource {
            phi: phi.clone(),
            psi: psi.clone(),
            n,
            a,
            theta,
            psi_tilde: psi.phased(Complex64::from_polar(1.0, -theta)),
            n1: leg1.n1 * leg2.n1,
            resource_state,
            method: ExchangeMethod::ViaIntermediate,
            legs: Some(Box::new((leg1, leg2))),
        })
    }

    pub fn phi(&self) -> &PureState {
        &self.phi
    }

    pub fn psi(&self) -> &PureState {
        &self.psi
    }

    pub fn accuracy(&self) -> usize {
        self.n
    }

    /// `a = |⟨φ|ψ⟩|`.
    pub fn overlap_modulus(&self) -> f64 {
        self.a
    }

    /// Phase of `⟨φ|ψ⟩`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn psi_tilde(&self) -> &PureState {
        &self.psi_tilde
    }

    /// The normalization `N₁` actually measured on the dense state.
    pub fn normalization(&self) -> f64 {
        self.n1
    }

    pub fn resource_state(&self) -> &PureState {
        &self.resource_state
    }

    pub fn method(&self) -> ExchangeMethod {
        self.method
    }

    /// Dense `|E'_N⟩`, the resource after a forward shift.
    pub fn residual_state_dense(&self) -> Result<PureState> {
        if self.method == ExchangeMethod::ViaIntermediate {
            return Err(Error::BackendUnsupported);
        }
        let raw = superposition(&self.phi, &self.psi_tilde, self.n, 1);
        let inv = Complex64::new(1.0 / self.n1.sqrt(), 0.0);
        let amps: Vec<_> = raw.into_iter().map(|c| c * inv).collect();
        PureState::new(resource_layout(self.phi.layout(), self.n), amps)
    }

    /// Gram matrix `G[k,l] = ⟨term_k|term_l⟩ = a^{|k−l|}` of the resource
    /// terms `φ^{⊗k} ψ̃^{⊗(N−k+1)}`, exported for inspection.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |k, l| {
            self.a.powi((k as i32 - l as i32).abs())
        })
    }

    /// The unitary that cyclically shifts one player's N+2 registers:
    /// `|x₀…x_{N+1}⟩ ↦ |x_{N+1}x₀…x_N⟩` (backward is the inverse).
    pub fn shift_isometry(&self, player: usize, direction: ShiftDirection) -> Result<LocalIsometry> {
        let data = self.phi.layout();
        if player >= data.len() {
            return Err(Error::UnknownLabel(format!("player {player}")));
        }
        let label = data.label_at(player);
        let d = data.dim_at(player);
        let n = self.n;
        let regs = n + 2;
        let dim = d.checked_pow(regs as u32).filter(|&x| x <= DENSE_BUDGET).ok_or(
            Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET },
        )?;
        let parts: Vec<_> = (0..regs).map(|t| (copy_label(label, t), d)).collect();
        let layout = SubsystemLayout::new(parts)?;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        let mut digits = vec![0usize; regs];
        let mut out_digits = vec![0usize; regs];
        for col in 0..dim {
            layout.digits(col, &mut digits);
            for t in 0..regs {
                let src = match direction {
                    ShiftDirection::Forward => (t + regs - 1) % regs,
                    ShiftDirection::Backward => (t + 1) % regs,
                };
                out_digits[t] = digits[src];
            }
            m[(layout.flat_index(&out_digits), col)] = Complex64::ONE;
        }
        LocalIsometry::new(layout.clone(), layout, m)
    }

    /// Run the plain (uncontrolled) exchange: forward maps the source
    /// `φ` to `ψ`, backward maps `ψ` to `φ`.
    pub fn exchange(&self, input: &PureState, direction: ShiftDirection) -> Result<ExchangeOutcome> {
        if let Some(legs) = &self.legs {
            let (leg1, leg2) = legs.as_ref();
            return match direction {
                ShiftDirection::Forward => {
                    let first = leg1.exchange(input, ShiftDirection::Forward)?;
                    let second = leg2.exchange(&first.output_state, ShiftDirection::Forward)?;
                    compose_outcomes(second.output_state.clone(), &first, &second)
                }
                ShiftDirection::Backward => {
                    let first = leg2.exchange(input, ShiftDirection::Backward)?;
                    let second = leg1.exchange(&first.output_state, ShiftDirection::Backward)?;
                    compose_outcomes(second.output_state.clone(), &first, &second)
                }
            };
        }

        let (source, target_aligned, output) = match direction {
            ShiftDirection::Forward => (&self.phi, &self.psi_tilde, &self.psi),
            ShiftDirection::Backward => (&self.psi, &self.phi, &self.phi),
        };
        let fid = input.inner(source).map_err(|_| Error::WrongInput)?.norm();
        if fid < 1.0 - 1e-9 {
            return Err(Error::WrongInput);
        }

        // copy-0 registers come from the input state
        let input0 = input.relabeled(|l| copy_label(l, 0));
        let mut full = input0.tensor(&self.resource_state)?;
        if direction == ShiftDirection::Backward && self.a > 0.0 {
            // a player rotates the input ψ into the phase-aligned ψ̃
            full = full.phased(Complex64::from_polar(1.0, -self.theta));
        }

        let m = self.phi.layout().len();
        let regs = self.n + 2;
        let mut sources = vec![0usize; m * regs];
        for t in 0..regs {
            let src_copy = match direction {
                ShiftDirection::Forward => (t + regs - 1) % regs,
                ShiftDirection::Backward => (t + 1) % regs,
            };
            for j in 0..m {
                sources[t * m + j] = src_copy * m + j;
            }
        }
        let shifted = full.permute_contents(&sources)?;

        // after the shift the copy-0 factor is exactly the aligned target
        // (forward) or φ (backward); project it out and keep the residual.
        let copy0_labels: Vec<String> = self
            .phi
            .layout()
            .labels()
            .iter()
            .map(|l| copy_label(l, 0))
            .collect();
        let copy0_refs: Vec<&str> = copy0_labels.iter().map(|s| s.as_str()).collect();
        let projector = match direction {
            ShiftDirection::Forward => target_aligned.relabeled(|l| copy_label(l, 0)),
            ShiftDirection::Backward => self.phi.relabeled(|l| copy_label(l, 0)),
        };
        let (residual_state, norm) = shifted.project_out(&copy0_refs, &projector)?;
        debug_assert!((norm - 1.0).abs() < 1e-9, "exchange output is exact");

        let overlap = self.resource_state.inner(&residual_state)?;
        Ok(ExchangeOutcome {
            output_state: output.clone(),
            residual_state,
            residual_overlap: overlap.re,
        })
    }

    /// Controlled exchange: conditioned on every control qubit being 1,
    /// shift the data registers (which play the role of copy 0) through
    /// the resource, and let player 1 induce the aligning phase.
    pub fn controlled_exchange(
        &self,
        joint: &PureState,
        control_labels: &[&str],
        direction: ShiftDirection,
    ) -> Result<PureState> {
        if self.method == ExchangeMethod::ViaIntermediate {
            return Err(Error::BackendUnsupported);
        }
        for l in control_labels {
            let pos = joint
                .layout()
                .position(l)
                .ok_or_else(|| Error::UnknownLabel((*l).to_string()))?;
            if joint.layout().dim_at(pos) != 2 {
                return Err(Error::ControlDimMismatch);
            }
        }
        let data = self.phi.layout();
        let m = data.len();
        for s in data.subsystems() {
            let pos = joint
                .layout()
                .position(&s.label)
                .ok_or_else(|| Error::UnknownLabel(s.label.clone()))?;
            if joint.layout().dim_at(pos) != s.dim {
                return Err(Error::DimensionMismatch);
            }
        }

        let full = joint.tensor(&self.resource_state)?;
        let layout = full.layout().clone();
        let n_sub = layout.len();
        let regs = self.n + 2;

        // positions of each data register's chain: copy 0 in the joint
        // state, copies 1..=N+1 in the resource.
        let mut chains = Vec::with_capacity(m);
        for s in data.subsystems() {
            let mut chain = Vec::with_capacity(regs);
            chain.push(layout.position(&s.label).unwrap());
            for t in 1..=(self.n + 1) {
                chain.push(layout.position(&copy_label(&s.label, t)).unwrap());
            }
            chains.push(chain);
        }
        let control_pos = layout.positions(control_labels)?;

        let phase = match direction {
            ShiftDirection::Forward => Complex64::from_polar(1.0, self.theta),
            ShiftDirection::Backward => Complex64::from_polar(1.0, -self.theta),
        };

        let mut out = vec![Complex64::ZERO; full.dim()];
        let mut digits = vec![0usize; n_sub];
        let mut new_digits = vec![0usize; n_sub];
        for (idx, amp) in full.amplitudes().iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            layout.digits(idx, &mut digits);
            if control_pos.iter().all(|&p| digits[p] == 1) {
                new_digits.copy_from_slice(&digits);
                for chain in &chains {
                    for t in 0..regs {
                        let src = match direction {
                            ShiftDirection::Forward => (t + regs - 1) % regs,
                            ShiftDirection::Backward => (t + 1) % regs,
                        };
                        new_digits[chain[t]] = digits[chain[src]];
                    }
                }
                out[layout.flat_index(&new_digits)] += amp * phase;
            } else {
                out[idx] += amp;
            }
        }
        PureState::new(layout, out)
    }
}

fn compose_outcomes(
    output_state: PureState,
    first: &ExchangeOutcome,
    second: &ExchangeOutcome,
) -> Result<ExchangeOutcome> {
    let r1 = first.residual_state.relabeled(|l| format!("E.{l}"));
    let r2 = second.residual_state.relabeled(|l| format!("F.{l}"));
    Ok(ExchangeOutcome {
        output_state,
        residual_state: r1.tensor(&r2)?,
        residual_overlap: first.residual_overlap * second.residual_overlap,
    })
}

/// First standard-basis candidate (after Gram–Schmidt against φ and ψ)
/// with residual norm above 1e-6.
fn pick_intermediate(phi: &PureState, psi: &PureState) -> Result<PureState> {
    let d = phi.dim();
    // orthonormal basis of span{φ, ψ}
    let mut span: Vec<Vec<Complex64>> = vec![phi.amplitudes().to_vec()];
    {
        let ip: Complex64 = phi
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let mut v: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .zip(phi.amplitudes())
            .map(|(p, f)| p - ip * f)
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for c in &mut v {
                *c /= norm;
            }
            span.push(v);
        }
    }
    for i in 0..d {
        let mut v = vec![Complex64::ZERO; d];
        v[i] = Complex64::ONE;
        for b in &span {
            let ip: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (c, x) in v.iter_mut().zip(b) {
                *c -= ip * x;
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for c in &mut v {
                *c /= norm;
            }
            return PureState::new(phi.layout().clone(), v);
        }
    }
    Err(Error::DimensionTooSmall)
}

/// Closed-form normalization
/// `N₁ = (1+a)/(1−a)·N − 2a(1−a^N)/(1−a)²`, with the orthogonal case
/// `N₁ = N` at `a = 0`.
pub fn normalization_n1(n: usize, a: f64) -> Result<f64> {
    check_a(a)?;
    if n == 0 {
        return Err(Error::DomainError("N must be ≥ 1".into()));
    }
    if a == 0.0 {
        return Ok(n as f64);
    }
    let nf = n as f64;
    Ok((1.0 + a) / (1.0 - a) * nf - 2.0 * a * (1.0 - a.powi(n as i32)) / ((1.0 - a) * (1.0 - a)))
}

/// The same normalization as a Gram sum `N + 2 Σ_{d=1}^{N−1} (N−d) a^d`,
/// an independent route used to cross-check the closed form.
pub fn normalization_n1_gram(n: usize, a: f64) -> Result<f64> {
    check_a(a)?;
    if n == 0 {
        return Err(Error::DomainError("N must be ≥ 1".into()));
    }
    let nf = n as f64;
    let mut sum = nf;
    let mut pow = 1.0f64;
    for d in 1..n {
        pow *= a;
        let term = 2.0 * (nf - d as f64) * pow;
        if term < 1e-300 {
            break;
        }
        sum += term;
    }
    Ok(sum)
}

/// Closed-form residual overlap `⟨E'_N|E_N⟩ = 1 − (1−a^N)/N₁`;
/// `1 − 1/N` in the orthogonal case.
pub fn overlap_formula(n: usize, a: f64) -> Result<f64> {
    let n1 = normalization_n1(n, a)?;
    Ok(1.0 - (1.0 - a.powi(n as i32)) / n1)
}

fn check_a(a: f64) -> Result<()> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::DomainError(format!("overlap modulus a={a} must lie in [0, 1)")));
    }
    Ok(())
}
