//! The two-player cooperative quantum game: referee, prescribed strategy
//! family, exact win-probability evaluation, and the entanglement-dimension
//! upper bound with its verification chain.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exchange::{overlap_formula, ExchangeResource};
use crate::statevec::{entropy, fidelity, trace_distance, LocalIsometry, PureState, SubsystemLayout};
use crate::Backend;

/// Dense evaluation budget in amplitudes.
pub const DENSE_BUDGET: usize = 20_000_000;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Referee data: initial state on (R, S, T) and accept vector on (R, A, B).
#[derive(Debug, Clone)]
pub struct GameSpec {
    initial: PureState,
    accept: PureState,
}

/// φ = (|11⟩ + |22⟩)/√2 on the qutrit pair (S, T).
pub fn phi_state() -> PureState {
    let layout = SubsystemLayout::new(vec![("S", 3), ("T", 3)]).unwrap();
    let mut amps = vec![Complex64::ZERO; 9];
    amps[4] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[8] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(layout, amps).unwrap()
}

impl GameSpec {
    pub fn new() -> Self {
        // (|0⟩|00⟩ + |1⟩|φ⟩)/√2 on R(2), S(3), T(3)
        let layout = SubsystemLayout::new(vec![("R", 2), ("S", 3), ("T", 3)]).unwrap();
        let mut amps = vec![Complex64::ZERO; 18];
        amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let phi = phi_state();
        for (i, a) in phi.amplitudes().iter().enumerate() {
            amps[9 + i] = FRAC_1_SQRT_2 * a;
        }
        let initial = PureState::new(layout, amps).unwrap();

        // γ = (|000⟩ + |111⟩)/√2 on (R, A, B); the paper's display omits
        // the division, read as a typographical slip.
        let g_layout = SubsystemLayout::new(vec![("R", 2), ("A", 2), ("B", 2)]).unwrap();
        let mut g = vec![Complex64::ZERO; 8];
        g[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        g[7] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let accept = PureState::new(g_layout, g).unwrap();
        GameSpec { initial, accept }
    }

    pub fn initial_state(&self) -> &PureState {
        &self.initial
    }

    pub fn accept_vector(&self) -> &PureState {
        &self.accept
    }

    /// Probability of referee outcome 1 on a returned state containing
    /// (R, A, B) plus arbitrary residual registers.
    pub fn referee_outcome_probability(&self, returned: &PureState) -> Result<f64> {
        for l in ["R", "A", "B"] {
            if returned.layout().position(l).is_none() {
                return Err(Error::MissingRegisters(l.to_string()));
            }
        }
        returned.projection_probability(&["R", "A", "B"], &self.accept)
    }
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::new()
    }
}

/// A full strategy: shared state of per-party dimension `d` plus one
/// local isometry per player mapping (S ⊗ X_A) → (A ⊗ Y_A) and likewise
/// for Bob. Answer registers A and B are single qubits.
#[derive(Debug, Clone)]
pub struct Strategy {
    d: usize,
    shared: PureState,
    alice: LocalIsometry,
    bob: LocalIsometry,
    /// Set when this is the prescribed strategy for accuracy N, which the
    /// gram backend can score in closed form.
    prescribed_n: Option<usize>,
}

impl Strategy {
    pub fn new(shared: PureState, alice: LocalIsometry, bob: LocalIsometry) -> Result<Self> {
        let l = shared.layout();
        if l.len() != 2 || l.dim_at(0) != l.dim_at(1) {
            return Err(Error::DimensionMismatch);
        }
        let d = l.dim_at(0);
        check_player(&alice, "S", "XA", "A", d)?;
        check_player(&bob, "T", "XB", "B", d)?;
        Ok(Strategy { d, shared, alice, bob, prescribed_n: None })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shared_state(&self) -> &PureState {
        &self.shared
    }

    pub fn alice(&self) -> &LocalIsometry {
        &self.alice
    }

    pub fn bob(&self) -> &LocalIsometry {
        &self.bob
    }

    pub fn prescribed_n(&self) -> Option<usize> {
        self.prescribed_n
    }

    /// Branch operator `A_b = (⟨b| ⊗ I) A` (rows of the isometry with the
    /// answer qubit fixed to `b`).
    pub fn alice_branch(&self, b: usize) -> DMatrix<Complex64> {
        branch(self.alice.matrix(), b)
    }

    pub fn bob_branch(&self, b: usize) -> DMatrix<Complex64> {
        branch(self.bob.matrix(), b)
    }
}

fn branch(m: &DMatrix<Complex64>, b: usize) -> DMatrix<Complex64> {
    let y = m.nrows() / 2;
    m.rows(b * y, y).into_owned()
}

fn check_player(
    op: &LocalIsometry,
    in_reg: &str,
    in_shared: &str,
    out_answer: &str,
    d: usize,
) -> Result<()> {
    let inp = op.input();
    if inp.len() != 2
        || inp.label_at(0) != in_reg
        || inp.dim_at(0) != 3
        || inp.label_at(1) != in_shared
        || inp.dim_at(1) != d
    {
        return Err(Error::DimensionMismatch);
    }
    let out = op.output();
    if out.len() != 2 || out.label_at(0) != out_answer || out.dim_at(0) != 2 {
        return Err(Error::DimensionMismatch);
    }
    Ok(())
}

/// The strategy family that wins with probability 1 − 1/(2N): mark the
/// answer qubit with the unitary U (|0,0⟩↦|0,0⟩, |1,0⟩↦|1,1⟩, |2,0⟩↦|2,1⟩),
/// then run a controlled cyclic shift turning φ into |00⟩ against the
/// shared resource |E_N⟩. Shared per-party dimension is 3^(N+1).
pub fn prescribed_strategy(n: usize) -> Result<Strategy> {
    if n == 0 {
        return Err(Error::DomainError("N must be ≥ 1".into()));
    }
    3usize
        .checked_pow((n + 1) as u32)
        .filter(|&d| d.checked_mul(d).map(|t| t <= DENSE_BUDGET).unwrap_or(false))
        .ok_or(Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET })?;

    // shared |E_N⟩ grouped per player: Alice's N+1 qutrits, then Bob's.
    let pair = SubsystemLayout::new(vec![("a", 3), ("b", 3)]).unwrap();
    let phi = {
        let mut amps = vec![Complex64::ZERO; 9];
        amps[4] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[8] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        PureState::new(pair.clone(), amps).unwrap()
    };
    let ket00 = PureState::basis(pair, &[0, 0]).unwrap();
    let resource = ExchangeResource::build(&phi, &ket00, n)?;
    // copies are interleaved (a@1, b@1, a@2, b@2, ...); group per player
    let mut order = Vec::with_capacity(2 * (n + 1));
    for t in 0..=n {
        order.push(2 * t);
    }
    for t in 0..=n {
        order.push(2 * t + 1);
    }
    let shared = resource
        .resource_state()
        .reordered(&order)
        .coalesced(&[("XA", n + 1), ("XB", n + 1)])?;

    let alice = prescribed_player("S", "XA", "A", "YA", n)?;
    let bob = prescribed_player("T", "XB", "B", "YB", n)?;
    let mut s = Strategy::new(shared, alice, bob)?;
    s.prescribed_n = Some(n);
    Ok(s)
}

/// One player's prescribed isometry: adjoin the |0⟩ answer qubit, apply
/// the marking unitary U on (register, answer), then a controlled cyclic
/// shift of the register plus the player's N+1 resource qutrits.
fn prescribed_player(
    in_reg: &str,
    in_shared: &str,
    out_answer: &str,
    out_rest: &str,
    n: usize,
) -> Result<LocalIsometry> {
    let chain = n + 2; // register + N+1 resource qutrits
    let in_dim = 3usize.pow(chain as u32);
    let out_dim = 2 * in_dim;
    let d_shared = 3usize.pow((n + 1) as u32);
    let input = SubsystemLayout::new(vec![(in_reg.to_string(), 3), (in_shared.to_string(), d_shared)])?;
    let output = SubsystemLayout::new(vec![(out_answer.to_string(), 2), (out_rest.to_string(), in_dim)])?;

    let mut m = DMatrix::<Complex64>::zeros(out_dim, in_dim);
    let mut digits = vec![0usize; chain];
    for col in 0..in_dim {
        // digits: register value, then the chain of resource qutrits
        let mut c = col;
        for i in (0..chain).rev() {
            digits[i] = c % 3;
            c /= 3;
        }
        let answer = usize::from(digits[0] != 0);
        let mut out_digits = digits.clone();
        if answer == 1 {
            // forward cycle: position i receives the contents of i-1
            for i in 0..chain {
                out_digits[i] = digits[(i + chain - 1) % chain];
            }
        }
        let mut rest = 0usize;
        for &d in &out_digits {
            rest = rest * 3 + d;
        }
        m[(answer * in_dim + rest, col)] = Complex64::ONE;
    }
    LocalIsometry::new(input, output, m)
}

/// Exact win probability of a strategy against the referee.
pub fn play(strategy: &Strategy, backend: Backend) -> Result<f64> {
    match backend {
        Backend::Dense => {
            let spec = GameSpec::new();
            let total = 18usize
                .checked_mul(strategy.shared.dim())
                .map(|t| t * 4) // answer qubits enlarge by ≤ 4/9 per player; bound loosely
                .ok_or(Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET })?;
            if total > DENSE_BUDGET {
                return Err(Error::TooLarge { got: total, budget: DENSE_BUDGET });
            }
            let state = spec.initial_state().tensor(&strategy.shared)?;
            let state = state.apply_local(&strategy.alice)?;
            let state = state.apply_local(&strategy.bob)?;
            spec.referee_outcome_probability(&state)
        }
        Backend::Gram => {
            let n = strategy.prescribed_n.ok_or(Error::UnsupportedStrategy)?;
            play_prescribed(n, Backend::Gram)
        }
    }
}

/// Win probability of the prescribed strategy for accuracy N.
pub fn play_prescribed(n: usize, backend: Backend) -> Result<f64> {
    match backend {
        Backend::Dense => play(&prescribed_strategy(n)?, Backend::Dense),
        Backend::Gram => {
            if n == 0 {
                return Err(Error::DomainError("N must be ≥ 1".into()));
            }
            // ‖(|E⟩ + |E'⟩)/2‖² = (1 + ⟨E'|E⟩)/2
            Ok(0.5 * (1.0 + overlap_formula(n, 0.0)?))
        }
    }
}

/// Fannes-derived cap on the win probability with per-party shared
/// dimension d: `1 − 1/(32 log₂²(3d))`.
pub fn fannes_upper_bound(d: usize) -> f64 {
    let l = (3.0 * d as f64).log2();
    1.0 - 1.0 / (32.0 * l * l)
}

/// The three quantities of the impossibility chain, plus the entropy
/// deficit between ρ (Alice's side of |φ⟩|ψ⟩) and ξ (her side of
/// (U_A ⊗ U_B)|00⟩|ψ⟩).
#[derive(Debug, Clone)]
pub struct ChainReport {
    /// `|⟨φ,ψ| U_A ⊗ U_B |00,ψ⟩|`.
    pub overlap: f64,
    /// `F(ρ, ξ)`.
    pub fidelity: f64,
    /// `√(1 − ¼‖ρ−ξ‖₁²)`.
    pub fvg_cap: f64,
    /// `S(ρ) − S(ξ)` in bits (provably 1).
    pub entropy_deficit: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Verify the Fuchs–van de Graaf chain on supplied prover unitaries.
/// `u_a` must be unitary on (S, XA) and `u_b` on (T, XB).
pub fn bound_chain_check(
    strategy: &Strategy,
    u_a: &LocalIsometry,
    u_b: &LocalIsometry,
) -> Result<ChainReport> {
    if !u_a.is_unitary() || !u_b.is_unitary() {
        return Err(Error::NotUnitary);
    }
    let psi = &strategy.shared;
    let phi = phi_state();
    let st = SubsystemLayout::new(vec![("S", 3), ("T", 3)])?;
    let ket00 = PureState::basis(st, &[0, 0])?;

    let target = phi.tensor(psi)?; // |φ⟩|ψ⟩ on (S, T, XA, XB)
    let start = ket00.tensor(psi)?;
    let rotated_a = start.apply_local(u_a)?;
    let rotated = rotated_a.apply_local(u_b)?;
    // apply_local regroups registers; realign with the target's order
    let order: Vec<usize> = target
        .layout()
        .labels()
        .iter()
        .map(|l| rotated.layout().position(l).ok_or(Error::LayoutMismatch))
        .collect::<Result<_>>()?;
    let rotated = rotated.reordered(&order);

    let overlap = target.inner(&rotated)?.norm();
    let rho = target.reduce(&["S", "XA"])?;
    let xi = rotated_a.reduce(&["S", "XA"])?;
    let f = fidelity(&rho, &xi)?;
    let t = trace_distance(&rho, &xi)?;
    let fvg_cap = (1.0 - 0.25 * t * t).max(0.0).sqrt();
    let deficit = entropy(&rho) - entropy(&xi);
    Ok(ChainReport {
        overlap,
        fidelity: f,
        fvg_cap,
        entropy_deficit: deficit,
        lower_holds: overlap <= f + 1e-9,
        upper_holds: f <= fvg_cap + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_component_of_gamma_is_one() {
        let spec = GameSpec::new();
        let extra = PureState::basis(SubsystemLayout::new(vec![("junk", 3)]).unwrap(), &[2]).unwrap();
        let s = spec.accept_vector().tensor(&extra).unwrap();
        assert!((spec.referee_outcome_probability(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_return_loses() {
        let spec = GameSpec::new();
        let layout = SubsystemLayout::new(vec![("R", 2), ("A", 2), ("B", 2)]).unwrap();
        let s = PureState::basis(layout, &[0, 0, 1]).unwrap();
        assert!(spec.referee_outcome_probability(&s).unwrap() < 1e-12);
    }

    #[test]
    fn missing_registers_rejected() {
        let spec = GameSpec::new();
        let s = PureState::basis(SubsystemLayout::new(vec![("R", 2)]).unwrap(), &[0]).unwrap();
        assert_eq!(
            spec.referee_outcome_probability(&s).unwrap_err(),
            Error::MissingRegisters("A".into())
        );
    }

    #[test]
    fn prescribed_values_small_n() {
        for n in 1..=2usize {
            let p = play_prescribed(n, Backend::Dense).unwrap();
            let want = 1.0 - 1.0 / (2.0 * n as f64);
            assert!((p - want).abs() < 1e-10, "N={n}: {p} vs {want}");
        }
    }

    #[test]
    fn gram_matches_dense_at_n1() {
        let d = play_prescribed(1, Backend::Dense).unwrap();
        let g = play_prescribed(1, Backend::Gram).unwrap();
        assert!((d - g).abs() < 1e-10);
        assert!((g - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gram_large_n() {
        assert!((play_prescribed(10, Backend::Gram).unwrap() - 0.95).abs() < 1e-15);
        let p = play_prescribed(1_000_000, Backend::Gram).unwrap();
        assert!((p - (1.0 - 5e-7)).abs() < 1e-15);
    }

    #[test]
    fn gram_rejects_free_form_strategy() {
        let s = crate::optimizer::random_strategy(2, 6, 7).unwrap();
        assert_eq!(play(&s, Backend::Gram).unwrap_err(), Error::UnsupportedStrategy);
    }

    /// Players return fresh |0⟩ answer qubits and keep S, T untouched.
    fn do_nothing_strategy() -> Strategy {
        let shared = PureState::basis(
            SubsystemLayout::new(vec![("XA", 1), ("XB", 1)]).unwrap(),
            &[0, 0],
        )
        .unwrap();
        let embed = |in_reg: &str, in_shared: &str, out_answer: &str, out_rest: &str| {
            let input = SubsystemLayout::new(vec![(in_reg.to_string(), 3), (in_shared.to_string(), 1)]).unwrap();
            let output = SubsystemLayout::new(vec![(out_answer.to_string(), 2), (out_rest.to_string(), 3)]).unwrap();
            let mut m = DMatrix::<Complex64>::zeros(6, 3);
            for s in 0..3 {
                m[(s, s)] = Complex64::ONE;
            }
            LocalIsometry::new(input, output, m).unwrap()
        };
        Strategy::new(
            shared,
            embed("S", "XA", "A", "YA"),
            embed("T", "XB", "B", "YB"),
        )
        .unwrap()
    }

    #[test]
    fn do_nothing_strategy_value() {
        // only the R=0 branch overlaps γ and it carries amplitude 1/2:
        // the dense oracle gives 1/4.
        let p = play(&do_nothing_strategy(), Backend::Dense).unwrap();
        assert!((p - 0.25).abs() < 1e-12, "got {p}");
    }

    /// Mark the answer qubit with U but skip the exchange step.
    fn marking_only_strategy() -> Strategy {
        let shared = PureState::basis(
            SubsystemLayout::new(vec![("XA", 1), ("XB", 1)]).unwrap(),
            &[0, 0],
        )
        .unwrap();
        let mark = |in_reg: &str, in_shared: &str, out_answer: &str, out_rest: &str| {
            let input = SubsystemLayout::new(vec![(in_reg.to_string(), 3), (in_shared.to_string(), 1)]).unwrap();
            let output = SubsystemLayout::new(vec![(out_answer.to_string(), 2), (out_rest.to_string(), 3)]).unwrap();
            let mut m = DMatrix::<Complex64>::zeros(6, 3);
            for s in 0..3 {
                let answer = usize::from(s != 0);
                m[(answer * 3 + s, s)] = Complex64::ONE;
            }
            LocalIsometry::new(input, output, m).unwrap()
        };
        Strategy::new(shared, mark("S", "XA", "A", "YA"), mark("T", "XB", "B", "YB")).unwrap()
    }

    #[test]
    fn marking_only_strategy_value() {
        let p = play(&marking_only_strategy(), Backend::Dense).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn fannes_bound_values() {
        let b1 = fannes_upper_bound(1);
        assert!((b1 - 0.9875602389393207).abs() < 1e-12, "got {b1}");
        for k in 0..20 {
            let d = 1usize << k;
            assert!(fannes_upper_bound(d) < fannes_upper_bound(2 * d));
            assert!(fannes_upper_bound(d) < 1.0);
        }
    }

    #[test]
    fn prescribed_value_below_its_fannes_bound() {
        for n in 1..=20usize {
            let value = 1.0 - 1.0 / (2.0 * n as f64);
            let d = 3f64.powi((n + 1) as i32);
            let l = (3.0 * d).log2();
            let bound = 1.0 - 1.0 / (32.0 * l * l);
            assert!(value <= bound, "N={n}");
        }
    }

    #[test]
    fn identity_chain_has_unit_deficit() {
        let shared = PureState::basis(
            SubsystemLayout::new(vec![("XA", 1), ("XB", 1)]).unwrap(),
            &[0, 0],
        )
        .unwrap();
        let s = do_nothing_strategy();
        let _ = shared;
        let ua = LocalIsometry::identity(
            SubsystemLayout::new(vec![("S", 3), ("XA", 1)]).unwrap(),
        );
        let ub = LocalIsometry::identity(
            SubsystemLayout::new(vec![("T", 3), ("XB", 1)]).unwrap(),
        );
        let report = bound_chain_check(&s, &ua, &ub).unwrap();
        assert!((report.entropy_deficit - 1.0).abs() < 1e-10);
        assert!(report.lower_holds && report.upper_holds);
    }
}
