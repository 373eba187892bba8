//! See-saw alternating optimization over bounded-dimension strategies.
//!
//! With all but one factor of the win probability fixed, the remaining
//! sub-problem is solved exactly: an orthogonal-Procrustes step (trace
//! maximization via singular value decomposition) for either player's
//! isometry, and a top-eigenvector problem for the shared state. Each
//! step is an exact maximizer, so the objective never decreases; the
//! values are best-found lower bounds, not certified optima.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{fannes_upper_bound, Strategy, DENSE_BUDGET};
use crate::statevec::{LocalIsometry, PureState, SubsystemLayout};

const SQRT_2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// See-saw run parameters.
#[derive(Debug, Clone)]
pub struct SeesawConfig {
    pub d: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Output-residual dimension per party.
    pub y_dim: usize,
}

impl SeesawConfig {
    /// Defaults: 500 iterations, tol 1e-9, y_dim = 3d.
    pub fn new(d: usize, restarts: usize, seed: u64) -> Self {
        SeesawConfig { d, restarts, max_iters: 500, tol: 1e-9, seed, y_dim: 3 * d }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::DomainError("d, restarts, max_iters must be ≥ 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::DomainError("tol must be > 0".into()));
        }
        if 2 * self.y_dim < 3 * self.d {
            return Err(Error::DomainError(
                "y_dim too small: need 2·y_dim ≥ 3d for an isometry to exist".into(),
            ));
        }
        let cells = 72usize
            .checked_mul(self.d)
            .and_then(|v| v.checked_mul(self.d))
            .and_then(|v| v.checked_mul(self.y_dim))
            .and_then(|v| v.checked_mul(self.y_dim))
            .ok_or(Error::TooLarge { got: usize::MAX, budget: DENSE_BUDGET })?;
        if cells > DENSE_BUDGET {
            return Err(Error::TooLarge { got: cells, budget: DENSE_BUDGET });
        }
        Ok(())
    }
}

/// Result of a full see-saw run.
#[derive(Debug, Clone)]
pub struct SeesawReport {
    pub d: usize,
    pub seed: u64,
    pub best_value: f64,
    pub best_restart: usize,
    pub best_strategy: Strategy,
    /// One monotone value sequence per restart (value after each cycle,
    /// starting with the random initial value).
    pub per_restart_trajectories: Vec<Vec<f64>>,
    pub upper_bound: f64,
}

/// Which factor to re-optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Alice,
    Bob,
    Shared,
}

/// Seeded random strategy: Gaussian shared state (normalized) and
/// QR-orthonormalized Gaussian isometries. Deterministic for fixed seed.
pub fn random_strategy(d: usize, y_dim: usize, seed: u64) -> Result<Strategy> {
    if d == 0 || 2 * y_dim < 3 * d {
        return Err(Error::DomainError("need d ≥ 1 and 2·y_dim ≥ 3d".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shared_amps: Vec<Complex64> = (0..d * d)
        .map(|_| Complex64::new(gauss(&mut rng), gauss(&mut rng)))
        .collect();
    let norm = shared_amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut shared_amps {
        *c /= norm;
    }
    let shared = PureState::new(
        SubsystemLayout::new(vec![("XA", d), ("XB", d)])?,
        shared_amps,
    )?;
    let alice = random_isometry(&mut rng, "S", "XA", "A", "YA", d, y_dim)?;
    let bob = random_isometry(&mut rng, "T", "XB", "B", "YB", d, y_dim)?;
    Strategy::new(shared, alice, bob)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller on open-interval uniforms
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Seeded Haar-style random unitary on a whole layout (QR of a complex
/// Gaussian matrix). Deterministic for fixed seed.
pub fn random_unitary(layout: SubsystemLayout, seed: u64) -> Result<LocalIsometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = layout.total_dim();
    let m = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(gauss(&mut rng), gauss(&mut rng)));
    LocalIsometry::new(layout.clone(), layout, m.qr().q())
}

fn random_isometry(
    rng: &mut ChaCha8Rng,
    in_reg: &str,
    in_shared: &str,
    out_answer: &str,
    out_rest: &str,
    d: usize,
    y: usize,
) -> Result<LocalIsometry> {
    let rows = 2 * y;
    let cols = 3 * d;
    let m = DMatrix::from_fn(rows, cols, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let q = m.qr().q();
    let input = SubsystemLayout::new(vec![(in_reg.to_string(), 3), (in_shared.to_string(), d)])?;
    let output = SubsystemLayout::new(vec![(out_answer.to_string(), 2), (out_rest.to_string(), y)])?;
    LocalIsometry::new(input, output, q)
}

/// Inputs to the two winning branches, regrouped as (S⊗X_A) × (T⊗X_B)
/// coefficient matrices: `W₀` carries |00⟩⊗ψ and `W₁` carries |φ⟩⊗ψ.
fn branch_inputs(strategy: &Strategy) -> [DMatrix<Complex64>; 2] {
    let d = strategy.d();
    let psi = strategy.shared_state().amplitudes();
    let mut w0 = DMatrix::<Complex64>::zeros(3 * d, 3 * d);
    let mut w1 = DMatrix::<Complex64>::zeros(3 * d, 3 * d);
    for i in 0..d {
        for j in 0..d {
            let a = psi[i * d + j];
            w0[(i, j)] = a;
            w1[(d + i, d + j)] = SQRT_2_INV * a;
            w1[(2 * d + i, 2 * d + j)] = SQRT_2_INV * a;
        }
    }
    [w0, w1]
}

/// The accepted-branch coefficient matrix `V = ½ Σ_b A_b W_b B_bᵀ`;
/// the win probability is `‖V‖_F²`.
fn accept_matrix(strategy: &Strategy) -> DMatrix<Complex64> {
    let [w0, w1] = branch_inputs(strategy);
    let half = Complex64::new(0.5, 0.0);
    let mut v = &strategy.alice_branch(0) * w0 * strategy.bob_branch(0).transpose();
    v += &strategy.alice_branch(1) * w1 * strategy.bob_branch(1).transpose();
    v * half
}

/// Win probability evaluated through the branch decomposition.
pub fn objective(strategy: &Strategy) -> f64 {
    accept_matrix(strategy).norm_squared()
}

/// Re-optimize one factor exactly, holding the others fixed. The
/// objective never decreases.
pub fn improve_player(strategy: &Strategy, which: Player) -> Result<Strategy> {
    match which {
        Player::Alice => improve_isometry(strategy, true),
        Player::Bob => improve_isometry(strategy, false),
        Player::Shared => improve_shared(strategy),
    }
}

fn improve_isometry(strategy: &Strategy, alice: bool) -> Result<Strategy> {
    let v = accept_matrix(strategy);
    let norm = v.norm();
    if norm < 1e-15 {
        return Ok(strategy.clone());
    }
    let u = v / Complex64::new(norm, 0.0);
    let [w0, w1] = branch_inputs(strategy);
    let d3 = 3 * strategy.d();
    let half = Complex64::new(0.5, 0.0);

    // environment operator Ĉ (3d × 2y): Re tr(A·Ĉ) is the linearized
    // objective for the stacked isometry A
    let blocks: Vec<DMatrix<Complex64>> = if alice {
        [(w0, 0usize), (w1, 1usize)]
            .into_iter()
            .map(|(w, b)| (w * strategy.bob_branch(b).transpose() * u.adjoint()) * half)
            .collect()
    } else {
        [(w0, 0usize), (w1, 1usize)]
            .into_iter()
            .map(|(w, b)| ((u.adjoint() * strategy.alice_branch(b) * w) * half).transpose())
            .collect()
    };
    let y = blocks[0].ncols();
    let mut c = DMatrix::<Complex64>::zeros(d3, 2 * y);
    c.columns_mut(0, y).copy_from(&blocks[0]);
    c.columns_mut(y, y).copy_from(&blocks[1]);

    let svd = c.svd(true, true);
    let us = svd.u.ok_or(Error::DomainError("SVD failed to converge".into()))?;
    let vt = svd.v_t.ok_or(Error::DomainError("SVD failed to converge".into()))?;
    let new_m = (us * vt).adjoint();

    let (old, other) = if alice { (strategy.alice(), strategy.bob()) } else { (strategy.bob(), strategy.alice()) };
    let new_op = LocalIsometry::new(old.input().clone(), old.output().clone(), new_m)?;
    if alice {
        Strategy::new(strategy.shared_state().clone(), new_op, other.clone())
    } else {
        Strategy::new(strategy.shared_state().clone(), other.clone(), new_op)
    }
}

fn improve_shared(strategy: &Strategy) -> Result<Strategy> {
    let d = strategy.d();
    if d == 1 {
        return Ok(strategy.clone());
    }
    let shared = strategy.shared_state();
    let (ya, yb) = {
        let v = accept_matrix(strategy);
        (v.nrows(), v.ncols())
    };
    // L maps the shared-state vector to the vectorized accept matrix
    let mut l = DMatrix::<Complex64>::zeros(ya * yb, d * d);
    for col in 0..d * d {
        let mut amps = vec![Complex64::ZERO; d * d];
        amps[col] = Complex64::ONE;
        let basis = PureState::new(shared.layout().clone(), amps)?;
        let probe = Strategy::new(basis, strategy.alice().clone(), strategy.bob().clone())?;
        let v = accept_matrix(&probe);
        for r in 0..ya {
            for cc in 0..yb {
                l[(r * yb + cc, col)] = v[(r, cc)];
            }
        }
    }
    let gram = l.adjoint() * &l;
    let eig = SymmetricEigen::new(gram);
    let mut best = 0usize;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut vec: DVector<Complex64> = eig.eigenvectors.column(best).into_owned();
    // canonical global phase for reproducibility
    if let Some(first) = vec.iter().find(|c| c.norm() > 1e-12) {
        let phase = first.conj() / first.norm();
        vec *= phase;
    }
    let new_shared = PureState::new(shared.layout().clone(), vec.as_slice().to_vec())?;
    Strategy::new(new_shared, strategy.alice().clone(), strategy.bob().clone())
}

/// Run one see-saw trajectory from a given start.
fn run_from(start: Strategy, max_iters: usize, tol: f64) -> Result<(Strategy, Vec<f64>)> {
    let mut s = start;
    let mut traj = vec![objective(&s)];
    for _ in 0..max_iters {
        s = improve_player(&s, Player::Alice)?;
        s = improve_player(&s, Player::Bob)?;
        s = improve_player(&s, Player::Shared)?;
        let v = objective(&s);
        let prev = *traj.last().unwrap();
        traj.push(v);
        if v - prev < tol {
            break;
        }
    }
    Ok((s, traj))
}

/// Full multi-restart see-saw; ties between restarts go to the lowest
/// restart index, so the report is schedule-independent.
pub fn seesaw(config: &SeesawConfig) -> Result<SeesawReport> {
    config.validate()?;
    let mut best_value = f64::NEG_INFINITY;
    let mut best_restart = 0usize;
    let mut best_strategy: Option<Strategy> = None;
    let mut trajectories = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let seed_r = config.seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let start = random_strategy(config.d, config.y_dim, seed_r)?;
        let (s, traj) = run_from(start, config.max_iters, config.tol)?;
        let v = *traj.last().unwrap();
        if v > best_value + 1e-15 {
            best_value = v;
            best_restart = r;
            best_strategy = Some(s);
        }
        trajectories.push(traj);
    }
    Ok(SeesawReport {
        d: config.d,
        seed: config.seed,
        best_value,
        best_restart,
        best_strategy: best_strategy.unwrap(),
        per_restart_trajectories: trajectories,
        upper_bound: fannes_upper_bound(config.d),
    })
}

/// Warm-started see-saw from an explicit strategy (single trajectory).
pub fn seesaw_from(start: Strategy, max_iters: usize, tol: f64) -> Result<(Strategy, Vec<f64>)> {
    run_from(start, max_iters, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{play, prescribed_strategy};
    use crate::Backend;

    #[test]
    fn random_strategy_is_deterministic() {
        let a = random_strategy(2, 6, 42).unwrap();
        let b = random_strategy(2, 6, 42).unwrap();
        assert_eq!(a.shared_state().amplitudes(), b.shared_state().amplitudes());
        assert_eq!(a.alice().matrix(), b.alice().matrix());
        assert_eq!(a.bob().matrix(), b.bob().matrix());
        let c = random_strategy(2, 6, 43).unwrap();
        assert_ne!(a.shared_state().amplitudes(), c.shared_state().amplitudes());
    }

    #[test]
    fn objective_matches_dense_play() {
        for seed in [1u64, 2, 3] {
            let s = random_strategy(2, 6, seed).unwrap();
            let via_branches = objective(&s);
            let via_dense = play(&s, Backend::Dense).unwrap();
            assert!(
                (via_branches - via_dense).abs() < 1e-12,
                "seed {seed}: {via_branches} vs {via_dense}"
            );
        }
    }

    #[test]
    fn alice_step_improves_random_starts() {
        let mut improved = 0usize;
        for seed in 0..100u64 {
            let s = random_strategy(1, 2, seed).unwrap();
            let before = objective(&s);
            let after = objective(&improve_player(&s, Player::Alice).unwrap());
            assert!(after >= before - 1e-12);
            if after > before + 1e-9 {
                improved += 1;
            }
        }
        assert!(improved >= 95, "only {improved}/100 strictly improved");
    }

    #[test]
    fn shared_step_is_noop_at_d1() {
        let s = random_strategy(1, 2, 5).unwrap();
        let t = improve_player(&s, Player::Shared).unwrap();
        assert_eq!(s.shared_state().amplitudes(), t.shared_state().amplitudes());
    }

    #[test]
    fn improving_a_fixed_point_changes_nothing() {
        let s = random_strategy(1, 2, 9).unwrap();
        let (s, _) = run_from(s, 500, 1e-13).unwrap();
        let v = objective(&s);
        for which in [Player::Alice, Player::Bob, Player::Shared] {
            let v2 = objective(&improve_player(&s, which).unwrap());
            assert!((v2 - v).abs() < 1e-12, "{which:?}: {v} vs {v2}");
        }
    }

    #[test]
    fn d1_seesaw_hits_expected_value() {
        let report = seesaw(&SeesawConfig::new(1, 20, 7)).unwrap();
        let expected = 0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        assert!(
            (report.best_value - expected).abs() < 1e-6,
            "got {}, expected {expected}",
            report.best_value
        );
        let again = seesaw(&SeesawConfig::new(1, 20, 7)).unwrap();
        assert!((report.best_value - again.best_value).abs() < 1e-12);
        assert_eq!(report.best_restart, again.best_restart);
    }

    #[test]
    fn trajectories_are_monotone_and_capped() {
        let report = seesaw(&SeesawConfig::new(2, 5, 11)).unwrap();
        for traj in &report.per_restart_trajectories {
            for w in traj.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
        assert!(report.best_value < 1.0);
        assert!(report.best_value <= report.upper_bound + 1e-9);
    }

    #[test]
    fn warm_start_from_prescribed_dominates() {
        let s = prescribed_strategy(1).unwrap();
        let (_, traj) = seesaw_from(s, 10, 1e-9).unwrap();
        assert!(traj[0] >= 0.5 - 1e-10);
        for w in traj.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            SeesawConfig { d: 1000, restarts: 1, max_iters: 1, tol: 1e-9, seed: 0, y_dim: 3000 }
                .validate()
                .unwrap_err(),
            Error::TooLarge { .. }
        ));
        assert!(SeesawConfig::new(0, 1, 0).validate().is_err());
        let mut c = SeesawConfig::new(2, 1, 0);
        c.y_dim = 2;
        assert!(c.validate().is_err());
    }
}
