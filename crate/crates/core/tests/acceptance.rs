//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see the lines on success).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coherex::completeness::{no_case_ceiling, run_final_round, yes_acceptance_formula, ProofSystemModel};
use coherex::exchange::{normalization_n1, overlap_formula, ExchangeResource, UniversalFamily};
use coherex::game::{bound_chain_check, fannes_upper_bound, play, play_prescribed, prescribed_strategy};
use coherex::optimizer::{random_strategy, seesaw, SeesawConfig};
use coherex::statevec::{LocalIsometry, PureState, SubsystemLayout};
use coherex::Backend;

fn verdict(id: usize, desc: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("[criterion {id}] PASS — {desc}");
    } else {
        println!("[criterion {id}] FAIL — {desc}: {}", failures.join("; "));
        panic!("criterion {id} failed:\n{}", failures.join("\n"));
    }
}

fn qutrit_pair() -> SubsystemLayout {
    SubsystemLayout::new(vec![("S", 3), ("T", 3)]).unwrap()
}

fn phi_entangled() -> PureState {
    let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Complex64::ZERO; 9];
    amps[4] = inv;
    amps[8] = inv;
    PureState::new(qutrit_pair(), amps).unwrap()
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_unitary(layout: SubsystemLayout, rng: &mut ChaCha8Rng) -> LocalIsometry {
    let dim = layout.total_dim();
    let m = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    LocalIsometry::new(layout.clone(), layout, m.qr().q()).unwrap()
}

#[test]
fn criterion_1_resource_overlap_identity() {
    let mut failures = Vec::new();
    let psi = PureState::basis(qutrit_pair(), &[0, 0]).unwrap();
    for n in 1..=6usize {
        let res = ExchangeResource::build(&phi_entangled(), &psi, n).unwrap();
        let overlap = res
            .resource_state()
            .inner(&res.residual_state_dense().unwrap())
            .unwrap()
            .re;
        let want = 1.0 - 1.0 / n as f64;
        if (overlap - want).abs() > 1e-12 {
            failures.push(format!("dense N={n}: {overlap} vs {want}"));
        }
    }
    for n in [10usize, 1_000, 1_000_000] {
        let got = overlap_formula(n, 0.0).unwrap();
        let want = 1.0 - 1.0 / n as f64;
        if (got - want).abs() > 1e-12 {
            failures.push(format!("gram N={n}: {got} vs {want}"));
        }
    }
    verdict(1, "resource overlap equals 1 - 1/N (dense N=1..6, gram up to 10^6)", &failures);
}

#[test]
fn criterion_2_game_honest_value() {
    let mut failures = Vec::new();
    for n in 1..=3usize {
        let got = play(&prescribed_strategy(n).unwrap(), Backend::Dense).unwrap();
        let want = 1.0 - 1.0 / (2.0 * n as f64);
        if (got - want).abs() > 1e-10 {
            failures.push(format!("dense N={n}: {got} vs {want}"));
        }
    }
    for n in [10usize, 1_000, 1_000_000] {
        let got = play_prescribed(n, Backend::Gram).unwrap();
        let want = 1.0 - 1.0 / (2.0 * n as f64);
        if (got - want).abs() > 1e-12 {
            failures.push(format!("gram N={n}: {got} vs {want}"));
        }
    }
    verdict(2, "prescribed strategy wins with probability 1 - 1/(2N)", &failures);
}

#[test]
fn criterion_3_strict_suboptimality() {
    let mut failures = Vec::new();
    for d in 1..=3usize {
        let report = seesaw(&SeesawConfig::new(d, 20, 20_000 + d as u64)).unwrap();
        let bound = fannes_upper_bound(d);
        if report.best_value > bound + 1e-9 {
            failures.push(format!("d={d}: see-saw {} exceeds bound {bound}", report.best_value));
        }
        if report.best_value >= 1.0 - 1e-3 {
            failures.push(format!("d={d}: see-saw {} suspiciously close to 1", report.best_value));
        }
        // the prescribed family eventually beats this fixed-d bound
        let mut beaten = false;
        for n in 1..=4096usize {
            if play_prescribed(n, Backend::Gram).unwrap() > bound {
                beaten = true;
                break;
            }
        }
        if !beaten {
            failures.push(format!("d={d}: prescribed sequence never beat bound {bound}"));
        }
    }
    verdict(
        3,
        "finite-d values stay under the Fannes cap while the prescribed sequence passes it",
        &failures,
    );
}

#[test]
fn criterion_4_bound_chain_and_entropy_deficit() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4_040);
    for draw in 0..100usize {
        let d = draw % 4 + 1;
        let strategy = random_strategy(d, 3 * d, 40_000 + draw as u64).unwrap();
        let ua = random_unitary(
            SubsystemLayout::new(vec![("S", 3), ("XA", d)]).unwrap(),
            &mut rng,
        );
        let ub = random_unitary(
            SubsystemLayout::new(vec![("T", 3), ("XB", d)]).unwrap(),
            &mut rng,
        );
        let report = bound_chain_check(&strategy, &ua, &ub).unwrap();
        if report.overlap > report.fidelity + 1e-9 {
            failures.push(format!(
                "draw {draw}: overlap {} > fidelity {}",
                report.overlap, report.fidelity
            ));
        }
        if report.fidelity > report.fvg_cap + 1e-9 {
            failures.push(format!(
                "draw {draw}: fidelity {} > cap {}",
                report.fidelity, report.fvg_cap
            ));
        }
        if (report.entropy_deficit - 1.0).abs() > 1e-10 {
            failures.push(format!("draw {draw}: deficit {}", report.entropy_deficit));
        }
    }
    verdict(4, "Fuchs–van de Graaf chain and unit entropy deficit on 100 draws", &failures);
}

#[test]
fn criterion_5_nonorthogonal_formulas() {
    let mut failures = Vec::new();
    let layout = SubsystemLayout::new(vec![("q", 2)]).unwrap();
    let phi = PureState::basis(layout.clone(), &[0]).unwrap();
    for k in 1..=9usize {
        let a = k as f64 / 10.0;
        let psi = PureState::new(
            layout.clone(),
            vec![Complex64::new(a, 0.0), Complex64::new((1.0 - a * a).sqrt(), 0.0)],
        )
        .unwrap();
        for n in 1..=6usize {
            let res = ExchangeResource::build(&phi, &psi, n).unwrap();
            let n1 = normalization_n1(n, a).unwrap();
            if (res.normalization() - n1).abs() > 1e-12 {
                failures.push(format!("N1 a={a} N={n}: {} vs {n1}", res.normalization()));
            }
            let dense = res
                .resource_state()
                .inner(&res.residual_state_dense().unwrap())
                .unwrap()
                .re;
            let formula = overlap_formula(n, a).unwrap();
            if (dense - formula).abs() > 1e-12 {
                failures.push(format!("overlap a={a} N={n}: {dense} vs {formula}"));
            }
            if formula < 1.0 - 1.0 / n as f64 - 1e-12 {
                failures.push(format!("overlap a={a} N={n} below 1 - 1/N"));
            }
            let nf = n as f64;
            if n1 < nf - 1e-12 || n1 > nf * nf + 1e-12 {
                failures.push(format!("N1 a={a} N={n} out of [N, N^2]: {n1}"));
            }
        }
    }
    verdict(5, "non-orthogonal N1 and overlap formulas match the dense oracle", &failures);
}

#[test]
fn criterion_6_completeness_transformation() {
    let mut failures = Vec::new();
    for &c in &[0.25f64, 0.5, 0.9] {
        for n in 1..=4usize {
            let want = yes_acceptance_formula(c, n).unwrap();
            for m in [2usize, 3] {
                let model = ProofSystemModel::with_basis_residuals(c, c, 0.0, m).unwrap();
                let got = run_final_round(&model, n, Backend::Dense)
                    .unwrap()
                    .acceptance_probability;
                if (got - want).abs() > 1e-10 {
                    failures.push(format!("c={c} N={n} m={m}: {got} vs {want}"));
                }
                if got < 1.0 - 1.0 / (2.0 * n as f64) - 1e-10 {
                    failures.push(format!("c={c} N={n} m={m}: below 1 - 1/(2N)"));
                }
            }
        }
    }
    // honest no-case sweeps
    for &(c, s) in &[(0.8f64, 0.4f64), (0.9, 0.5), (0.6, 0.1)] {
        let (ceiling, cap) = no_case_ceiling(c, s).unwrap();
        if ceiling > cap + 1e-12 {
            failures.push(format!("c={c} s={s}: ceiling {ceiling} > cap {cap}"));
        }
        for k in 0..=6 {
            let p = s * k as f64 / 6.0;
            let model = ProofSystemModel::with_basis_residuals(p, c, s, 2).unwrap();
            for n in 1..=3usize {
                let got = run_final_round(&model, n, Backend::Dense)
                    .unwrap()
                    .acceptance_probability;
                if got > ceiling + 1e-10 {
                    failures.push(format!("no-case c={c} s={s} p={p} N={n}: {got} > {ceiling}"));
                }
            }
        }
    }
    verdict(6, "extra round reaches 1 - 2c(1-c)/N and respects the no-case ceiling", &failures);
}

#[test]
fn criterion_7_embezzlement_family() {
    let mut failures = Vec::new();
    let n = 100usize;
    let family = UniversalFamily::build(&[2, 2], n, 0.25).unwrap();
    let layout = family.layout().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7_700);
    for draw in 0..25usize {
        let mut amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(gauss(&mut rng), gauss(&mut rng)))
            .collect();
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let target = PureState::new(layout.clone(), amps).unwrap();
        let out = family.embezzle(&target).unwrap();
        if out.fidelity < 0.9 {
            failures.push(format!("draw {draw}: fidelity {}", out.fidelity));
        }
    }
    // net points themselves embezzle at the resource-overlap floor
    for i in (0..family.len()).step_by(family.len() / 10 + 1) {
        let target = family.net_point(i).unwrap();
        let out = family.embezzle(&target).unwrap();
        if out.fidelity < 1.0 - 1.0 / n as f64 - 1e-9 {
            failures.push(format!("net point {i}: fidelity {}", out.fidelity));
        }
    }
    verdict(7, "qubit-pair family embezzles random targets at fidelity >= 0.9", &failures);
}
