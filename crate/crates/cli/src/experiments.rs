//! Experiment execution shared by direct subcommands and manifest runs.

use serde_json::{json, Map, Value};

use coherex::completeness::{no_case_ceiling, run_final_round, yes_acceptance_formula, ProofSystemModel};
use coherex::exchange::{normalization_n1, overlap_formula, ExchangeResource, UniversalFamily};
use coherex::game::{bound_chain_check, fannes_upper_bound, play_prescribed};
use coherex::optimizer::{random_strategy, random_unitary, seesaw, SeesawConfig};
use coherex::statevec::{PureState, SubsystemLayout};
use coherex::Backend;

use crate::emit::fmt_f64;

/// Tolerance for the built-in closed-form cross-checks.
const ASSERT_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid parameters: exit code 2.
    #[error("invalid parameters: {0}")]
    Invalid(String),
    /// Internal assertion failed: exit code 3.
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl From<coherex::Error> for CliError {
    fn from(e: coherex::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One finished experiment, ready to encode.
pub enum Output {
    Record(Value),
    Table(String),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn get_usize(params: &Map<String, Value>, key: &str) -> CliResult<Option<usize>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| invalid(format!("`{key}` must be a non-negative integer"))),
    }
}

fn req_usize(params: &Map<String, Value>, key: &str) -> CliResult<usize> {
    get_usize(params, key)?.ok_or_else(|| invalid(format!("missing required parameter `{key}`")))
}

fn get_f64(params: &Map<String, Value>, key: &str) -> CliResult<Option<f64>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| invalid(format!("`{key}` must be a number"))),
    }
}

fn get_str<'a>(params: &'a Map<String, Value>, key: &str) -> CliResult<Option<&'a str>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_str()
            .map(Some)
            .ok_or_else(|| invalid(format!("`{key}` must be a string"))),
    }
}

fn get_backend(params: &Map<String, Value>, default: Backend) -> CliResult<Backend> {
    match get_str(params, "backend")? {
        None => Ok(default),
        Some(s) => s.parse().map_err(invalid),
    }
}

/// Run one experiment; `seed` feeds every randomized component.
pub fn execute(kind: &str, params: &Map<String, Value>, seed: u64, dump_state: bool) -> CliResult<Output> {
    let dump_state = dump_state || params.get("dump_state").and_then(Value::as_bool).unwrap_or(false);
    match kind {
        "exchange" => exchange(params, dump_state),
        "game-play" => game_play(params),
        "game-bound" => game_bound(params),
        "game-optimize" => game_optimize(params, seed, dump_state),
        "game-chain-check" => game_chain_check(params, seed),
        "completeness" => completeness(params),
        "embezzle" => embezzle(params, seed),
        "table" => table(params, seed),
        other => Err(invalid(format!("unknown experiment kind `{other}`"))),
    }
}

/// Single-register pair with real overlap `a`: φ = |0⟩, ψ = a|0⟩ + √(1−a²)|1⟩.
fn overlap_pair(a: f64) -> CliResult<(PureState, PureState)> {
    if !(0.0..1.0).contains(&a) {
        return Err(invalid(format!("`a` must lie in [0, 1), got {a}")));
    }
    let layout = SubsystemLayout::new(vec![("q", 2)]).map_err(CliError::from)?;
    let phi = PureState::basis(layout.clone(), &[0]).map_err(CliError::from)?;
    let psi = PureState::new(
        layout,
        vec![
            num_complex::Complex64::new(a, 0.0),
            num_complex::Complex64::new((1.0 - a * a).sqrt(), 0.0),
        ],
    )
    .map_err(CliError::from)?;
    Ok((phi, psi))
}

fn exchange(params: &Map<String, Value>, dump_state: bool) -> CliResult<Output> {
    let n = req_usize(params, "n")?;
    let a = get_f64(params, "a")?.unwrap_or(0.0);
    let backend = get_backend(params, Backend::Gram)?;
    let n1_closed = normalization_n1(n, a)?;
    let overlap_closed = overlap_formula(n, a)?;
    let (n1, overlap, state) = match backend {
        Backend::Gram => (n1_closed, overlap_closed, None),
        Backend::Dense => {
            let (phi, psi) = overlap_pair(a)?;
            let res = ExchangeResource::build(&phi, &psi, n)?;
            let overlap = res
                .resource_state()
                .inner(&res.residual_state_dense()?)?
                .re;
            let state = dump_state
                .then(|| serde_json::from_str(&res.resource_state().to_json()).unwrap());
            (res.normalization(), overlap, state)
        }
    };
    let n1_diff = (n1 - n1_closed).abs();
    let overlap_diff = (overlap - overlap_closed).abs();
    let mut record = json!({
        "kind": "exchange",
        "N": n,
        "a": a,
        "backend": backend.to_string(),
        "n1": n1,
        "overlap": overlap,
        "n1_closed_form": n1_closed,
        "overlap_closed_form": overlap_closed,
        "n1_abs_diff": n1_diff,
        "overlap_abs_diff": overlap_diff,
    });
    if let Some(state) = state {
        record["resource_state"] = state;
    }
    if n1_diff > ASSERT_TOL || overlap_diff > ASSERT_TOL {
        return Err(CliError::Assertion(format!(
            "exchange N={n} a={a}: dense/closed-form mismatch (n1 diff {}, overlap diff {})",
            fmt_f64(n1_diff),
            fmt_f64(overlap_diff)
        )));
    }
    Ok(Output::Record(record))
}

fn game_play(params: &Map<String, Value>) -> CliResult<Output> {
    let n = req_usize(params, "n")?;
    let backend = get_backend(params, Backend::Dense)?;
    let win = play_prescribed(n, backend)?;
    let closed = 1.0 - 1.0 / (2.0 * n as f64);
    let diff = (win - closed).abs();
    // per-party shared dimension 3^(N+1); its Fannes cap stays finite
    // through logarithms even when d itself overflows
    let d_value = match 3u64.checked_pow(n as u32 + 1) {
        Some(d) => Value::from(d),
        None => {
            let d = 3f64.powi((n as i32).saturating_add(1));
            if d.is_finite() { Value::from(d) } else { Value::Null }
        }
    };
    let log2_3d = (n as f64 + 2.0) * 3f64.log2();
    let upper_bound = 1.0 - 1.0 / (32.0 * log2_3d * log2_3d);
    let record = json!({
        "kind": "game-play",
        "N": n,
        "backend": backend.to_string(),
        "win_probability": win,
        "closed_form": closed,
        "abs_diff": diff,
        "d": d_value,
        "upper_bound": upper_bound,
        "entropy_deficit": 1.0,
    });
    if diff > ASSERT_TOL {
        return Err(CliError::Assertion(format!(
            "game-play N={n} ({backend}): win {win} differs from 1 - 1/(2N) by {}",
            fmt_f64(diff)
        )));
    }
    Ok(Output::Record(record))
}

fn game_bound(params: &Map<String, Value>) -> CliResult<Output> {
    let d = req_usize(params, "d")?;
    if d == 0 {
        return Err(invalid("`d` must be ≥ 1"));
    }
    Ok(Output::Record(json!({
        "kind": "game-bound",
        "d": d,
        "upper_bound": fannes_upper_bound(d),
    })))
}

fn game_optimize(params: &Map<String, Value>, seed: u64, dump_strategy: bool) -> CliResult<Output> {
    let d = req_usize(params, "d")?;
    let mut config = SeesawConfig::new(d, get_usize(params, "restarts")?.unwrap_or(20), seed);
    if let Some(y) = get_usize(params, "y_dim")? {
        config.y_dim = y;
    }
    if let Some(iters) = get_usize(params, "max_iters")? {
        config.max_iters = iters;
    }
    if let Some(tol) = get_f64(params, "tol")? {
        config.tol = tol;
    }
    let report = seesaw(&config)?;
    let iterations: Vec<usize> = report
        .per_restart_trajectories
        .iter()
        .map(|t| t.len() - 1)
        .collect();
    let mut record = json!({
        "kind": "game-optimize",
        "d": report.d,
        "seed": report.seed,
        "restarts": config.restarts,
        "y_dim": config.y_dim,
        "best_value": report.best_value,
        "value_status": "best-found lower bound",
        "upper_bound": report.upper_bound,
        "best_restart": report.best_restart,
        "iterations_per_restart": iterations,
    });
    if dump_strategy {
        let s = &report.best_strategy;
        let matrix_json = |m: &nalgebra::DMatrix<num_complex::Complex64>| -> Value {
            let rows: Vec<Vec<(f64, f64)>> = (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect())
                .collect();
            json!(rows)
        };
        record["best_strategy"] = json!({
            "shared_state": serde_json::from_str::<Value>(&s.shared_state().to_json()).unwrap(),
            "alice": matrix_json(s.alice().matrix()),
            "bob": matrix_json(s.bob().matrix()),
        });
    }
    if report.best_value > report.upper_bound + ASSERT_TOL || report.best_value >= 1.0 {
        return Err(CliError::Assertion(format!(
            "game-optimize d={d}: best value {} violates the upper bound {}",
            fmt_f64(report.best_value),
            fmt_f64(report.upper_bound)
        )));
    }
    Ok(Output::Record(record))
}

fn game_chain_check(params: &Map<String, Value>, seed: u64) -> CliResult<Output> {
    let d = req_usize(params, "d")?;
    if d == 0 || d > 64 {
        return Err(invalid("`d` must lie in 1..=64 for chain checks"));
    }
    let strategy = random_strategy(d, 3 * d, seed)?;
    let ua = random_unitary(
        SubsystemLayout::new(vec![("S", 3), ("XA", d)])?,
        seed.wrapping_add(1),
    )?;
    let ub = random_unitary(
        SubsystemLayout::new(vec![("T", 3), ("XB", d)])?,
        seed.wrapping_add(2),
    )?;
    let report = bound_chain_check(&strategy, &ua, &ub)?;
    let record = json!({
        "kind": "game-chain-check",
        "d": d,
        "seed": seed,
        "overlap": report.overlap,
        "fidelity": report.fidelity,
        "fvg_cap": report.fvg_cap,
        "entropy_deficit": report.entropy_deficit,
        "lower_holds": report.lower_holds,
        "upper_holds": report.upper_holds,
    });
    if !report.lower_holds || !report.upper_holds || (report.entropy_deficit - 1.0).abs() > 1e-10 {
        return Err(CliError::Assertion(format!(
            "game-chain-check d={d} seed={seed}: bound chain violated \
             (overlap {}, fidelity {}, cap {}, deficit {})",
            fmt_f64(report.overlap),
            fmt_f64(report.fidelity),
            fmt_f64(report.fvg_cap),
            fmt_f64(report.entropy_deficit)
        )));
    }
    Ok(Output::Record(record))
}

fn completeness(params: &Map<String, Value>) -> CliResult<Output> {
    let c = get_f64(params, "c")?.ok_or_else(|| invalid("missing required parameter `c`"))?;
    let s = get_f64(params, "s")?.unwrap_or(0.0);
    let p = get_f64(params, "p")?.unwrap_or(c);
    let n = req_usize(params, "n")?;
    let m = get_usize(params, "m")?.unwrap_or(2);
    let backend = get_backend(params, Backend::Dense)?;
    let model = ProofSystemModel::with_basis_residuals(p, c, s, m)?;
    let outcome = run_final_round(&model, n, backend)?;
    let acceptance = outcome.acceptance_probability;
    let yes = yes_acceptance_formula(c, n)?;
    let (ceiling, cap) = no_case_ceiling(c, s)?;
    let honest_yes = (p - c).abs() < 1e-15;
    let diff = (acceptance - yes).abs();
    let record = json!({
        "kind": "completeness",
        "c": c,
        "s": s,
        "p": p,
        "N": n,
        "m": m,
        "backend": backend.to_string(),
        "acceptance": acceptance,
        "yes_formula": yes,
        "abs_diff": if honest_yes { Value::from(diff) } else { Value::Null },
        "no_ceiling": ceiling,
        "cap": cap,
    });
    if honest_yes && diff > ASSERT_TOL {
        return Err(CliError::Assertion(format!(
            "completeness c={c} N={n} m={m}: acceptance differs from 1 - 2c(1-c)/N by {}",
            fmt_f64(diff)
        )));
    }
    if p <= s && acceptance > ceiling + ASSERT_TOL {
        return Err(CliError::Assertion(format!(
            "completeness c={c} s={s} p={p} N={n}: acceptance {} exceeds the no-case ceiling {}",
            fmt_f64(acceptance),
            fmt_f64(ceiling)
        )));
    }
    Ok(Output::Record(record))
}

fn embezzle(params: &Map<String, Value>, seed: u64) -> CliResult<Output> {
    let dims: Vec<usize> = match get_str(params, "dims")? {
        None => vec![2, 2],
        Some(spec) => spec
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| invalid(format!("bad `dims` list `{spec}`")))?,
    };
    let n = get_usize(params, "n")?.unwrap_or(100);
    let epsilon = get_f64(params, "epsilon")?.unwrap_or(0.25);
    let targets = get_usize(params, "targets")?.unwrap_or(25);
    let family = UniversalFamily::build(&dims, n, epsilon)?;
    let mut results = Vec::with_capacity(targets);
    let mut min_fid = f64::INFINITY;
    for t in 0..targets {
        let target = PureState::random(family.layout().clone(), seed.wrapping_add(t as u64));
        let out = family.embezzle(&target)?;
        min_fid = min_fid.min(out.fidelity);
        results.push(json!({
            "target": t,
            "net_index": out.net_index,
            "target_overlap": out.target_overlap,
            "residual_overlap": out.residual_overlap,
            "fidelity": out.fidelity,
        }));
    }
    Ok(Output::Record(json!({
        "kind": "embezzle",
        "dims": dims,
        "N": n,
        "epsilon": epsilon,
        "seed": seed,
        "net_size": family.len(),
        "targets": targets,
        "min_fidelity": if targets > 0 { Value::from(min_fid) } else { Value::Null },
        "results": results,
    })))
}

/// Parse `1,2,4,8`, `1..9`, or `1..1000000` with `log_steps` geometric
/// sample points.
fn parse_values(spec: &str, log_steps: Option<usize>) -> CliResult<Vec<usize>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| invalid(format!("bad range `{spec}`")))?;
        let hi: usize = hi.trim().parse().map_err(|_| invalid(format!("bad range `{spec}`")))?;
        if lo == 0 || hi < lo {
            return Err(invalid(format!("bad range `{spec}`")));
        }
        if let Some(k) = log_steps {
            if k < 2 {
                return Err(invalid("`log_steps` must be ≥ 2"));
            }
            let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
            let mut vals: Vec<usize> = (0..k)
                .map(|i| (llo + (lhi - llo) * i as f64 / (k - 1) as f64).exp().round() as usize)
                .collect();
            vals.dedup();
            Ok(vals)
        } else {
            if hi - lo > 10_000 {
                return Err(invalid(format!(
                    "range `{spec}` enumerates more than 10000 points; use `log_steps`"
                )));
            }
            Ok((lo..=hi).collect())
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| invalid(format!("bad value list `{spec}`")))
    }
}

fn table(params: &Map<String, Value>, seed: u64) -> CliResult<Output> {
    let kind = get_str(params, "kind")?.ok_or_else(|| invalid("missing table `kind`"))?;
    let log_steps = get_usize(params, "log_steps")?;
    match kind {
        "exchange" => {
            let values = parse_values(
                get_str(params, "values")?.ok_or_else(|| invalid("missing `values`"))?,
                log_steps,
            )?;
            let a = get_f64(params, "a")?.unwrap_or(0.0);
            let mut rows = Vec::new();
            for n in values {
                let closed = overlap_formula(n, a)?;
                // dense up to the budget, closed form beyond it
                let overlap = if n <= 20 {
                    let (phi, psi) = overlap_pair(a)?;
                    let res = ExchangeResource::build(&phi, &psi, n)?;
                    res.resource_state().inner(&res.residual_state_dense()?)?.re
                } else {
                    closed
                };
                let diff = (overlap - closed).abs();
                if diff > ASSERT_TOL {
                    return Err(CliError::Assertion(format!(
                        "exchange table row N={n}: overlap differs from closed form by {}",
                        fmt_f64(diff)
                    )));
                }
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(a),
                    fmt_f64(overlap),
                    fmt_f64(closed),
                    fmt_f64(diff),
                ]);
            }
            Ok(Output::Table(crate::emit::csv_table(
                &["N", "a", "overlap", "closed_form", "abs_diff"],
                &rows,
            )))
        }
        "game" => {
            let values = parse_values(
                get_str(params, "values")?.ok_or_else(|| invalid("missing `values`"))?,
                log_steps,
            )?;
            let mut rows = Vec::new();
            for n in values {
                let backend = if n <= 3 { Backend::Dense } else { Backend::Gram };
                let win = play_prescribed(n, backend)?;
                let closed = 1.0 - 1.0 / (2.0 * n as f64);
                let diff = (win - closed).abs();
                if diff > ASSERT_TOL {
                    return Err(CliError::Assertion(format!(
                        "game table row N={n}: win probability differs from closed form by {}",
                        fmt_f64(diff)
                    )));
                }
                rows.push(vec![
                    n.to_string(),
                    backend.to_string(),
                    fmt_f64(win),
                    fmt_f64(closed),
                    fmt_f64(diff),
                ]);
            }
            Ok(Output::Table(crate::emit::csv_table(
                &["N", "backend", "win_probability", "closed_form", "abs_diff"],
                &rows,
            )))
        }
        "completeness" => {
            let values = parse_values(
                get_str(params, "values")?.ok_or_else(|| invalid("missing `values`"))?,
                log_steps,
            )?;
            let c = get_f64(params, "c")?.ok_or_else(|| invalid("missing `c`"))?;
            let m = get_usize(params, "m")?.unwrap_or(2);
            let model = ProofSystemModel::with_basis_residuals(c, c, 0.0, m)?;
            let mut rows = Vec::new();
            for n in values {
                let acceptance = run_final_round(&model, n, Backend::Dense)?.acceptance_probability;
                let yes = yes_acceptance_formula(c, n)?;
                let diff = (acceptance - yes).abs();
                if diff > ASSERT_TOL {
                    return Err(CliError::Assertion(format!(
                        "completeness table row N={n}: acceptance differs from formula by {}",
                        fmt_f64(diff)
                    )));
                }
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(c),
                    m.to_string(),
                    fmt_f64(acceptance),
                    fmt_f64(yes),
                    fmt_f64(diff),
                ]);
            }
            Ok(Output::Table(crate::emit::csv_table(
                &["N", "c", "m", "acceptance", "yes_formula", "abs_diff"],
                &rows,
            )))
        }
        "optimizer" => {
            let values = parse_values(
                get_str(params, "values")?.ok_or_else(|| invalid("missing `values`"))?,
                log_steps,
            )?;
            let restarts = get_usize(params, "restarts")?.unwrap_or(20);
            let mut rows = Vec::new();
            for d in values {
                let report = seesaw(&SeesawConfig::new(d, restarts, seed))?;
                if report.best_value > report.upper_bound + ASSERT_TOL {
                    return Err(CliError::Assertion(format!(
                        "optimizer table row d={d}: value {} exceeds bound {}",
                        fmt_f64(report.best_value),
                        fmt_f64(report.upper_bound)
                    )));
                }
                rows.push(vec![
                    d.to_string(),
                    fmt_f64(report.best_value),
                    fmt_f64(report.upper_bound),
                    fmt_f64(report.upper_bound - report.best_value),
                ]);
            }
            Ok(Output::Table(crate::emit::csv_table(
                &["d", "best_value", "upper_bound", "gap"],
                &rows,
            )))
        }
        other => Err(invalid(format!("unknown table kind `{other}`"))),
    }
}
