//! Subcommand behavior and exit-code contract.

use assert_cmd::Command;
use predicates::prelude::*;

fn coherex() -> Command {
    Command::cargo_bin("coherex").unwrap()
}

fn json_output(args: &[&str]) -> serde_json::Value {
    let out = coherex().args(args).assert().success().get_output().stdout.clone();
    serde_json::from_slice(&out).unwrap()
}

#[test]
fn game_play_dense_matches_formula() {
    let v = json_output(&["game", "play", "--N", "3", "--backend", "dense"]);
    let win = v["win_probability"].as_f64().unwrap();
    assert!((win - (1.0 - 1.0 / 6.0)).abs() < 1e-10);
    assert_eq!(v["d"].as_u64().unwrap(), 81);
}

#[test]
fn game_bound_d1() {
    let v = json_output(&["game", "bound", "--d", "1"]);
    let bound = v["upper_bound"].as_f64().unwrap();
    assert!((bound - 0.98756).abs() < 1e-5);
}

#[test]
fn completeness_half() {
    let v = json_output(&["completeness", "--c", "0.5", "--N", "1", "--m", "2"]);
    assert!((v["acceptance"].as_f64().unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn exchange_gram_large_n() {
    let v = json_output(&["exchange", "--N", "1000000", "--a", "0.0"]);
    let overlap = v["overlap"].as_f64().unwrap();
    assert!((overlap - (1.0 - 1e-6)).abs() < 1e-12);
}

#[test]
fn chain_check_reports_valid_chain() {
    let v = json_output(&["game", "chain-check", "--d", "2", "--seed", "11"]);
    assert!(v["lower_holds"].as_bool().unwrap());
    assert!(v["upper_holds"].as_bool().unwrap());
    assert!((v["entropy_deficit"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn optimize_small_run() {
    let v = json_output(&[
        "game", "optimize", "--d", "1", "--restarts", "3", "--seed", "5",
    ]);
    let best = v["best_value"].as_f64().unwrap();
    let bound = v["upper_bound"].as_f64().unwrap();
    assert!(best <= bound + 1e-9);
    assert!((best - (0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-6);
}

#[test]
fn invalid_parameters_exit_2() {
    coherex()
        .args(["exchange", "--N", "0"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("error"));
    coherex()
        .args(["exchange", "--N", "4", "--a", "1.5", "--backend", "dense"])
        .assert()
        .code(2);
    coherex()
        .args(["table", "--kind", "exchange", "--values", "oops"])
        .assert()
        .code(2);
    coherex()
        .args(["table", "--kind", "nonsense", "--values", "1,2"])
        .assert()
        .code(2);
    // clap-level error: missing required flag
    coherex().args(["game", "play"]).assert().code(2);
}

#[test]
fn table_game_has_closed_form_columns() {
    let out = coherex()
        .args(["table", "--kind", "game", "--values", "1,2,100"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,backend,win_probability,closed_form,abs_diff"
    );
    assert_eq!(text.lines().count(), 4);
    // gram row for N=100
    assert!(text.lines().nth(3).unwrap().starts_with("100,gram"));
}

#[test]
fn log_steps_range() {
    let out = coherex()
        .args([
            "table", "--kind", "exchange", "--values", "1..1000000", "--log-steps", "7",
        ])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().last().unwrap().starts_with("1000000,"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("record.json");
    coherex()
        .args(["game", "bound", "--d", "2", "--out", path.to_str().unwrap()])
        .assert()
        .success()
        .stdout(predicate::str::is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["kind"], "game-bound");
}

#[test]
fn csv_format_for_records() {
    let out = coherex()
        .args(["game", "bound", "--d", "1", "--format", "csv"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "kind,d,upper_bound");
}

#[test]
fn dump_state_includes_resource() {
    let v = json_output(&[
        "exchange", "--N", "2", "--a", "0.0", "--backend", "dense", "--dump-state",
    ]);
    let amps = v["resource_state"]["amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 8);
}
