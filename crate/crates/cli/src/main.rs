//! `coherex` — reproducibility harness for the coherent state exchange
//! toolkit. Every experiment is seeded explicitly; identical invocations
//! produce byte-identical output.

mod emit;
mod experiments;
mod manifest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use experiments::{CliError, Output};

#[derive(Parser)]
#[command(name = "coherex", version, about = "Coherent state exchange experiments")]
struct Cli {
    /// Seed for every randomized component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output encoding for single records (tables are always CSV).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include the dense state vector in records that have one.
    #[arg(long, global = true)]
    dump_state: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exchange resource normalization and residual overlap.
    Exchange {
        #[arg(long = "N")]
        n: usize,
        /// Overlap |<phi|psi>| of the exchanged pair.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value = "gram")]
        backend: String,
    },
    /// The cooperative game.
    Game {
        #[command(subcommand)]
        command: GameCommand,
    },
    /// One extra round of the completeness transformation.
    Completeness {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        s: Option<f64>,
        /// Accept probability of the original system (defaults to c).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value = "dense")]
        backend: String,
    },
    /// Universal embezzling family over an epsilon-net.
    Embezzle {
        /// Per-party local dimensions, e.g. `2,2`.
        #[arg(long, default_value = "2,2")]
        dims: String,
        #[arg(long = "N", default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Number of seeded random targets to embezzle.
        #[arg(long, default_value_t = 25)]
        targets: usize,
    },
    /// Deterministic CSV sweeps.
    Table {
        /// One of: exchange, game, completeness, optimizer.
        #[arg(long)]
        kind: String,
        /// Value list `1,2,4,8` or range `1..1000000`.
        #[arg(long)]
        values: String,
        #[arg(long)]
        log_steps: Option<usize>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Execute a JSON manifest of experiments.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Worker threads; the output bytes do not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum GameCommand {
    /// Win probability of the prescribed strategy.
    Play {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value = "dense")]
        backend: String,
    },
    /// Fannes-derived upper bound for shared dimension d.
    Bound {
        #[arg(long)]
        d: usize,
    },
    /// See-saw search for the best strategy at fixed d.
    Optimize {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long)]
        y_dim: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Emit the winning strategy's state and isometries.
        #[arg(long)]
        dump_strategy: bool,
    },
    /// Verify the fidelity/trace-distance bound chain on a seeded draw.
    ChainCheck {
        #[arg(long)]
        d: usize,
    },
}

#[derive(Args)]
struct Dummy {}

fn params_from(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn to_request(command: &Command, dump_state: bool) -> (String, Map<String, Value>, bool) {
    match command {
        Command::Exchange { n, a, backend } => (
            "exchange".into(),
            params_from(vec![
                ("n", Value::from(*n)),
                ("a", Value::from(*a)),
                ("backend", Value::from(backend.clone())),
            ]),
            dump_state,
        ),
        Command::Game { command } => match command {
            GameCommand::Play { n, backend } => (
                "game-play".into(),
                params_from(vec![
                    ("n", Value::from(*n)),
                    ("backend", Value::from(backend.clone())),
                ]),
                dump_state,
            ),
            GameCommand::Bound { d } => (
                "game-bound".into(),
                params_from(vec![("d", Value::from(*d))]),
                dump_state,
            ),
            GameCommand::Optimize { d, restarts, y_dim, max_iters, tol, dump_strategy } => {
                let mut params = params_from(vec![
                    ("d", Value::from(*d)),
                    ("restarts", Value::from(*restarts)),
                ]);
                if let Some(y) = y_dim {
                    params.insert("y_dim".into(), Value::from(*y));
                }
                if let Some(it) = max_iters {
                    params.insert("max_iters".into(), Value::from(*it));
                }
                if let Some(t) = tol {
                    params.insert("tol".into(), Value::from(*t));
                }
                ("game-optimize".into(), params, dump_state || *dump_strategy)
            }
            GameCommand::ChainCheck { d } => (
                "game-chain-check".into(),
                params_from(vec![("d", Value::from(*d))]),
                dump_state,
            ),
        },
        Command::Completeness { c, s, p, n, m, backend } => {
            let mut params = params_from(vec![
                ("c", Value::from(*c)),
                ("n", Value::from(*n)),
                ("m", Value::from(*m)),
                ("backend", Value::from(backend.clone())),
            ]);
            if let Some(s) = s {
                params.insert("s".into(), Value::from(*s));
            }
            if let Some(p) = p {
                params.insert("p".into(), Value::from(*p));
            }
            ("completeness".into(), params, dump_state)
        }
        Command::Embezzle { dims, n, epsilon, targets } => (
            "embezzle".into(),
            params_from(vec![
                ("dims", Value::from(dims.clone())),
                ("n", Value::from(*n)),
                ("epsilon", Value::from(*epsilon)),
                ("targets", Value::from(*targets)),
            ]),
            dump_state,
        ),
        Command::Table { kind, values, log_steps, a, c, m, restarts } => {
            let mut params = params_from(vec![
                ("kind", Value::from(kind.clone())),
                ("values", Value::from(values.clone())),
            ]);
            if let Some(k) = log_steps {
                params.insert("log_steps".into(), Value::from(*k));
            }
            if let Some(a) = a {
                params.insert("a".into(), Value::from(*a));
            }
            if let Some(c) = c {
                params.insert("c".into(), Value::from(*c));
            }
            if let Some(m) = m {
                params.insert("m".into(), Value::from(*m));
            }
            if let Some(r) = restarts {
                params.insert("restarts".into(), Value::from(*r));
            }
            ("table".into(), params, dump_state)
        }
        Command::Run { .. } => unreachable!("run is dispatched separately"),
    }
}

fn emit_output(output: Output, format: Format, out: &Option<PathBuf>) -> Result<(), CliError> {
    let text = match (output, format) {
        (Output::Record(v), Format::Json) => emit::to_json_line(&v),
        (Output::Record(v), Format::Csv) => emit::record_to_csv(&v),
        (Output::Table(csv), _) => csv,
    };
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(|e| {
                        CliError::Invalid(format!("cannot create {}: {e}", parent.display()))
                    })?;
                }
            }
            fs::write(path, text)
                .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Run { manifest, workers } = &cli.command {
        let doc = manifest::load(manifest)?;
        return manifest::run(&doc, *workers);
    }
    let (kind, params, dump_state) = to_request(&cli.command, cli.dump_state);
    let output = experiments::execute(&kind, &params, cli.seed, dump_state)?;
    emit_output(output, cli.format, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Invalid(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Assertion(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
