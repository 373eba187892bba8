//! Manifest execution: experiments may run on worker threads, but
//! results are encoded per-experiment from explicit seeds and written in
//! manifest order, so output bytes are schedule-independent.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::emit::to_json_line;
use crate::experiments::{execute, CliError, CliResult, Output};

#[derive(Debug, Deserialize)]
pub struct Manifest {
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Debug, Deserialize)]
pub struct ExperimentSpec {
    pub kind: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    /// Seeds are explicit: no wall-clock entropy anywhere.
    pub seed: u64,
    pub output: PathBuf,
}

pub fn load(path: &Path) -> CliResult<Manifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("malformed manifest {}: {e}", path.display())))
}

fn encode(output: Output) -> String {
    match output {
        Output::Record(v) => to_json_line(&v),
        Output::Table(csv) => csv,
    }
}

/// Run every experiment and write outputs in manifest order. Returns the
/// first failure (by manifest index) if any experiment fails.
pub fn run(manifest: &Manifest, workers: usize) -> CliResult<()> {
    let workers = workers.max(1);
    let total = manifest.experiments.len();
    let results: Mutex<Vec<Option<CliResult<String>>>> = Mutex::new((0..total).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers.min(total.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let spec = &manifest.experiments[i];
                let result =
                    execute(&spec.kind, &spec.parameters, spec.seed, false).map(encode);
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut first_failure: Option<(usize, CliError)> = None;
    for (i, (spec, result)) in manifest.experiments.iter().zip(results).enumerate() {
        match result.expect("every experiment ran") {
            Ok(bytes) => {
                if let Some(parent) = spec.output.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent).map_err(|e| {
                            CliError::Invalid(format!("cannot create {}: {e}", parent.display()))
                        })?;
                    }
                }
                fs::write(&spec.output, bytes).map_err(|e| {
                    CliError::Invalid(format!("cannot write {}: {e}", spec.output.display()))
                })?;
            }
            Err(e) => {
                eprintln!(
                    "experiment {} (`{}` -> {}): {e}",
                    i,
                    spec.kind,
                    spec.output.display()
                );
                if first_failure.is_none() {
                    first_failure = Some((i, e));
                }
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some((_, e)) => Err(e),
    }
}
