//! Config-driven experiment runner.

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::RunError;
use output::Artifact;

/// Exit code for a schema or model-construction error.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for a numerical failure or an I/O error.
pub const EXIT_NUMERIC: i32 = 1;

/// A failed `run`, with its exit code and the JSON payload for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub payload: serde_json::Value,
}

impl Failure {
    fn config(e: &ConfigError) -> Self {
        Failure {
            code: EXIT_CONFIG,
            payload: json!({ "status": "error", "exit_code": EXIT_CONFIG, "error": { "kind": "config", "line": e.line, "message": e.to_string() } }),
        }
    }

    fn numeric(e: &glt_core::Error) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            payload: json!({ "status": "error", "exit_code": EXIT_NUMERIC, "error": e, "message": e.to_string() }),
        }
    }

    fn io(path: &Path, e: &std::io::Error) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            payload: json!({ "status": "error", "exit_code": EXIT_NUMERIC, "error": { "kind": "io", "path": path, "message": e.to_string() } }),
        }
    }
}

/// Files produced by a successful run.
#[derive(Debug)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

/// Loads, runs and writes one experiment; outputs appear only on success.
pub fn run_config(path: &Path, output: Option<&Path>, seed: Option<u64>, threads: Option<usize>) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(&ConfigError::new(format!("cannot read {}: {e}", path.display()))))?;
    let cfg = config::parse(&text, seed).map_err(|e| Failure::config(&e))?;
    let mut artifacts = experiments::run(&cfg).map_err(|e| match e {
        RunError::Config(c) => Failure::config(&c),
        RunError::Numeric(n) => Failure::numeric(&n),
    })?;
    let stamp = output::Stamp { experiment: cfg.kind, hash: cfg.hash.clone(), seed: cfg.seed };
    let names: Vec<String> = artifacts.iter().map(|a| a.name.clone()).collect();
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": glt_core::VERSION,
        "config": cfg.echo,
        "files": names,
        "timing": "run.log",
    });
    artifacts.push(output::json(&stamp, "manifest.json", &manifest));
    let dir = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let log = format!(
        "experiment={} config_sha256={} seed={} threads={} wall_time_s={:.3}\n",
        cfg.kind,
        cfg.hash,
        cfg.seed,
        threads.unwrap_or_else(rayon::current_num_threads),
        start.elapsed().as_secs_f64()
    );
    artifacts.push(Artifact { name: "run.log".into(), bytes: log.into_bytes() });
    output::write_all(&dir, &artifacts).map_err(|e| Failure::io(&dir, &e))?;
    Ok(Outcome { output_dir: dir, files: artifacts.into_iter().map(|a| a.name).collect() })
}
