use std::path::PathBuf;
use std::process::{Command, ExitCode};

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "glt", version, about = "Runs lattice spin-model experiments from TOML configs")]
struct Cli {
    /// Worker threads for the numerical kernels.
    #[arg(long, global = true, env = "GLT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the experiment catalog.
    List,
}

/// Re-executes with a conservative OpenBLAS kernel when the detected one
/// computes wrong products. `None` means the current process is fine.
fn reexec_if_blas_is_broken() -> Option<ExitCode> {
    if glt_core::linalg::blas_self_test() {
        return None;
    }
    if std::env::var_os("OPENBLAS_CORETYPE").is_some() {
        eprintln!("{}", serde_json::json!({ "status": "error", "exit_code": 1, "error": { "kind": "blas", "message": "BLAS self-test failed" } }));
        return Some(ExitCode::from(1));
    }
    let exe = std::env::current_exe().ok()?;
    let status = Command::new(exe).args(std::env::args_os().skip(1)).env("OPENBLAS_CORETYPE", "Haswell").status().ok()?;
    Some(ExitCode::from(status.code().unwrap_or(1) as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.unwrap_or(Cmd::List) {
        Cmd::List => {
            print!("{}", glt::catalog::render());
            ExitCode::SUCCESS
        }
        Cmd::Run { config, output, seed } => {
            if let Some(code) = reexec_if_blas_is_broken() {
                return code;
            }
            if let Some(n) = cli.threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("{}", serde_json::json!({ "status": "error", "exit_code": 2, "error": { "kind": "config", "message": e.to_string() } }));
                    return ExitCode::from(2);
                }
            }
            match glt::run_config(&config, output.as_deref(), seed, cli.threads) {
                Ok(outcome) => {
                    for f in &outcome.files {
                        println!("{}", outcome.output_dir.join(f).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(f) => {
                    eprintln!("{}", f.payload);
                    ExitCode::from(f.code as u8)
                }
            }
        }
    }
}
