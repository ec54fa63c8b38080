//! `bfbs` — exterior Bernoulli free boundary solver.
//!
//! Subcommands: `solve <config>`, `verify <config>`, `oracle <p> <n> <a>
//! <c>`, `sweep <config>`. Exit codes: 0 success, 1 convergence or check
//! failure, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod artifacts;

#[derive(Parser)]
#[command(name = "bfbs", version, about = "Exterior Bernoulli free boundary solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the free boundary problem of a config and write artifacts.
    Solve { config: PathBuf },
    /// Run the property-check suite of a config; nonzero exit on failure.
    Verify { config: PathBuf },
    /// Radial Bernoulli radius: prints {"R": ..., "residual": ...}.
    Oracle { p: f64, n: u32, a: f64, c: f64 },
    /// Sweep (p, c) cells of a config and write sweep.csv.
    Sweep { config: PathBuf },
}

/// Output directory: the config value unless BFBS_OUTPUT_DIR overrides it.
fn output_dir(cfg_dir: &Path) -> PathBuf {
    match std::env::var_os("BFBS_OUTPUT_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => cfg_dir.to_path_buf(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Solve { config } => run(&config, artifacts::run_solve),
        Cmd::Verify { config } => run(&config, artifacts::run_verify),
        Cmd::Sweep { config } => run(&config, artifacts::run_sweep),
        Cmd::Oracle { p, n, a, c } => artifacts::run_oracle(p, n, a, c),
    };
    ExitCode::from(code)
}

fn run(config: &Path, f: fn(&bfbs_core::config::RunConfig, &Path) -> u8) -> u8 {
    let cfg = match bfbs_core::config::parse_config(config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let out = output_dir(&cfg.output_dir);
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("cannot create output directory {}: {e}", out.display());
        return 2;
    }
    f(&cfg, &out)
}
