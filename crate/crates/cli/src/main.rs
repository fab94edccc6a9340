use std::path::PathBuf;
use std::process::ExitCode;

use atcrit::config::RunConfig;
use atcrit::dump::write_json;
use atcrit::runner::{self, ExitStatus};
use atcrit::variations::{DiagnoseOptions, DiagnosticToggles};
use clap::{Args, Parser, Subcommand};

/// Phase-field critical points and their diagnostics.
#[derive(Debug, Parser)]
#[command(name = "atcrit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` from the config.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Alternate minimization at a single eps.
    Solve(Common),
    /// Run the eps schedule with warm starts.
    Continuation(Common),
    /// Recompute energies and diagnostics from a state dump.
    Diagnose {
        #[arg(long)]
        state: PathBuf,
        /// Optional config supplying `diagnostics`, `mu_blocks`, `flow_step`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for `diagnostics.json`; printed to stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn set_threads(cli: Option<usize>, cfg: Option<usize>) -> Result<(), String> {
    match cli.or(cfg) {
        Some(n) => atcrit::parallel::configure_threads(n).map_err(|e| format!("threads: {e}")),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<ExitStatus, String> {
    let err = |e: atcrit::Error| e.to_string();
    match cli.command {
        Command::Solve(c) => {
            let cfg = RunConfig::from_file(&c.config).map_err(err)?;
            set_threads(c.threads, cfg.threads)?;
            runner::run_solve(&cfg, c.out.as_deref()).map_err(err)
        }
        Command::Continuation(c) => {
            let cfg = RunConfig::from_file(&c.config).map_err(err)?;
            set_threads(c.threads, cfg.threads)?;
            runner::run_continuation(&cfg, c.out.as_deref()).map_err(err)
        }
        Command::Diagnose {
            state,
            config,
            out,
            threads,
        } => {
            let (toggles, opts, cfg_threads) = match config {
                Some(path) => {
                    let cfg = RunConfig::from_file(&path).map_err(err)?;
                    let opts = DiagnoseOptions {
                        mu_k: cfg.mu_blocks,
                        flow_t: cfg.flow_step,
                        ..DiagnoseOptions::default()
                    };
                    (cfg.diagnostics, opts, cfg.threads)
                }
                None => (DiagnosticToggles::all(), DiagnoseOptions::default(), None),
            };
            set_threads(threads, cfg_threads)?;
            let report = runner::run_diagnose(&state, &toggles, &opts).map_err(err)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                    write_json(&dir.join("diagnostics.json"), &report).map_err(err)?;
                }
                None => {
                    let text = atcrit::dump::to_json_string(&report).map_err(err)?;
                    println!("{text}");
                }
            }
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
