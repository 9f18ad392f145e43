//! `shuffle-mix`: command-line front end for the exact, Monte Carlo and
//! cyclic-analysis experiments.
//!
//! Exit codes: 0 success, 1 usage or io error, 2 invalid parameters,
//! 3 horizon, cap or integrity failure.

mod args;
mod commands;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    if let Command::Rerun(r) = &cli.command {
        return rerun(&r.meta, &cli);
    }
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return Err(error::param("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let started = Instant::now();
    let output = commands::dispatch(&cli.command, cli.global.seed)?;
    let text = output.render(cli.global.format)?;
    match &cli.global.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            let meta = sidecar(&cli, argv, started.elapsed().as_secs_f64())?;
            std::fs::write(meta_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Arguments that repeat the run: the original ones without `--out` and
/// with the resolved seed made explicit.
fn rerun_argv(argv: &[String], seed: u64) -> Vec<String> {
    let mut out = vec!["--seed".to_string(), seed.to_string()];
    let mut skip = false;
    for a in argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" || a == "--seed" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--seed=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn sidecar(cli: &Cli, argv: &[String], wall: f64) -> Result<Value, CliError> {
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(json!({
        "command": cli.command.name(),
        "argv": argv.iter().skip(1).collect::<Vec<_>>(),
        "rerun_argv": rerun_argv(argv, cli.global.seed),
        "config": serde_json::to_value(cli)?,
        "version": shuffle_mix::VERSION,
        "wall_time_secs": wall,
        "finished_unix": finished,
    }))
}

fn rerun(meta: &Path, current: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(meta)?;
    let value: Value = serde_json::from_str(&text)?;
    let saved: Vec<String> = serde_json::from_value(
        value
            .get("rerun_argv")
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("{} has no rerun_argv", meta.display())))?,
    )?;
    let mut argv = vec!["shuffle-mix".to_string()];
    argv.extend(saved);
    if let Some(out) = &current.global.out {
        argv.push("--out".into());
        argv.push(out.display().to_string());
    }
    if let Some(t) = current.global.threads {
        argv.push("--threads".into());
        argv.push(t.to_string());
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(CliError::Usage("rerun cannot be nested".into()));
    }
    run(cli, &argv)
}
