use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use deepwave_cli::{apply_overrides, load_config, run_command, Overrides, OUT_ENV};

/// Run a deepwave experiment described by a TOML file.
#[derive(Parser, Debug)]
#[command(name = "deepwave", version)]
struct Args {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides DEEPWAVE_OUT and the file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long)]
    tolerance_scale: Option<f64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 2 } else { 0 };
            return ExitCode::from(code);
        }
    };
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides { out: args.out, seed: args.seed, tolerance_scale: args.tolerance_scale };
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    if let Err(e) = apply_overrides(&mut cfg, &overrides, env_out) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if args.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    match run_command(&cfg, args.threads) {
        Ok(m) => {
            for t in m.tasks.iter().filter(|t| t.status == deepwave_cli::TaskStatus::Failed) {
                eprintln!("failed: {}: {}", t.name, t.message.as_deref().unwrap_or(""));
            }
            println!(
                "{} tasks, {} failed, {} files in {}",
                m.tasks.len(),
                m.failed_tasks(),
                m.files.len(),
                cfg.out.display()
            );
            ExitCode::from(m.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
