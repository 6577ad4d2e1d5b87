use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use g2forge_cli::config::{parse_config, ConfigError, Overrides, Suite};
use g2forge_cli::{exit_code, run, write_report, EXIT_CONFIG};

/// Verification runner for G2-structure identities, variations, symbols and flows.
#[derive(Parser, Debug)]
#[command(name = "g2forge", version)]
struct Cli {
    /// Suite to run.
    #[arg(value_enum)]
    suite: Option<Suite>,
    /// Same as the positional suite; takes precedence over it.
    #[arg(long = "suite", value_enum)]
    suite_flag: Option<Suite>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Points per grid axis (power of two, 16 to 256).
    #[arg(long)]
    grid: Option<usize>,
    /// Amplitude of the random test fields.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Directory for report.json, report.txt, flow monitors and field snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    json: bool,
}

fn threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("G2FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
        key: "G2FORGE_THREADS".into(),
        line: None,
        message: format!("expected a positive integer, found `{v}`"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError {
            key: "G2FORGE_THREADS".into(),
            line: None,
            message: e.to_string(),
        })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let flags = Overrides {
        suite: cli.suite_flag.or(cli.suite),
        seed: cli.seed,
        grid: cli.grid,
        amplitude: cli.amplitude,
        output_dir: cli.out.clone(),
    };
    let cfg = match threads().and_then(|_| parse_config(cli.config.as_deref(), &flags)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("g2forge: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let report = run(&cfg);
    if cli.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if let Some(dir) = &cfg.output_dir {
        if let Err(e) = write_report(dir, &report) {
            eprintln!("g2forge: cannot write report to {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(exit_code(&report) as u8)
}
