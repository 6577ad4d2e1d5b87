//! Configuration, suite orchestration and reporting behind the `g2forge` binary.

pub mod config;
pub mod report;
pub mod suites;

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use config::RunConfig;
use report::{Environment, Report, Timestamp};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs the configured suites; report files go to `cfg.output_dir` when set.
pub fn run(cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let out = cfg.output_dir.as_deref();
    let mut suites = Vec::new();
    let mut times = Vec::new();
    for s in cfg.suite.expand() {
        let t = Instant::now();
        suites.push(suites::run_suite(s, cfg, out));
        times.push((s.name().to_string(), t.elapsed().as_secs_f64()));
    }
    Report {
        suite: cfg.suite.name().to_string(),
        pass: suites.iter().all(|s| s.pass),
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config: serde_json::to_value(cfg).unwrap_or_default(),
        },
        suites,
        timestamp: Timestamp {
            unix_seconds,
            wall_time_s: start.elapsed().as_secs_f64(),
            suite_wall_time_s: times,
        },
    }
}

pub fn exit_code(report: &Report) -> i32 {
    if report.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    std::fs::write(dir.join("report.txt"), report.to_text())
}
