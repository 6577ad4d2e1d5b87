//! Run configuration: defaults, an optional TOML file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml_edit::{ImDocument, Item, Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Curvature,
    Gradients,
    Symbols,
    Variations,
    Hessian,
    Flow,
    All,
}

impl Suite {
    /// Every concrete suite in execution order.
    pub const CONCRETE: [Suite; 7] = [
        Suite::Identities,
        Suite::Curvature,
        Suite::Gradients,
        Suite::Symbols,
        Suite::Variations,
        Suite::Hessian,
        Suite::Flow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Curvature => "curvature",
            Suite::Gradients => "gradients",
            Suite::Symbols => "symbols",
            Suite::Variations => "variations",
            Suite::Hessian => "hessian",
            Suite::Flow => "flow",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::CONCRETE
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
    }

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::CONCRETE.to_vec(),
            s => vec![s],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    /// Points per active axis; convergence studies use half and twice this.
    pub points: usize,
    pub period: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSettings {
    /// `σ` in the stability bound `dt ≤ σh²`; runs use `dt = σh²`.
    pub sigma: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub suite: Suite,
    pub seed: u64,
    pub grid: GridConfig,
    pub flow: FlowSettings,
    /// Replacement bound for the residual checks of a suite.
    pub tolerances: BTreeMap<Suite, f64>,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suite: Suite::All,
            seed: 42,
            grid: GridConfig {
                points: 64,
                period: std::f64::consts::TAU,
                amplitude: 0.05,
            },
            flow: FlowSettings { sigma: 0.1, steps: 10 },
            tolerances: BTreeMap::new(),
            output_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if !self.key.is_empty() {
            write!(f, " in `{}`", self.key)?;
        }
        if let Some(l) = self.line {
            write!(f, " (line {l})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Overrides from the command line; `None` leaves the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub suite: Option<Suite>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub amplitude: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line_of(&self, item_span: Option<std::ops::Range<usize>>) -> Option<usize> {
        item_span.map(|s| self.text[..s.start.min(self.text.len())].matches('\n').count() + 1)
    }

    fn err(&self, key: &str, span: Option<std::ops::Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: self.line_of(span),
            message: message.into(),
        }
    }

    fn value<'v>(&self, key: &str, item: &'v Item) -> Result<&'v Value, ConfigError> {
        item.as_value()
            .ok_or_else(|| self.err(key, item.span(), "expected a value, found a table"))
    }

    fn float(&self, key: &str, item: &Item) -> Result<f64, ConfigError> {
        let v = self.value(key, item)?;
        let x = match v {
            Value::Float(f) => *f.value(),
            Value::Integer(i) => *i.value() as f64,
            other => {
                return Err(self.err(
                    key,
                    v.span(),
                    format!("expected a number, found {}", other.type_name()),
                ))
            }
        };
        if !(x.is_finite() && x > 0.0) {
            return Err(self.err(key, v.span(), format!("must be a positive number, found {x}")));
        }
        Ok(x)
    }

    fn integer(&self, key: &str, item: &Item) -> Result<i64, ConfigError> {
        let v = self.value(key, item)?;
        v.as_integer().ok_or_else(|| {
            self.err(key, v.span(), format!("expected an integer, found {}", v.type_name()))
        })
    }

    fn string<'v>(&self, key: &str, item: &'v Item) -> Result<&'v str, ConfigError> {
        let v = self.value(key, item)?;
        v.as_str()
            .ok_or_else(|| self.err(key, v.span(), format!("expected a string, found {}", v.type_name())))
    }

    fn table<'v>(&self, key: &str, item: &'v Item) -> Result<&'v Table, ConfigError> {
        item.as_table()
            .ok_or_else(|| self.err(key, item.span(), "expected a table"))
    }

    fn unknown(&self, path: &str, table: &Table, key: &str) -> ConfigError {
        let span = table.key(key).and_then(|k| k.span());
        self.err(path, span, "unknown key")
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

pub fn check_points(n: usize) -> Result<(), String> {
    if n.is_power_of_two() && (16..=256).contains(&n) {
        Ok(())
    } else {
        Err(format!("grid points must be a power of two in [16, 256], found {n}"))
    }
}

/// Applies a TOML document on top of `cfg`; unknown keys are rejected.
pub fn apply_toml(cfg: &mut RunConfig, text: &str) -> Result<(), ConfigError> {
    let src = Source { text };
    let doc = ImDocument::parse(text).map_err(|e| ConfigError {
        key: String::new(),
        line: src.line_of(e.span()),
        message: e.message().to_string(),
    })?;
    let root = doc.as_table();
    for (key, item) in root.iter() {
        match key {
            "suite" => {
                let s = src.string(key, item)?;
                cfg.suite = Suite::parse(s)
                    .ok_or_else(|| src.err(key, item.span(), format!("unknown suite `{s}`")))?;
            }
            "seed" => {
                let s = src.integer(key, item)?;
                cfg.seed = u64::try_from(s)
                    .map_err(|_| src.err(key, item.span(), "seed must be non-negative"))?;
            }
            "output_dir" => cfg.output_dir = Some(PathBuf::from(src.string(key, item)?)),
            "grid" => {
                let t = src.table(key, item)?;
                for (k, it) in t.iter() {
                    let path = join(key, k);
                    match k {
                        "points" => {
                            let n = src.integer(&path, it)?;
                            let n = usize::try_from(n).unwrap_or(0);
                            check_points(n).map_err(|m| src.err(&path, it.span(), m))?;
                            cfg.grid.points = n;
                        }
                        "period" => cfg.grid.period = src.float(&path, it)?,
                        "amplitude" => cfg.grid.amplitude = src.float(&path, it)?,
                        _ => return Err(src.unknown(&path, t, k)),
                    }
                }
            }
            "flow" => {
                let t = src.table(key, item)?;
                for (k, it) in t.iter() {
                    let path = join(key, k);
                    match k {
                        "sigma" => cfg.flow.sigma = src.float(&path, it)?,
                        "steps" => {
                            let n = src.integer(&path, it)?;
                            cfg.flow.steps = usize::try_from(n)
                                .ok()
                                .filter(|&n| n > 0)
                                .ok_or_else(|| src.err(&path, it.span(), "steps must be positive"))?;
                        }
                        _ => return Err(src.unknown(&path, t, k)),
                    }
                }
            }
            "tolerances" => {
                let t = src.table(key, item)?;
                for (k, it) in t.iter() {
                    let path = join(key, k);
                    let suite = Suite::parse(k)
                        .filter(|s| *s != Suite::All)
                        .ok_or_else(|| src.unknown(&path, t, k))?;
                    cfg.tolerances.insert(suite, src.float(&path, it)?);
                }
            }
            _ => return Err(src.unknown(key, root, key)),
        }
    }
    Ok(())
}

/// Defaults, then the file at `path` if given, then `flags`.
pub fn parse_config(path: Option<&Path>, flags: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
            key: String::new(),
            line: None,
            message: format!("cannot read {}: {e}", p.display()),
        })?;
        apply_toml(&mut cfg, &text)?;
    }
    let flag_err = |key: &str, message: String| ConfigError {
        key: key.to_string(),
        line: None,
        message,
    };
    if let Some(s) = flags.suite {
        cfg.suite = s;
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(n) = flags.grid {
        check_points(n).map_err(|m| flag_err("--grid", m))?;
        cfg.grid.points = n;
    }
    if let Some(a) = flags.amplitude {
        if !(a.is_finite() && a > 0.0) {
            return Err(flag_err("--amplitude", format!("must be positive, found {a}")));
        }
        cfg.grid.amplitude = a;
    }
    if let Some(d) = &flags.output_dir {
        cfg.output_dir = Some(d.clone());
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let mut cfg = RunConfig::default();
        apply_toml(&mut cfg, "").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.suite, Suite::All);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.grid.points, 64);
        assert_eq!(cfg.grid.amplitude, 0.05);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 9\nsuite = \"flow\"\n").unwrap();
        let flags = Overrides {
            suite: Some(Suite::Identities),
            seed: Some(7),
            ..Default::default()
        };
        let cfg = parse_config(Some(&path), &flags).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.suite, Suite::Identities);
        let cfg = parse_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.suite, Suite::Flow);
    }

    #[test]
    fn malformed_tolerance_names_key_and_line() {
        let mut cfg = RunConfig::default();
        let text = "seed = 1\n\n[tolerances]\nidentities = \"abc\"\n";
        let e = apply_toml(&mut cfg, text).unwrap_err();
        assert_eq!(e.key, "tolerances.identities");
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().contains("tolerances.identities"));
    }

    #[test]
    fn unknown_and_invalid_keys_rejected() {
        let mut cfg = RunConfig::default();
        let e = apply_toml(&mut cfg, "[grid]\npoints = 64\nspacing = 2\n").unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("grid.spacing", Some(3)));
        let e = apply_toml(&mut cfg, "[grid]\npoints = 48\n").unwrap_err();
        assert_eq!(e.key, "grid.points");
        let e = apply_toml(&mut cfg, "[tolerances]\nflow = -1.0\n").unwrap_err();
        assert_eq!(e.key, "tolerances.flow");
        let e = apply_toml(&mut cfg, "colour = 1\n").unwrap_err();
        assert_eq!(e.key, "colour");
        assert!(apply_toml(&mut cfg, "seed = [").is_err());
    }

    #[test]
    fn full_file_is_read() {
        let mut cfg = RunConfig::default();
        let text = "suite = \"symbols\"\nseed = 3\noutput_dir = \"out\"\n[grid]\npoints = 32\nperiod = 1\namplitude = 0.01\n[flow]\nsigma = 0.05\nsteps = 4\n[tolerances]\nidentities = 1e-8\n";
        apply_toml(&mut cfg, text).unwrap();
        assert_eq!(cfg.suite, Suite::Symbols);
        assert_eq!(cfg.grid, GridConfig { points: 32, period: 1.0, amplitude: 0.01 });
        assert_eq!(cfg.flow, FlowSettings { sigma: 0.05, steps: 4 });
        assert_eq!(cfg.tolerances[&Suite::Identities], 1e-8);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("out")));
    }
}
