//! Check records and reports, rendered as JSON and as fixed-width text.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|actual − expected| ≤ tolerance`.
    Within,
    /// `actual ≤ tolerance`; expected is zero.
    AtMost,
    /// `actual ≥ expected`.
    AtLeast,
    /// `actual == expected` as written.
    Exact,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    pub expected: Value,
    pub actual: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Check {
    fn new(name: &str, comparison: Comparison, expected: Value, actual: Value, tolerance: Option<f64>, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            comparison,
            expected,
            actual,
            tolerance,
            pass,
            note: None,
            detail: None,
        }
    }

    pub fn within(name: &str, expected: f64, actual: f64, tol: f64) -> Self {
        let pass = (actual - expected).abs() <= tol;
        Self::new(name, Comparison::Within, num(expected), num(actual), Some(tol), pass)
    }

    pub fn at_most(name: &str, actual: f64, tol: f64) -> Self {
        let pass = actual <= tol;
        Self::new(name, Comparison::AtMost, num(0.0), num(actual), Some(tol), pass)
    }

    pub fn at_least(name: &str, actual: f64, bound: f64) -> Self {
        let pass = actual >= bound;
        Self::new(name, Comparison::AtLeast, num(bound), num(actual), None, pass)
    }

    pub fn exact(name: &str, expected: impl ToString, actual: impl ToString) -> Self {
        let (e, a) = (expected.to_string(), actual.to_string());
        let pass = e == a;
        Self::new(name, Comparison::Exact, Value::String(e), Value::String(a), None, pass)
    }

    /// A check that could not be evaluated.
    pub fn error(name: &str, message: impl ToString) -> Self {
        let mut c = Self::new(name, Comparison::Exact, Value::String("ok".into()), Value::Null, None, false);
        c.note = Some(message.to_string());
        c
    }

    pub fn note(mut self, note: impl ToString) -> Self {
        self.note = Some(note.to_string());
        self
    }

    pub fn detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).ok();
        self
    }

    pub fn actual_f64(&self) -> Option<f64> {
        self.actual.as_f64()
    }

    /// Re-evaluates an `AtMost` check against a new bound.
    pub fn retolerate(&mut self, tol: f64) {
        if self.comparison == Comparison::AtMost {
            self.tolerance = Some(tol);
            self.pass = self.actual_f64().is_some_and(|a| a <= tol);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(name: &str, checks: Vec<Check>) -> Self {
        SuiteReport {
            name: name.to_string(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub config: Value,
}

/// Everything that varies between otherwise identical runs.
#[derive(Clone, Debug, Serialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub wall_time_s: f64,
    pub suite_wall_time_s: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub pass: bool,
    pub environment: Environment,
    pub suites: Vec<SuiteReport>,
    pub timestamp: Timestamp,
}

impl Report {
    pub fn check(&self, suite: &str, name: &str) -> Option<&Check> {
        self.suites.iter().find(|s| s.name == suite)?.check(name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "g2forge {}  suite={}  seed={}",
            self.environment.version, self.suite, self.environment.seed
        );
        for suite in &self.suites {
            let _ = writeln!(s, "\n[{}] {}", suite.name, if suite.pass { "PASS" } else { "FAIL" });
            for c in &suite.checks {
                let bound = match (c.comparison, c.tolerance) {
                    (Comparison::Within, Some(t)) => format!("{} ± {t:e}", show(&c.expected)),
                    (Comparison::AtMost, Some(t)) => format!("≤ {t:e}"),
                    (Comparison::AtLeast, _) => format!("≥ {}", show(&c.expected)),
                    _ => format!("= {}", show(&c.expected)),
                };
                let _ = writeln!(
                    s,
                    "  {:4}  {:<44} {:>24}  {}",
                    if c.pass { "ok" } else { "FAIL" },
                    c.name,
                    show(&c.actual),
                    bound
                );
                if let Some(n) = &c.note {
                    let _ = writeln!(s, "        {n}");
                }
            }
        }
        let _ = writeln!(
            s,
            "\n{}  ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.timestamp.wall_time_s
        );
        s
    }
}

fn show(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) => format!("{x:.4e}"),
            Some(x) => format!("{x:.6}"),
            None => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Check::within("a", 42.0, 42.0 + 1e-13, 1e-12).pass);
        assert!(!Check::within("a", 42.0, 42.1, 1e-12).pass);
        assert!(Check::at_most("b", 1e-9, 1e-8).pass);
        assert!(!Check::at_most("b", f64::NAN, 1e-8).pass);
        assert!(Check::at_least("c", 4.0, 3.6).pass);
        assert!(!Check::exact("d", "-1/3", "1/3").pass);
        assert!(!Check::error("e", "boom").pass);
        let mut c = Check::at_most("f", 1e-6, 1e-8);
        c.retolerate(1e-5);
        assert!(c.pass);
    }

    #[test]
    fn suite_pass_requires_every_check() {
        let s = SuiteReport::new("x", vec![Check::at_most("a", 0.0, 1.0), Check::at_most("b", 2.0, 1.0)]);
        assert!(!s.pass);
        assert!(s.check("a").unwrap().pass);
    }
}
