//! Report assembly. A report body is deterministic; the only varying line is
//! the timestamp comment prepended when a CSV file is written.

use std::fmt::Write as _;

use serde::Serialize;

/// One `measured ≤ tolerance` comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }

    /// A yes/no condition as a check with tolerance 0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    /// `measured / tolerance`, infinite for a failed zero-tolerance check.
    pub fn severity(&self) -> f64 {
        if self.measured.is_nan() {
            f64::INFINITY
        } else if self.tolerance > 0.0 {
            self.measured / self.tolerance
        } else if self.measured <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// A numerical error that ended a command, by machine-readable code.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub s: Option<f64>,
    pub message: String,
}

impl Failure {
    pub fn from_error(e: &doiflow_core::Error, s: Option<f64>) -> Self {
        Failure { code: e.code().to_string(), s, message: e.to_string() }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub body: String,
    pub checks: Vec<Check>,
    pub failure: Option<Failure>,
    pub is_csv: bool,
}

impl Report {
    /// 0 success, 1 failed check, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            3
        } else if self.checks.iter().any(|c| !c.passed) {
            1
        } else {
            0
        }
    }

    /// File contents; CSV reports get a leading timestamp comment.
    pub fn render(&self, command: &str, timestamp: Option<u64>) -> String {
        match (self.is_csv, timestamp) {
            (true, Some(ts)) => format!("# doiflow {command} generated_unix={ts}\n{}", self.body),
            _ => self.body.clone(),
        }
    }
}

/// Builds a CSV body: config echo, header, rows, then checks and any failure
/// as trailing comments.
pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new(config_echo: &str, header: &str) -> Self {
        CsvBuilder { text: format!("# config: {config_echo}\n{header}\n") }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(mut self, checks: Vec<Check>, failure: Option<Failure>) -> Report {
        for c in &checks {
            let status = if c.passed { "pass" } else { "fail" };
            let _ = writeln!(self.text, "# check {}: measured={:e} tolerance={:e} status={status}", c.name, c.measured, c.tolerance);
        }
        if let Some(f) = &failure {
            let at = f.s.map(|s| format!(" at s={s:e}")).unwrap_or_default();
            let _ = writeln!(self.text, "# error {}{at}: {}", f.code, f.message);
        }
        Report { body: self.text, checks, failure, is_csv: true }
    }
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Drops `#` comment lines, leaving header and rows.
pub fn csv_rows(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}
