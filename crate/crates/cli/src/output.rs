use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const CHECK_SCHEMA: &str = "staticlab/check/v1";
pub const SUMMARY_SCHEMA: &str = "staticlab/summary/v1";
pub const CHECKS_FILE: &str = "checks.jsonl";

/// One (model, check) result; written as one JSON line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema: String,
    pub model: String,
    pub suite: String,
    pub check: String,
    /// `NaN` when the check errored; serialized as `null`.
    #[serde(deserialize_with = "null_as_nan")]
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the check does not apply to the model; skipped checks pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default)]
    pub detail: serde_json::Value,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckReport {
    pub fn measured(model: &str, suite: &str, check: &str, value: f64, tolerance: f64) -> Self {
        CheckReport {
            schema: CHECK_SCHEMA.into(),
            model: model.into(),
            suite: suite.into(),
            check: check.into(),
            value,
            tolerance,
            // NaN never passes
            passed: value <= tolerance,
            skipped: None,
            detail: serde_json::Value::Null,
        }
    }

    /// A check that must hold as stated (`passed` given directly).
    pub fn flag(model: &str, suite: &str, check: &str, passed: bool, detail: serde_json::Value) -> Self {
        CheckReport {
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed,
            detail,
            ..CheckReport::measured(model, suite, check, 0.0, 0.0)
        }
    }

    pub fn skipped(model: &str, suite: &str, check: &str, reason: impl Into<String>) -> Self {
        CheckReport {
            value: 0.0,
            passed: true,
            skipped: Some(reason.into()),
            ..CheckReport::measured(model, suite, check, 0.0, 0.0)
        }
    }

    pub fn failed(model: &str, suite: &str, check: &str, error: impl std::fmt::Display) -> Self {
        CheckReport {
            value: f64::NAN,
            passed: false,
            detail: serde_json::json!({ "error": error.to_string() }),
            ..CheckReport::measured(model, suite, check, f64::NAN, 0.0)
        }
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn line(&self) -> String {
        let status = match (&self.skipped, self.passed) {
            (Some(_), _) => "SKIP",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        match &self.skipped {
            Some(why) => format!("{status} {:<20} {:<10} {:<28} {why}", self.model, self.suite, self.check),
            None => {
                let mut s = format!(
                    "{status} {:<20} {:<10} {:<28} {:>11.3e} (tol {:.0e})",
                    self.model, self.suite, self.check, self.value, self.tolerance
                );
                if let (Some(l), Some(r)) = (self.detail["lhs"].as_f64(), self.detail["rhs"].as_f64()) {
                    s += &format!("  lhs = {l:.10e}, rhs = {r:.10e}");
                }
                s
            }
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_jsonl(path: &Path, reports: &[CheckReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<CheckReport>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

/// A CSV side file: header plus rows of numbers.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// File-system friendly version of a model name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SuiteTally {
    pub model: String,
    pub suite: String,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub files: Vec<PathBuf>,
    pub checks: usize,
    pub failed: usize,
    pub tallies: Vec<SuiteTally>,
}

pub fn summarize(files: Vec<PathBuf>, reports: &[CheckReport]) -> Summary {
    let mut tallies: Vec<SuiteTally> = Vec::new();
    for r in reports {
        let pos = tallies.iter().position(|t| t.model == r.model && t.suite == r.suite);
        let t = match pos {
            Some(i) => &mut tallies[i],
            None => {
                tallies.push(SuiteTally {
                    model: r.model.clone(),
                    suite: r.suite.clone(),
                    ..SuiteTally::default()
                });
                tallies.last_mut().unwrap()
            }
        };
        if r.skipped.is_some() {
            t.skipped += 1;
        } else if r.passed {
            t.passed += 1;
        } else {
            t.failed += 1;
        }
    }
    Summary {
        schema: SUMMARY_SCHEMA.into(),
        files,
        checks: reports.len(),
        failed: reports.iter().filter(|r| !r.passed).count(),
        tallies,
    }
}
