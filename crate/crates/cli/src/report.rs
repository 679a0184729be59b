//! Versioned JSON reports and their plain-text rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "towerforge-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "N/A",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Stable identifier, e.g. `subgroup-count`.
    pub check: String,
    /// The statement this check instantiates, in words.
    pub claim: String,
    pub verdict: Verdict,
    pub details: Value,
}

impl Check {
    pub fn new(check: &str, claim: &str, verdict: Verdict, details: Value) -> Self {
        Check {
            check: check.to_string(),
            claim: claim.to_string(),
            verdict,
            details,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    /// The parameters that determine the output.
    pub config: Value,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, config: Value, checks: Vec<Check>) -> Self {
        let mut summary = Summary {
            total: checks.len(),
            ..Summary::default()
        };
        for c in &checks {
            match c.verdict {
                Verdict::Pass => summary.passed += 1,
                Verdict::Fail => summary.failed += 1,
                Verdict::NotApplicable => summary.not_applicable += 1,
            }
        }
        Report {
            schema: SCHEMA.to_string(),
            command: command.to_string(),
            config,
            checks,
            summary,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Wall-clock timings, kept out of the report so reports stay byte-stable.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub total_ms: f64,
    pub checks: Vec<(String, f64)>,
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({})", report.command, report.schema);
    for c in &report.checks {
        let _ = writeln!(out, "{:<5} {:<28} {}", c.verdict.label(), c.check, c.claim);
        if let Some(note) = headline(&c.details) {
            let _ = writeln!(out, "      {note}");
        }
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "{} checks: {} passed, {} failed, {} not applicable",
        s.total, s.passed, s.failed, s.not_applicable
    );
    out
}

/// The scalar fields of `details`, on one line.
fn headline(details: &Value) -> Option<String> {
    let obj = details.as_object()?;
    let parts: Vec<String> = obj
        .iter()
        .filter(|(_, v)| !v.is_object() && !v.is_array())
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

pub fn timing_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".timing.json");
    PathBuf::from(s)
}

pub fn text_path(output: &Path) -> PathBuf {
    output.with_extension("txt")
}

/// Writes the JSON report to `output`, the text rendering next to it and the
/// timing sidecar. Returns the JSON and text.
pub fn emit_report(report: &Report, timing: Option<&Timing>, output: Option<&Path>) -> std::io::Result<(String, String)> {
    let json = to_json(report);
    let text = to_text(report);
    if let Some(path) = output {
        std::fs::write(path, &json)?;
        std::fs::write(text_path(path), &text)?;
        if let Some(t) = timing {
            let mut tj = serde_json::to_string_pretty(t).expect("timing serializes");
            tj.push('\n');
            std::fs::write(timing_path(path), tj)?;
        }
    }
    Ok((json, text))
}
