//! Verification reports: one record per executed check, deterministic for a
//! fixed (manifest, seed, samples, tolerance) tuple.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Residual inside the `[tol, 10*tol)` band: neither trusted nor failed.
    Indeterminate,
    /// Hypothesis gate unmet; never affects the exit code.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residuals: Vec<ResidualEntry>,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.into(),
            residuals: Vec::new(),
            tolerance,
            verdict: Verdict::Pass,
            note: None,
        }
    }

    pub fn residual(mut self, name: impl Into<String>, value: f64) -> CheckResult {
        self.residuals.push(ResidualEntry {
            name: name.into(),
            value,
        });
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> CheckResult {
        self.note = Some(note.into());
        self
    }

    /// Classify all recorded residuals against the tolerance band.
    pub fn judge(mut self) -> CheckResult {
        let mut verdict = Verdict::Pass;
        for r in &self.residuals {
            let v = classify(r.value, self.tolerance);
            verdict = worst(verdict, v);
        }
        self.verdict = verdict;
        self
    }

    pub fn skipped(mut self, why: impl Into<String>) -> CheckResult {
        self.verdict = Verdict::Skipped;
        self.note = Some(why.into());
        self
    }

    pub fn failed(mut self, why: impl Into<String>) -> CheckResult {
        self.verdict = Verdict::Fail;
        self.note = Some(why.into());
        self
    }
}

/// Residual -> verdict with the indeterminate band `[tol, 10*tol)`.
pub fn classify(residual: f64, tol: f64) -> Verdict {
    if !residual.is_finite() {
        Verdict::Fail
    } else if residual < tol {
        Verdict::Pass
    } else if residual < 10.0 * tol {
        Verdict::Indeterminate
    } else {
        Verdict::Fail
    }
}

fn worst(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (Fail, _) | (_, Fail) => Fail,
        (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
        (Skipped, _) | (_, Skipped) => Skipped,
        _ => Pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub manifest: String,
    pub manifest_hash: String,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn new(
        manifest: impl Into<String>,
        manifest_hash: impl Into<String>,
        seed: u64,
        samples: usize,
        tolerance: f64,
    ) -> Report {
        Report {
            tool: "pg".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            manifest: manifest.into(),
            manifest_hash: manifest_hash.into(),
            seed,
            samples,
            tolerance,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn has_failures(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }

    /// Stable-key-order JSON; identical runs emit byte-identical documents.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pg {} | manifest {} ({}) | seed {} samples {} tol {:e}",
            self.version,
            self.manifest,
            &self.manifest_hash[..12.min(self.manifest_hash.len())],
            self.seed,
            self.samples,
            self.tolerance
        );
        let name_w = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(8)
            .max(8);
        for c in &self.checks {
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Indeterminate => "indet",
                Verdict::Skipped => "skip",
            };
            let residuals = if c.residuals.is_empty() {
                "-".to_string()
            } else {
                c.residuals
                    .iter()
                    .map(|r| format!("{}={:.3e}", r.name, r.value))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = write!(out, "{verdict:<6} {:name_w$}  {residuals}", c.name);
            if let Some(note) = &c.note {
                let _ = write!(out, "  [{note}]");
            }
            out.push('\n');
        }
        let (pass, fail, indet, skip) =
            self.checks
                .iter()
                .fold((0, 0, 0, 0), |acc, c| match c.verdict {
                    Verdict::Pass => (acc.0 + 1, acc.1, acc.2, acc.3),
                    Verdict::Fail => (acc.0, acc.1 + 1, acc.2, acc.3),
                    Verdict::Indeterminate => (acc.0, acc.1, acc.2 + 1, acc.3),
                    Verdict::Skipped => (acc.0, acc.1, acc.2, acc.3 + 1),
                });
        let _ = writeln!(
            out,
            "{} checks: {pass} pass, {fail} fail, {indet} indeterminate, {skip} skipped",
            self.checks.len()
        );
        out
    }
}
