//! Report files and the console summary.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::run::{Outcome, Section};

/// Check fields repeated in the summary; witnesses stay in the section files.
#[derive(Serialize)]
struct CheckLine<'a> {
    name: &'a str,
    passed: bool,
    applicable: bool,
    max_residual: f64,
    tolerance: f64,
    cases: usize,
}

#[derive(Serialize)]
struct SectionLine<'a> {
    name: &'a str,
    pass: bool,
    checks: Vec<CheckLine<'a>>,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    diagnostics: &'a std::collections::BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    seed: u64,
    tolerance: f64,
    config: Value,
    sections: Vec<SectionLine<'a>>,
    pass: bool,
}

fn section_line(s: &Section) -> SectionLine<'_> {
    SectionLine {
        name: s.name,
        pass: s.pass,
        checks: s
            .checks
            .iter()
            .map(|c| CheckLine {
                name: &c.name,
                passed: c.passed,
                applicable: c.applicable,
                max_residual: c.max_residual,
                tolerance: c.tolerance,
                cases: c.cases,
            })
            .collect(),
        diagnostics: &s.diagnostics,
    }
}

/// Summary document. The config echo leaves out where and how output goes,
/// so two runs that differ only there produce the same bytes.
pub fn summary_json(cfg: &RunConfig, outcome: &Outcome) -> Result<String> {
    let mut config = serde_json::to_value(cfg)?;
    if let Value::Object(map) = &mut config {
        map.remove("out");
        map.remove("json");
    }
    let summary = Summary {
        command: cfg.command.name(),
        seed: cfg.seed,
        tolerance: cfg.tol,
        config,
        sections: outcome.sections.iter().map(section_line).collect(),
        pass: outcome.pass(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    Ok(text)
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn lines<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row)?);
        text.push('\n');
    }
    Ok(text)
}

/// Writes via a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    // temp files start private; reports are ordinary files
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes every produced artifact plus `summary.json` into `dir`.
pub fn write_reports(dir: &Path, cfg: &RunConfig, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if let Some(rows) = &outcome.assumptions {
        write_atomic(dir, "assumptions.json", &pretty(rows)?)?;
    }
    if let Some(runs) = &outcome.grover {
        write_atomic(dir, "grover.jsonl", &lines(runs)?)?;
    }
    if let Some(report) = &outcome.teleport {
        write_atomic(dir, "teleport.json", &pretty(report)?)?;
    }
    if let Some(points) = &outcome.annex {
        write_atomic(dir, "annex.jsonl", &lines(points)?)?;
    }
    write_atomic(dir, "summary.json", &summary_json(cfg, outcome)?)
}

/// One line per check, then the verdict.
pub fn text_summary(outcome: &Outcome) -> String {
    let mut out = String::new();
    for s in &outcome.sections {
        let _ = writeln!(out, "[{}] {}", s.name, if s.pass { "pass" } else { "FAIL" });
        for c in &s.checks {
            let mark = match (c.passed, c.applicable) {
                (false, _) => "FAIL",
                (true, false) => "n/a ",
                (true, true) => "ok  ",
            };
            let _ = writeln!(out, "  {mark} {:<32} {:.3e} (tol {:.0e}, {} cases)", c.name, c.max_residual, c.tolerance, c.cases);
        }
        for (k, v) in &s.diagnostics {
            let _ = writeln!(out, "  info {k:<32} {v:.3e}");
        }
    }
    let _ = writeln!(out, "{}", if outcome.pass() { "all checks passed" } else { "some checks FAILED" });
    out
}
