//! Check results, the fixed CSV schema and the plain-text summary.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Outcome of a single check, one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check_id: String,
    pub alpha: f64,
    pub rho: f64,
    pub x: f64,
    pub eps_or_delta: f64,
    pub expected: f64,
    pub observed: f64,
    pub std_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub runtime_ms: u64,
    pub reason: String,
}

pub const CSV_HEADER: &str =
    "check_id,alpha,rho,x,eps_or_delta,expected,observed,std_error,tolerance,passed,runtime_ms,reason";

fn esc(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(results: &[CheckResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            esc(&r.check_id),
            r.alpha,
            r.rho,
            r.x,
            r.eps_or_delta,
            r.expected,
            r.observed,
            r.std_error,
            r.tolerance,
            r.passed,
            r.runtime_ms,
            esc(&r.reason)
        );
    }
    out
}

fn split_fields(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn from_csv(text: &str) -> Result<Vec<CheckResult>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty results file".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected header: {header}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line);
        if f.len() != 12 {
            return Err(Error::Config(format!(
                "row {}: expected 12 fields, got {}",
                i + 2,
                f.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("row {}: bad number '{s}'", i + 2)))
        };
        out.push(CheckResult {
            check_id: f[0].clone(),
            alpha: num(&f[1])?,
            rho: num(&f[2])?,
            x: num(&f[3])?,
            eps_or_delta: num(&f[4])?,
            expected: num(&f[5])?,
            observed: num(&f[6])?,
            std_error: num(&f[7])?,
            tolerance: num(&f[8])?,
            passed: f[9] == "true",
            runtime_ms: f[10]
                .parse()
                .map_err(|_| Error::Config(format!("row {}: bad runtime", i + 2)))?,
            reason: f[11].clone(),
        });
    }
    Ok(out)
}

pub fn write_results(dir: &Path, suite_name: &str, results: &[CheckResult]) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {dir:?}: {e}")))?;
    let path = dir.join(format!("{suite_name}.csv"));
    std::fs::write(&path, to_csv(results))
        .map_err(|e| Error::Config(format!("cannot write {path:?}: {e}")))?;
    Ok(())
}

pub fn summary_line(suite_name: &str, results: &[CheckResult]) -> String {
    let passed = results.iter().filter(|r| r.passed).count();
    format!("{suite_name}: {passed}/{} checks passed", results.len())
}
