//! Reproduction manifests: declarative rows binding a CLI invocation to an
//! expected value and an acceptance band.
//!
//! One row per line, fields separated by `|`:
//!
//! ```text
//! id | invocation | selector | expected | lo | hi | note
//! ```
//!
//! `#` starts a comment. The invocation is the argument list passed to the
//! CLI. The selector picks one number from its output:
//!
//! * `.field` reads a top-level JSON field;
//! * `key=value&key=value:column` picks the single CSV row matching every
//!   filter and reads `column`;
//! * either form may end in `/other` to divide by a second field or column
//!   of the same row (ratio bands).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::process::Command;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    pub args: Vec<String>,
    pub selector: Selector,
    pub expected: f64,
    pub lo: f64,
    pub hi: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Json {
        field: String,
        divisor: Option<String>,
    },
    Csv {
        filters: Vec<(String, String)>,
        column: String,
        divisor: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestError(pub String);

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ManifestError {}

fn split_ratio(expr: &str) -> (String, Option<String>) {
    match expr.split_once('/') {
        Some((a, b)) => (a.trim().to_string(), Some(b.trim().to_string())),
        None => (expr.trim().to_string(), None),
    }
}

impl Selector {
    pub fn parse(s: &str) -> Result<Self, ManifestError> {
        let s = s.trim();
        if let Some(field) = s.strip_prefix('.') {
            let (field, divisor) = split_ratio(field);
            return Ok(Selector::Json { field, divisor });
        }
        let (filter, column) = s
            .rsplit_once(':')
            .ok_or_else(|| ManifestError(format!("selector {s:?} has no ':column'")))?;
        let filters = filter
            .split('&')
            .filter(|f| !f.trim().is_empty())
            .map(|f| {
                f.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| ManifestError(format!("bad filter {f:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (column, divisor) = split_ratio(column);
        Ok(Selector::Csv {
            filters,
            column,
            divisor,
        })
    }

    /// Extracts the selected number from a command's stdout.
    pub fn evaluate(&self, output: &str) -> Result<f64, ManifestError> {
        match self {
            Selector::Json { field, divisor } => {
                let doc: serde_json::Value = serde_json::from_str(output.trim())
                    .map_err(|e| ManifestError(format!("output is not JSON: {e}")))?;
                let get = |name: &str| {
                    doc.get(name)
                        .and_then(serde_json::Value::as_f64)
                        .ok_or_else(|| ManifestError(format!("no numeric field {name:?}")))
                };
                let value = get(field)?;
                match divisor {
                    Some(d) => Ok(value / get(d)?),
                    None => Ok(value),
                }
            }
            Selector::Csv {
                filters,
                column,
                divisor,
            } => {
                let mut lines = output.lines().filter(|l| !l.trim().is_empty());
                let header: Vec<&str> = lines
                    .next()
                    .ok_or_else(|| ManifestError("empty CSV output".into()))?
                    .split(',')
                    .collect();
                let index = |name: &str| {
                    header
                        .iter()
                        .position(|h| *h == name)
                        .ok_or_else(|| ManifestError(format!("no CSV column {name:?}")))
                };
                let filter_idx = filters
                    .iter()
                    .map(|(k, v)| Ok((index(k)?, v.as_str())))
                    .collect::<Result<Vec<_>, ManifestError>>()?;
                let rows: Vec<Vec<&str>> = lines
                    .map(|l| l.split(',').collect::<Vec<_>>())
                    .filter(|cells| filter_idx.iter().all(|&(i, v)| cells.get(i) == Some(&v)))
                    .collect();
                let row = match rows.as_slice() {
                    [row] => row,
                    [] => return Err(ManifestError(format!("no CSV row matches {filters:?}"))),
                    _ => {
                        return Err(ManifestError(format!(
                            "{} CSV rows match {filters:?}",
                            rows.len()
                        )))
                    }
                };
                let cell = |name: &str| -> Result<f64, ManifestError> {
                    let raw = row.get(index(name)?).copied().unwrap_or("");
                    raw.parse()
                        .map_err(|_| ManifestError(format!("column {name:?} is {raw:?}")))
                };
                let value = cell(column)?;
                match divisor {
                    Some(d) => Ok(value / cell(d)?),
                    None => Ok(value),
                }
            }
        }
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>, ManifestError> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [id, invocation, selector, expected, lo, hi, note] = fields[..] else {
            return Err(ManifestError(format!(
                "line {}: expected 7 '|'-separated fields, found {}",
                lineno + 1,
                fields.len()
            )));
        };
        let number = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| ManifestError(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        rows.push(ManifestRow {
            id: id.to_string(),
            args: invocation.split_whitespace().map(String::from).collect(),
            selector: Selector::parse(selector)?,
            expected: number(expected)?,
            lo: number(lo)?,
            hi: number(hi)?,
            note: note.to_string(),
        });
    }
    let mut seen = HashMap::new();
    for row in &rows {
        if seen.insert(row.id.as_str(), ()).is_some() {
            return Err(ManifestError(format!("duplicate row id {:?}", row.id)));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowOutcome {
    pub id: String,
    pub value: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub expected: f64,
    pub note: String,
    pub passed: bool,
    pub detail: String,
}

impl RowOutcome {
    pub const CSV_HEADER: &'static str = "id,status,value,lo,hi,expected,note,detail";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.id,
            if self.passed { "pass" } else { "FAIL" },
            self.value.map(|v| format!("{v:.6}")).unwrap_or_default(),
            self.lo,
            self.hi,
            self.expected,
            self.note,
            self.detail.replace(',', ";")
        )
    }
}

/// Checks each row against outputs produced by `invoke`. Identical
/// invocations are executed once.
pub fn evaluate_rows<F>(rows: &[ManifestRow], mut invoke: F) -> Vec<RowOutcome>
where
    F: FnMut(&[String]) -> Result<String, String>,
{
    let mut cache: HashMap<Vec<String>, Result<String, String>> = HashMap::new();
    rows.iter()
        .map(|row| {
            let output = cache
                .entry(row.args.clone())
                .or_insert_with(|| invoke(&row.args));
            let (value, detail) = match output {
                Ok(text) => match row.selector.evaluate(text) {
                    Ok(v) => (Some(v), String::new()),
                    Err(e) => (None, e.0),
                },
                Err(e) => (None, e.clone()),
            };
            let passed = value.is_some_and(|v| v >= row.lo && v <= row.hi);
            RowOutcome {
                id: row.id.clone(),
                value,
                lo: row.lo,
                hi: row.hi,
                expected: row.expected,
                note: row.note.clone(),
                passed,
                detail,
            }
        })
        .collect()
}

/// Invokes the CLI binary at `cli` and returns its stdout.
pub fn run_cli(cli: &Path, args: &[String]) -> Result<String, String> {
    let output = Command::new(cli)
        .args(args)
        .output()
        .map_err(|e| format!("cannot run {}: {e}", cli.display()))?;
    if !output.status.success() {
        return Err(format!(
            "exit {}: {}",
            output.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&output.stderr).trim()
        ));
    }
    String::from_utf8(output.stdout).map_err(|e| e.to_string())
}
