//! Deterministic result serialization: CSV with locale-free 17-significant-
//! digit floats, JSON dumps, and the readers that round-trip them.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use spinaht::algebra::OperatorSum;
use spinaht::experiments::ScanResult;

/// Canonical float formatting: '.' decimal separator, 17 significant digits,
/// bit-exact round-trip through `str::parse::<f64>`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a scan as CSV with the fixed header `tau_D,tau_dw,fidelity` and
/// one row per grid point, x-major.
pub fn scan_to_csv(scan: &ScanResult<f64>) -> String {
    let mut out = String::new();
    out.push_str("tau_D,tau_dw,fidelity\n");
    for (i, &x) in scan.x.iter().enumerate() {
        for (j, &y) in scan.y.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(scan.values[i][j]));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub tau_d: f64,
    pub tau_dw: f64,
    pub fidelity: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse a scan CSV produced by [`scan_to_csv`].
pub fn read_scan_csv(text: &str) -> Result<Vec<ScanRow>, ReadError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "tau_D,tau_dw,fidelity")) => {}
        Some((_, header)) => {
            return Err(ReadError::Malformed {
                line: 1,
                message: format!("unexpected header {header:?}"),
            })
        }
        None => return Err(ReadError::Malformed { line: 1, message: "empty file".into() }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64, ReadError> {
            fields
                .next()
                .ok_or_else(|| ReadError::Malformed {
                    line: idx + 1,
                    message: format!("missing field {name}"),
                })?
                .parse::<f64>()
                .map_err(|e| ReadError::Malformed {
                    line: idx + 1,
                    message: format!("{name}: {e}"),
                })
        };
        rows.push(ScanRow {
            tau_d: next("tau_D")?,
            tau_dw: next("tau_dw")?,
            fidelity: next("fidelity")?,
        });
    }
    Ok(rows)
}

/// JSON-friendly dump of an operator sum: one entry per word.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorDump {
    pub n: usize,
    pub terms: Vec<TermDump>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermDump {
    pub word: String,
    pub re: f64,
    pub im: f64,
}

impl OperatorDump {
    pub fn from_op(op: &OperatorSum<f64>) -> OperatorDump {
        OperatorDump {
            n: op.n(),
            terms: op
                .terms()
                .map(|(w, c)| TermDump { word: w.to_string(), re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn to_op(&self) -> Result<OperatorSum<f64>, spinaht::algebra::AlgebraError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            let w: spinaht::algebra::SpinWord = t.word.parse()?;
            terms.push((w, spinaht::C::<f64>::new(t.re, t.im)));
        }
        OperatorSum::from_terms(self.n, terms)
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
}
