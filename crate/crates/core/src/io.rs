//! Prediction files and score CSVs.
//!
//! Prediction files hold one JSON object per line:
//!
//! ```text
//! # uncq-format 1
//! {"id":"a","samples":[[0.5,0.5],[0.9,0.1]],"single":[0.6,0.4],"label":0,"flag":false}
//! ```
//!
//! `id` and `samples` are required; `single`, `reference`, `label` and
//! `flag` are optional. Blank lines and `#` comment lines are skipped.
//!
//! Score files are CSV with an `id,score` header. Scores are printed with 17
//! significant digits, which round-trips every finite double, and `+inf` is
//! printed as `inf`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::types::{EnsembleItem, ProbVec, ScoreRecord};

/// Version written into (and accepted from) the header comment.
pub const FORMAT_VERSION: u32 = 1;
pub const FORMAT_HEADER: &str = "# uncq-format 1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Validation {
        line: usize,
        #[source]
        source: Error,
    },
    #[error("line {line}: K={found} differs from K={expected} earlier in the file")]
    KInconsistent {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unsupported format header {0:?}")]
    UnsupportedFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    samples: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    single: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flag: Option<bool>,
}

impl Record {
    fn into_item(self) -> Result<EnsembleItem, Error> {
        let samples = self
            .samples
            .into_iter()
            .map(ProbVec::new)
            .collect::<Result<Vec<_>, _>>()?;
        let item = EnsembleItem {
            id: self.id,
            samples,
            single: self.single.map(ProbVec::new).transpose()?,
            reference: self.reference.map(ProbVec::new).transpose()?,
            label: self.label,
            flag: self.flag,
        };
        item.validate()
    }

    fn from_item(item: &EnsembleItem) -> Record {
        let raw = |p: &ProbVec| p.as_slice().to_vec();
        Record {
            id: item.id.clone(),
            samples: item.samples.iter().map(raw).collect(),
            single: item.single.as_ref().map(raw),
            reference: item.reference.as_ref().map(raw),
            label: item.label,
            flag: item.flag,
        }
    }
}

fn check_header_comment(line: &str) -> Result<(), IoError> {
    if let Some(version) = line.trim().strip_prefix("# uncq-format") {
        if version.trim() != FORMAT_VERSION.to_string() {
            return Err(IoError::UnsupportedFormat(line.trim().to_owned()));
        }
    }
    Ok(())
}

/// Streaming reader over a prediction file. Yields one validated item per
/// record line; errors carry 1-based line numbers.
pub struct ItemReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    k: Option<usize>,
}

impl<R: BufRead> ItemReader<R> {
    pub fn new(source: R) -> Self {
        ItemReader {
            lines: source.lines(),
            line_no: 0,
            k: None,
        }
    }
}

impl<R: BufRead> Iterator for ItemReader<R> {
    type Item = Result<EnsembleItem, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let line_no = self.line_no;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if text.starts_with('#') {
                if let Err(e) = check_header_comment(text) {
                    return Some(Err(e));
                }
                continue;
            }
            let record: Record = match serde_json::from_str(text) {
                Ok(r) => r,
                Err(e) => {
                    return Some(Err(IoError::Parse {
                        line: line_no,
                        message: e.to_string(),
                    }))
                }
            };
            let item = match record.into_item() {
                Ok(it) => it,
                Err(source) => {
                    return Some(Err(IoError::Validation {
                        line: line_no,
                        source,
                    }))
                }
            };
            match self.k {
                Some(expected) if expected != item.k() => {
                    return Some(Err(IoError::KInconsistent {
                        line: line_no,
                        expected,
                        found: item.k(),
                    }))
                }
                _ => self.k = Some(item.k()),
            }
            return Some(Ok(item));
        }
    }
}

/// Reads every item of a prediction file, in order.
pub fn read_items<R: BufRead>(source: R) -> Result<Vec<EnsembleItem>, IoError> {
    ItemReader::new(source).collect()
}

/// Writes a prediction file, header comment first.
pub fn write_items<W: Write>(items: &[EnsembleItem], mut sink: W) -> Result<(), IoError> {
    writeln!(sink, "{FORMAT_HEADER}")?;
    for item in items {
        let line =
            serde_json::to_string(&Record::from_item(item)).map_err(std::io::Error::other)?;
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}

/// Renders a score with 17 significant digits; infinities become `inf` /
/// `-inf`. Values of magnitude in `[1e-5, 1e17)` (and zero) are written
/// positionally, everything else in scientific notation.
pub fn format_score(value: f64) -> String {
    if value.is_infinite() {
        return if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.16e}", value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        if frac.is_empty() {
            int.to_owned()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{body}")
}

/// Writes `# uncq-format 1`, the `id,score` header and one row per record.
pub fn write_scores<W: Write>(records: &[ScoreRecord], mut sink: W) -> Result<(), IoError> {
    writeln!(sink, "{FORMAT_HEADER}")?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "score"])?;
    for r in records {
        w.write_record([r.id.as_str(), &format_score(r.value)])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_reader<R: std::io::Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, IoError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IoError::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Reads a score CSV written by [`write_scores`].
pub fn read_scores<R: std::io::Read>(source: R) -> Result<Vec<ScoreRecord>, IoError> {
    let mut rdr = csv_reader(source);
    let headers = rdr.headers()?.clone();
    let (id_col, score_col) = (column(&headers, "id")?, column(&headers, "score")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let raw = rec.get(score_col).unwrap_or_default();
        let value: f64 = raw.parse().map_err(|_| IoError::Parse {
            line,
            message: format!("bad score {raw:?}"),
        })?;
        let id = rec.get(id_col).unwrap_or_default();
        out.push(
            ScoreRecord::new(id, value).map_err(|source| IoError::Validation { line, source })?,
        );
    }
    Ok(out)
}

/// Reads an `id,flag` CSV; flags are `true`/`false` or `1`/`0`.
pub fn read_flags<R: std::io::Read>(source: R) -> Result<Vec<(String, bool)>, IoError> {
    let mut rdr = csv_reader(source);
    let headers = rdr.headers()?.clone();
    let (id_col, flag_col) = (column(&headers, "id")?, column(&headers, "flag")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let raw = rec.get(flag_col).unwrap_or_default();
        let flag = match raw.to_ascii_lowercase().as_str() {
            "true" | "1" => true,
            "false" | "0" => false,
            _ => {
                return Err(IoError::Parse {
                    line: record_line(&rec),
                    message: format!("bad flag {raw:?}"),
                })
            }
        };
        out.push((rec.get(id_col).unwrap_or_default().to_owned(), flag));
    }
    Ok(out)
}
