//! Reading exported purchase records.
//!
//! Two input formats are accepted, both UTF-8:
//!
//! * JSONL: one object per line with optional keys `d1`, `d2`, `d3` (strings),
//!   `class` (string) and `is_service` (boolean). Blank lines are skipped.
//! * CSV: comma separated, double-quote quoting, header row required with the
//!   columns `d1,d2,d3,class` and optionally `is_service`.
//!
//! A malformed line produces a [`RecordError`] carrying its line number and
//! reading continues; an unreadable file is an [`IngestError`].

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ClassCode;

/// One purchase line as exported: up to three description fields and an
/// optional class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub description_fields: Vec<String>,
    pub class_code: Option<ClassCode>,
    pub is_service: bool,
}

/// A record that survived filtering: non-empty text and a class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub text: String,
    pub class_code: ClassCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// Guesses the format from the file extension (`.csv` or `.jsonl`/`.json`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(RecordFormat::Csv),
            "jsonl" | "ndjson" | "json" => Some(RecordFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Header { path: PathBuf, message: String },
    #[error("cannot infer record format of {0}; expected .csv or .jsonl")]
    UnknownFormat(PathBuf),
}

/// A record-level failure. Reading continues past it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestStats {
    pub read: usize,
    pub labeled: usize,
    pub discarded: usize,
    pub discarded_empty: usize,
    pub discarded_unlabeled: usize,
    pub discarded_service: usize,
    pub malformed: usize,
}

pub fn read_records(path: &Path, format: RecordFormat) -> Result<Vec<Result<RawRecord, RecordError>>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        RecordFormat::Jsonl => read_jsonl(BufReader::new(file), path),
        RecordFormat::Csv => read_csv(file, path),
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    d1: Option<String>,
    d2: Option<String>,
    d3: Option<String>,
    class: Option<String>,
    is_service: Option<bool>,
}

pub fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Result<RawRecord, RecordError>>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx as u64 + 1;
        let record = serde_json::from_str::<JsonRecord>(&line)
            .map_err(|e| RecordError {
                line: line_no,
                message: format!("invalid JSON record: {e}"),
            })
            .and_then(|r| {
                build_record(
                    [r.d1, r.d2, r.d3],
                    r.class.as_deref(),
                    r.is_service.unwrap_or(false),
                    line_no,
                )
            });
        out.push(record);
    }
    Ok(out)
}

pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<Vec<Result<RawRecord, RecordError>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header_err = |message: String| IngestError::Header {
        path: path.to_path_buf(),
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| header_err(format!("cannot read CSV header: {e}")))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut required = [0usize; 4];
    for (slot, name) in required.iter_mut().zip(["d1", "d2", "d3", "class"]) {
        *slot = column(name).ok_or_else(|| header_err(format!("missing CSV column {name:?}")))?;
    }
    let service_col = column("is_service");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(IngestError::Io {
                        path: path.to_path_buf(),
                        source: std::io::Error::other(e.to_string()),
                    });
                }
                out.push(Err(RecordError {
                    line,
                    message: format!("malformed CSV row: {e}"),
                }));
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).map(str::to_string);
        let is_service = match service_col.and_then(|c| row.get(c)).map(str::trim) {
            None | Some("") => Ok(false),
            Some(v) if v.eq_ignore_ascii_case("true") || v == "1" => Ok(true),
            Some(v) if v.eq_ignore_ascii_case("false") || v == "0" => Ok(false),
            Some(v) => Err(RecordError {
                line,
                message: format!("is_service must be true/false/1/0, got {v:?}"),
            }),
        };
        let record = is_service.and_then(|is_service| {
            build_record(
                [field(required[0]), field(required[1]), field(required[2])],
                row.get(required[3]),
                is_service,
                line,
            )
        });
        out.push(record);
    }
    Ok(out)
}

fn build_record(
    fields: [Option<String>; 3],
    class: Option<&str>,
    is_service: bool,
    line: u64,
) -> Result<RawRecord, RecordError> {
    let class_code = match class.map(str::trim) {
        None | Some("") => None,
        Some(code) => Some(code.parse::<ClassCode>().map_err(|e| RecordError {
            line,
            message: e.to_string(),
        })?),
    };
    let description_fields = fields.into_iter().flatten().map(|f| f.trim().to_string()).collect();
    Ok(RawRecord {
        description_fields,
        class_code,
        is_service,
    })
}

/// Applies the filtering rule: services, unlabeled records and records without
/// any description text are discarded. Surviving fields are joined with a
/// single space, in order, skipping empty ones.
pub fn to_labeled(record: &RawRecord) -> Option<LabeledDocument> {
    if record.is_service {
        return None;
    }
    let class_code = record.class_code?;
    let text = record
        .description_fields
        .iter()
        .map(|f| f.trim())
        .filter(|f| !f.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    if text.is_empty() {
        return None;
    }
    Some(LabeledDocument { text, class_code })
}

/// Filters a batch of read results, tallying every outcome.
pub fn collect_labeled(
    results: impl IntoIterator<Item = Result<RawRecord, RecordError>>,
) -> (Vec<LabeledDocument>, Vec<RecordError>, IngestStats) {
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    let mut stats = IngestStats::default();
    for result in results {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                stats.malformed += 1;
                errors.push(e);
                continue;
            }
        };
        stats.read += 1;
        match to_labeled(&record) {
            Some(doc) => {
                stats.labeled += 1;
                docs.push(doc);
            }
            None => {
                stats.discarded += 1;
                if record.is_service {
                    stats.discarded_service += 1;
                } else if record.class_code.is_none() {
                    stats.discarded_unlabeled += 1;
                } else {
                    stats.discarded_empty += 1;
                }
            }
        }
    }
    (docs, errors, stats)
}
