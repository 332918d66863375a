//! LSS dataset records, line-delimited JSON IO and validation.

mod adjudicate;
mod clean;
mod histogram;

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{is_subsequence, tokenize, NormalizationPolicy};

pub use adjudicate::{adjudicate, Adjudication, Annotation, Outcome, RawAnnotationRecord};
pub use clean::{clean, CleanReport};
pub(crate) use histogram::within_length;
pub use histogram::{
    balance, filter_by_length, ratio_histogram, BalanceReport, BalanceTarget, LengthFilterReport,
    RatioHistogram,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error("record {id:?} has {got} annotations, expected 3")]
    Arity { id: String, got: usize },
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// One reference/claim pair with its supported subsequence annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub id: String,
    pub reference: String,
    pub claim: String,
    pub lss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lss_star: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
    pub split: Split,
}

/// A record skipped during a lenient load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaViolation {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Schema violations tolerated (and skipped) before loading fails.
    pub max_schema_errors: usize,
}

const REQUIRED: [&str; 5] = ["id", "reference", "claim", "lss", "split"];

fn parse_record(line: usize, value: Value) -> Result<AnnotatedExample, DatasetError> {
    let Value::Object(map) = &value else {
        return Err(DatasetError::Parse {
            line,
            message: "expected a JSON object".into(),
        });
    };
    if let Some(missing) = REQUIRED.iter().find(|k| !map.contains_key(**k)) {
        return Err(DatasetError::Schema {
            line,
            message: format!("missing required field `{missing}`"),
        });
    }
    let example: AnnotatedExample =
        serde_json::from_value(value).map_err(|e| DatasetError::Schema {
            line,
            message: e.to_string(),
        })?;
    if let Some(r) = example.rating {
        if !(1..=5).contains(&r) {
            return Err(DatasetError::Schema {
                line,
                message: format!("rating {r} outside 1..=5"),
            });
        }
    }
    Ok(example)
}

/// Read examples from line-delimited JSON, failing on the first problem.
pub fn load(path: &Path) -> Result<Vec<AnnotatedExample>, DatasetError> {
    load_with(path, LoadOptions::default()).map(|(examples, _)| examples)
}

pub fn load_with(
    path: &Path,
    options: LoadOptions,
) -> Result<(Vec<AnnotatedExample>, Vec<SchemaViolation>), DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_examples(BufReader::new(file), options).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::io(path, source),
        other => other,
    })
}

pub fn read_examples<R: BufRead>(
    reader: R,
    options: LoadOptions,
) -> Result<(Vec<AnnotatedExample>, Vec<SchemaViolation>), DatasetError> {
    let mut examples = Vec::new();
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| DatasetError::io(Path::new("<input>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match parse_record(line_no, value) {
            Ok(example) => {
                if !seen.insert(example.id.clone()) {
                    return Err(DatasetError::DuplicateId {
                        id: example.id,
                        line: line_no,
                    });
                }
                examples.push(example);
            }
            Err(DatasetError::Schema { line, message }) => {
                if violations.len() >= options.max_schema_errors {
                    return Err(DatasetError::Schema { line, message });
                }
                violations.push(SchemaViolation { line, message });
            }
            Err(other) => return Err(other),
        }
    }
    Ok((examples, violations))
}

/// Write examples in canonical form: one compact object per line, fixed key order.
pub fn save(path: &Path, examples: &[AnnotatedExample]) -> Result<(), DatasetError> {
    write_jsonl(path, examples)
}

/// Serialize any records as line-delimited JSON.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_jsonl_to(&mut out, records).map_err(|e| DatasetError::io(path, e))?;
    out.flush().map_err(|e| DatasetError::io(path, e))
}

pub fn write_jsonl_to<W: Write, T: Serialize>(out: &mut W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read any line-delimited JSON records; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// An example whose LSS is not a subsequence of its claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub lss: String,
    pub claim: String,
}

/// Check the LSS-within-claim invariant. LSS* is exempt.
pub fn validate(examples: &[AnnotatedExample], policy: NormalizationPolicy) -> Vec<Violation> {
    examples
        .iter()
        .filter(|ex| !is_subsequence(&tokenize(&ex.lss, policy), &tokenize(&ex.claim, policy)))
        .map(|ex| Violation {
            id: ex.id.clone(),
            lss: ex.lss.clone(),
            claim: ex.claim.clone(),
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn example(id: &str, reference: &str, claim: &str, lss: &str) -> AnnotatedExample {
    AnnotatedExample {
        id: id.into(),
        reference: reference.into(),
        claim: claim.into(),
        lss: lss.into(),
        lss_star: None,
        rating: None,
        split: Split::Test,
    }
}
