//! JSONL stream ingestion and output.
//!
//! One JSON object per line: `{"id": str, "text": str, "labels": [str]?,
//! "reveal": bool?, "topic": int?}`. Absent `labels` means unlabeled,
//! absent `reveal` means false; `topic` is the ground-truth field the
//! synthetic generator emits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wire-format row for ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    /// Semi-supervised flag: whether the labels may be shown to a model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reveal: bool,
    /// Ground-truth topic, present on synthetic streams.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<u32>,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("i/o error reading stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: record id is empty")]
    EmptyId { line: usize },
}

/// What to do with malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParsePolicy {
    /// Stop at the first malformed line.
    #[default]
    Abort,
    /// Report the error on stderr and continue.
    SkipWithWarning,
}

/// Line-by-line JSONL reader yielding records in file order.
pub struct JsonlReader {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    policy: ParsePolicy,
}

impl JsonlReader {
    pub fn with_policy(mut self, policy: ParsePolicy) -> Self {
        self.policy = policy;
        self
    }
}

impl Iterator for JsonlReader {
    type Item = Result<RawRecord, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(StreamError::Io(e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Result<RawRecord, _> = serde_json::from_str(&line);
            let err = match parsed {
                Ok(rec) if rec.id.is_empty() => StreamError::EmptyId { line: self.line_no },
                Ok(rec) => return Some(Ok(rec)),
                Err(e) => StreamError::Parse {
                    line: self.line_no,
                    message: e.to_string(),
                },
            };
            match self.policy {
                ParsePolicy::Abort => return Some(Err(err)),
                ParsePolicy::SkipWithWarning => {
                    eprintln!("warning: skipping record: {err}");
                    continue;
                }
            }
        }
    }
}

/// Opens a JSONL stream file.
pub fn read_stream(path: &Path) -> Result<JsonlReader, StreamError> {
    let file = File::open(path)?;
    Ok(JsonlReader {
        lines: BufReader::new(file).lines(),
        line_no: 0,
        policy: ParsePolicy::Abort,
    })
}

/// Writes records as JSONL, one object per line, in input order.
pub fn write_stream<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a RawRecord>,
) -> Result<(), StreamError> {
    let mut out = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut out, rec)
            .map_err(|e| StreamError::Parse { line: 0, message: e.to_string() })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
