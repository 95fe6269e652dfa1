//! Dataset loading for classification and entailment-style tasks.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TaskKind {
    Classification,
    Entailment,
}

/// One input example. `premise` is present exactly for entailment tasks;
/// `text` is the (attackable) text — the hypothesis for entailment.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub text: String,
    pub premise: Option<String>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub task: TaskKind,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at record {record}: {message}")]
    ParseError { record: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("label `{value}` at record {record} is not a non-negative integer")]
    NonIntegerLabel { record: usize, value: String },
    #[error("labels are not dense from 0: {missing} never occurs but {max} does")]
    SparseLabels { missing: usize, max: usize },
}

/// Loads a dataset and validates that labels are dense integers from 0.
pub fn load_dataset(
    path: &Path,
    format: Format,
    task: TaskKind,
) -> Result<Dataset, DatasetError> {
    let data = fs::read_to_string(path)?;
    let examples = match format {
        Format::Csv => parse_delimited(&data, b',', task)?,
        Format::Tsv => parse_delimited(&data, b'\t', task)?,
        Format::Jsonl => parse_jsonl(&data, task)?,
    };
    validate_labels(&examples)?;
    Ok(Dataset { examples, task })
}

fn parse_label(raw: &str, record: usize) -> Result<usize, DatasetError> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| DatasetError::NonIntegerLabel {
            record,
            value: raw.to_owned(),
        })
}

fn parse_delimited(
    data: &str,
    delimiter: u8,
    task: TaskKind,
) -> Result<Vec<Example>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(data.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::ParseError {
            record: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &'static str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(DatasetError::MissingColumn(name))
    };
    let label_col = col("label")?;
    let (text_col, premise_col) = match task {
        TaskKind::Classification => (col("text")?, None),
        TaskKind::Entailment => (col("hypothesis")?, Some(col("premise")?)),
    };

    let mut examples = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let record = i + 1;
        let row = row.map_err(|e| DatasetError::ParseError {
            record,
            message: e.to_string(),
        })?;
        let field = |idx: usize| -> Result<&str, DatasetError> {
            row.get(idx).ok_or(DatasetError::ParseError {
                record,
                message: format!("row has {} fields", row.len()),
            })
        };
        examples.push(Example {
            text: field(text_col)?.to_owned(),
            premise: premise_col.map(field).transpose()?.map(str::to_owned),
            label: parse_label(field(label_col)?, record)?,
        });
    }
    Ok(examples)
}

fn parse_jsonl(data: &str, task: TaskKind) -> Result<Vec<Example>, DatasetError> {
    let mut examples = Vec::new();
    for (i, line) in data.lines().enumerate() {
        let record = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| DatasetError::ParseError {
                record,
                message: e.to_string(),
            })?;
        let str_field = |name: &'static str| -> Result<String, DatasetError> {
            value
                .get(name)
                .and_then(|v| v.as_str())
                .map(str::to_owned)
                .ok_or(DatasetError::MissingColumn(name))
        };
        let label = match value.get("label") {
            Some(v) => match v.as_u64() {
                Some(n) => n as usize,
                None => {
                    return Err(DatasetError::NonIntegerLabel {
                        record,
                        value: v.to_string(),
                    })
                }
            },
            None => return Err(DatasetError::MissingColumn("label")),
        };
        let (text, premise) = match task {
            TaskKind::Classification => (str_field("text")?, None),
            TaskKind::Entailment => (str_field("hypothesis")?, Some(str_field("premise")?)),
        };
        examples.push(Example {
            text,
            premise,
            label,
        });
    }
    Ok(examples)
}

/// Labels must cover 0..=max with no gaps.
fn validate_labels(examples: &[Example]) -> Result<(), DatasetError> {
    let seen: BTreeSet<usize> = examples.iter().map(|e| e.label).collect();
    let max = match seen.iter().next_back() {
        Some(&m) => m,
        None => return Ok(()),
    };
    for label in 0..=max {
        if !seen.contains(&label) {
            return Err(DatasetError::SparseLabels {
                missing: label,
                max,
            });
        }
    }
    Ok(())
}

/// Number of distinct labels (max + 1 after validation).
pub fn label_count(dataset: &Dataset) -> usize {
    dataset
        .examples
        .iter()
        .map(|e| e.label + 1)
        .max()
        .unwrap_or(0)
}
