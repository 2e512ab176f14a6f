//! Two-column delimited datasets with missing values.

use crate::error::CliError;
use pairperm::PartiallyPairedSample;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub delimiter: u8,
    pub missing: Vec<String>,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            missing: vec![String::new(), "NA".into(), "na".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub sample: PartiallyPairedSample,
    pub header: Option<[String; 2]>,
    pub rows: usize,
}

enum Cell {
    Missing,
    Value(f64),
    Text,
}

fn classify(field: &str, opts: &DatasetOptions) -> Cell {
    if opts.missing.iter().any(|m| m == field) {
        return Cell::Missing;
    }
    match field.parse::<f64>() {
        Ok(v) => Cell::Value(v),
        Err(_) => Cell::Text,
    }
}

pub fn read_dataset(path: &Path, opts: &DatasetOptions) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, opts)
}

pub fn parse_dataset(text: &str, opts: &DatasetOptions) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        if rec.len() != 2 {
            return Err(CliError::Parse(format!(
                "line {line}: expected 2 columns, found {}",
                rec.len()
            )));
        }
        let cells = [classify(&rec[0], opts), classify(&rec[1], opts)];
        if k == 0 && cells.iter().any(|c| matches!(c, Cell::Text)) {
            header = Some([rec[0].to_string(), rec[1].to_string()]);
            continue;
        }
        let mut pair = [None, None];
        for (j, cell) in cells.iter().enumerate() {
            pair[j] = match *cell {
                Cell::Missing => None,
                Cell::Value(v) if v.is_finite() => Some(v),
                Cell::Value(v) => {
                    return Err(CliError::Parse(format!(
                        "line {line}, column {}: non-finite value {v}",
                        j + 1
                    )))
                }
                Cell::Text => {
                    return Err(CliError::Parse(format!(
                        "line {line}, column {}: {:?} is neither a number nor a missing-value token",
                        j + 1,
                        &rec[j]
                    )))
                }
            };
        }
        if pair == [None, None] {
            return Err(CliError::Parse(format!(
                "line {line}: both values missing (remove the row or supply a value)"
            )));
        }
        records.push((pair[0], pair[1]));
    }
    let rows = records.len();
    let sample = PartiallyPairedSample::from_records(records)?;
    Ok(Dataset { sample, header, rows })
}
