//! CSV ingestion and export.
//!
//! Input is UTF-8, comma separated, with a header row. The timestamp column
//! holds either RFC 3339 instants or integer epoch seconds; the format is
//! detected per cell. Error rows are 1-based data rows (the header is row 0).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Name of the timestamp column. `None` picks the first column.
    pub timestamp_column: Option<String>,
    /// Columns to load. `None` loads every non-timestamp column.
    pub columns: Option<Vec<String>>,
    /// Replace missing or non-finite cells with the previous row's value
    /// instead of rejecting the file.
    pub forward_fill: bool,
}

pub fn load_csv(path: impl AsRef<Path>, config: &IngestConfig) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, config)
}

pub fn read_csv<R: Read>(reader: R, config: &IngestConfig) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyFile);
    }

    let ts_col = match &config.timestamp_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        None => 0,
    };
    let selected: Vec<(usize, String)> = match &config.columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h == c)
                    .filter(|&i| i != ts_col)
                    .map(|i| (i, c.clone()))
                    .ok_or_else(|| Error::MissingColumn(c.clone()))
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ts_col)
            .map(|(i, h)| (i, h.clone()))
            .collect(),
    };
    if selected.is_empty() {
        return Err(Error::MissingColumn("<numeric column>".into()));
    }

    let mut rows: Vec<(i64, usize, Vec<f64>)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let ts_raw = record.get(ts_col).unwrap_or("");
        let ts = parse_timestamp(ts_raw).ok_or_else(|| Error::UnparsableValue {
            row,
            col: headers[ts_col].clone(),
            value: ts_raw.to_string(),
        })?;
        let mut vals = Vec::with_capacity(selected.len());
        for (ci, name) in &selected {
            let raw = record.get(*ci).unwrap_or("");
            let v = if raw.is_empty() {
                f64::NAN
            } else {
                raw.parse::<f64>().map_err(|_| Error::UnparsableValue {
                    row,
                    col: name.clone(),
                    value: raw.to_string(),
                })?
            };
            vals.push(v);
        }
        rows.push((ts, row, vals));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }

    rows.sort_by_key(|(ts, row, _)| (*ts, *row));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateTimestamp {
            row: w[1].1,
            timestamp: w[1].0.to_string(),
        });
    }

    // Missing-value pass runs in time order so forward fill follows the series.
    let cols = selected.len();
    let mut values = Vec::with_capacity(rows.len() * cols);
    for (r, (_, row, vals)) in rows.iter().enumerate() {
        for (c, &v) in vals.iter().enumerate() {
            if v.is_finite() {
                values.push(v);
            } else if config.forward_fill && r > 0 {
                values.push(values[(r - 1) * cols + c]);
            } else {
                return Err(Error::MissingValue {
                    row: *row,
                    col: selected[c].1.clone(),
                });
            }
        }
    }

    let timestamps = rows.iter().map(|(ts, _, _)| *ts).collect();
    let names = selected.into_iter().map(|(_, n)| n).collect();
    FeatureMatrix::new(timestamps, names, values)
}

fn parse_timestamp(raw: &str) -> Option<i64> {
    if let Ok(secs) = raw.parse::<i64>() {
        return Some(secs);
    }
    DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|dt| dt.timestamp())
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| secs.to_string())
}

/// Writes the matrix with a `timestamp` column in RFC 3339 (UTC).
pub fn write_csv<W: Write>(m: &FeatureMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend(m.feature_names().iter().cloned());
    w.write_record(&header)
        .map_err(|e| Error::Csv(e.to_string()))?;
    for r in 0..m.row_count() {
        let mut rec = vec![format_timestamp(m.timestamps()[r])];
        rec.extend((0..m.feature_count()).map(|c| m.get(r, c).to_string()));
        w.write_record(&rec)
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
