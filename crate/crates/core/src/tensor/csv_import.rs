//! CSV import: one file per mode-1 slice, CSV row i is tensor row i.

use std::fs;
use std::path::Path;

use super::{Result, Tensor, TensorError};

/// Parses one headerless numeric CSV slice into `(rows, cols, row-major values)`.
pub fn parse_csv_slice(text: &str, source_name: &str) -> Result<(usize, usize, Vec<f64>)> {
    let err = |reason: String| TensorError::Csv {
        source_name: source_name.to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut cols = None;
    let mut rows = 0;
    let mut values = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(err(format!(
                    "row {} has {} fields, expected {c}",
                    r + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| err(format!("row {}, column {}: {field:?} is not a number", r + 1, c + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    match cols {
        Some(c) if rows > 0 && c > 0 => Ok((rows, c, values)),
        _ => Err(err("no data rows".into())),
    }
}

/// Stacks CSV slices along mode 1 into a `n_files x rows x cols` tensor.
pub fn read_csv_slices<P: AsRef<Path>>(paths: &[P]) -> Result<Tensor> {
    if paths.is_empty() {
        return Err(TensorError::Csv {
            source_name: String::new(),
            reason: "no slice files given".into(),
        });
    }
    let mut slices = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let text = fs::read_to_string(p)?;
        slices.push(parse_csv_slice(&text, &p.display().to_string())?);
    }
    let (rows, cols) = (slices[0].0, slices[0].1);
    for (k, s) in slices.iter().enumerate() {
        if (s.0, s.1) != (rows, cols) {
            return Err(TensorError::ShapeMismatch {
                expected: vec![rows, cols],
                found: vec![s.0, s.1, k + 1],
            });
        }
    }
    let n = slices.len();
    let mut t = Tensor::zeros(&[n, rows, cols]);
    for (k, (_, _, vals)) in slices.iter().enumerate() {
        for r in 0..rows {
            for c in 0..cols {
                t.set(&[k + 1, r + 1, c + 1], vals[r * cols + c]);
            }
        }
    }
    Ok(t)
}
