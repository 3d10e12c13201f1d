//! CSV matrix and label ingestion and emission.
//!
//! View matrices are stored one row per variable, one column per sample,
//! with an optional leading column of variable names. Values are written
//! with Rust's shortest round-trippable float formatting, so a write/read
//! cycle is lossless.

use std::path::Path;

use nalgebra::DMatrix;
use nsgcca::{MultiViewDataset, ViewSample};

use crate::errors::{CliError, CliResult};

/// Reads one view matrix; returns the values and the variable names (either
/// from the file's first column or generated `v1..vp`).
pub fn read_matrix(path: &Path) -> CliResult<(DMatrix<f64>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut named = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue;
        }
        let has_name = fields[0].parse::<f64>().is_err();
        match named {
            None => named = Some(has_name),
            Some(expected) if expected != has_name => {
                return Err(CliError::Input(format!(
                    "{}: row {} mixes named and unnamed rows",
                    path.display(),
                    i + 1
                )));
            }
            _ => {}
        }
        let (name, values) = if has_name {
            (fields[0].to_string(), &fields[1..])
        } else {
            (format!("v{}", i + 1), &fields[..])
        };
        let parsed: Vec<f64> = values
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "{}: row {} has non-numeric value {f:?}",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect::<CliResult<_>>()?;
        if let Some(first) = rows.first() {
            if parsed.len() != first.len() {
                return Err(CliError::Input(format!(
                    "{}: row {} has {} values, expected {}",
                    path.display(),
                    i + 1,
                    parsed.len(),
                    first.len()
                )));
            }
        }
        names.push(name);
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: empty matrix", path.display())));
    }
    let n = rows[0].len();
    let matrix = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    Ok((matrix, names))
}

/// Loads a multi-view dataset from one CSV file per view.
pub fn read_views(paths: &[std::path::PathBuf]) -> CliResult<MultiViewDataset> {
    if paths.len() < 2 {
        return Err(CliError::Input("need at least two view files".into()));
    }
    let mut views = Vec::with_capacity(paths.len());
    let mut n: Option<usize> = None;
    for path in paths {
        let (matrix, _) = read_matrix(path)?;
        match n {
            None => n = Some(matrix.ncols()),
            Some(expected) if matrix.ncols() != expected => {
                return Err(CliError::Input(format!(
                    "{}: {} samples, expected {expected}",
                    path.display(),
                    matrix.ncols()
                )));
            }
            _ => {}
        }
        views.push(ViewSample::new(matrix)?);
    }
    Ok(MultiViewDataset::new(views)?)
}

/// Writes a matrix with a leading column of variable names.
pub fn write_matrix(path: &Path, matrix: &DMatrix<f64>, names: &[String]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for (i, name) in names.iter().enumerate() {
        let mut record = vec![name.clone()];
        record.extend(matrix.row(i).iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reads one class label per line; labels are arbitrary strings mapped to
/// dense indices in order of first appearance.
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut seen: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    for line in text.lines() {
        let label = line.trim();
        if label.is_empty() {
            continue;
        }
        let idx = match seen.iter().position(|s| s == label) {
            Some(idx) => idx,
            None => {
                seen.push(label.to_string());
                seen.len() - 1
            }
        };
        labels.push(idx);
    }
    if labels.is_empty() {
        return Err(CliError::Input(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

/// Serializes `value` as pretty JSON at `path`.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}
