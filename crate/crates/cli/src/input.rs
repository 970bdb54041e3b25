//! CSV readers for graph files, covariance matrices and raw data.
//!
//! Square files may carry a header row of labels (optionally preceded by an
//! empty corner cell) and a label at the start of each row. Lines starting
//! with `#` are ignored and cells are trimmed.

use std::collections::HashSet;
use std::path::Path;

use agfit::{AncestralGraph, Error as ModelError};
use nalgebra::DMatrix;

use crate::error::CliError;

struct Row {
    line: u64,
    cells: Vec<String>,
}

fn read_rows(path: &Path) -> Result<Vec<Row>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    // one record per line, so positions are those of the file
    let mut rows = Vec::new();
    for (k, text_line) in text.lines().enumerate() {
        let line = k as u64 + 1;
        if text_line.trim().is_empty() || text_line.trim_start().starts_with('#') {
            continue;
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text_line.as_bytes());
        let record = match reader.records().next() {
            Some(Ok(r)) => r,
            Some(Err(e)) => return Err(CliError::parse(path, line, 1, e.to_string())),
            None => continue,
        };
        rows.push(Row { line, cells: record.iter().map(str::to_owned).collect() });
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, 1, "file contains no rows"));
    }
    Ok(rows)
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn check_unique(path: &Path, line: u64, labels: &[String]) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for (k, l) in labels.iter().enumerate() {
        if !seen.insert(l.as_str()) {
            return Err(CliError::parse(path, line, k + 1, format!("duplicate label `{l}`")));
        }
    }
    Ok(())
}

/// A square matrix read from file, with the position of every entry.
pub struct SquareTable {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<String>>,
    lines: Vec<u64>,
    offsets: Vec<usize>,
}

impl SquareTable {
    /// 1-based line and column of entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> (u64, usize) {
        (self.lines[i], self.offsets[i] + j + 1)
    }
}

pub fn read_square(path: &Path) -> Result<SquareTable, CliError> {
    let rows = read_rows(path)?;
    let first = &rows[0];
    let corner = first.cells.first().is_some_and(String::is_empty);
    let header_cells = if corner { &first.cells[1..] } else { &first.cells[..] };
    // a leading label alone marks a labelled row, not a header
    let has_header = corner
        || first.cells.iter().skip(1).any(|c| !is_number(c))
        || (first.cells.len() == 1 && !is_number(&first.cells[0]) && rows.len() == 2);
    let (header, body) = if has_header {
        check_unique(path, first.line, header_cells)?;
        (Some(header_cells.to_vec()), &rows[1..])
    } else {
        (None, &rows[..])
    };
    let p = header.as_ref().map_or(body.len(), Vec::len);
    if body.len() != p {
        let line = body.last().map_or(first.line, |r| r.line);
        return Err(CliError::parse(path, line, 1, format!("expected {p} matrix rows, found {}", body.len())));
    }

    let mut row_labels = Vec::new();
    let mut cells = Vec::with_capacity(p);
    let mut lines = Vec::with_capacity(p);
    let mut offsets = Vec::with_capacity(p);
    for (i, row) in body.iter().enumerate() {
        let labelled = row.cells.first().is_some_and(|c| !is_number(c));
        let offset = usize::from(labelled);
        let values = &row.cells[offset..];
        if values.len() != p {
            return Err(CliError::parse(
                path,
                row.line,
                offset + values.len().min(p) + 1,
                format!("expected {p} entries, found {}", values.len()),
            ));
        }
        if labelled {
            let label = &row.cells[0];
            if let Some(h) = &header {
                if &h[i] != label {
                    return Err(CliError::parse(path, row.line, 1, format!("row label `{label}` does not match column label `{}`", h[i])));
                }
            }
            row_labels.push(label.clone());
        } else if !row_labels.is_empty() {
            return Err(CliError::parse(path, row.line, 1, "missing row label"));
        }
        cells.push(values.to_vec());
        lines.push(row.line);
        offsets.push(offset);
    }
    if header.is_none() && !row_labels.is_empty() && row_labels.len() != p {
        return Err(CliError::parse(path, lines[0], 1, "missing row label"));
    }
    let labels = match header {
        Some(h) => h,
        None if !row_labels.is_empty() => {
            check_unique(path, lines[0], &row_labels)?;
            row_labels
        }
        None => (0..p).map(|i| i.to_string()).collect(),
    };
    Ok(SquareTable { labels, cells, lines, offsets })
}

/// Outcome of reading a graph file: parse problems are `Err`, while a
/// well-formed adjacency matrix that fails the ancestral graph conditions is
/// reported separately so `check` can tell the two apart.
pub enum GraphInput {
    Valid(AncestralGraph),
    Invalid { labels: Vec<String>, error: ModelError },
}

pub fn read_graph(path: &Path) -> Result<GraphInput, CliError> {
    let table = read_square(path)?;
    let p = table.labels.len();
    let mut matrix = vec![vec![0u8; p]; p];
    for i in 0..p {
        for j in 0..p {
            let cell = &table.cells[i][j];
            let (line, column) = table.position(i, j);
            matrix[i][j] = match cell.parse::<u8>() {
                Ok(v @ 0..=2) => v,
                _ => return Err(CliError::parse(path, line, column, format!("expected 0, 1 or 2, found `{cell}`"))),
            };
        }
    }
    match AncestralGraph::from_adjacency(table.labels.clone(), &matrix) {
        Ok(g) => Ok(GraphInput::Valid(g)),
        Err(ModelError::InvalidCoding(i, j)) => {
            let (line, column) = table.position(i, j);
            Err(CliError::parse(
                path,
                line,
                column,
                format!(
                    "entries ({}, {}) = {} and ({}, {}) = {} do not code an edge",
                    table.labels[i], table.labels[j], matrix[i][j], table.labels[j], table.labels[i], matrix[j][i]
                ),
            ))
        }
        Err(error) => Ok(GraphInput::Invalid { labels: table.labels, error }),
    }
}

/// A labelled covariance or correlation matrix.
pub fn read_covariance(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), CliError> {
    let table = read_square(path)?;
    let p = table.labels.len();
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let cell = &table.cells[i][j];
            m[(i, j)] = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                let (line, column) = table.position(i, j);
                CliError::parse(path, line, column, format!("expected a number, found `{cell}`"))
            })?;
        }
    }
    Ok((table.labels, m))
}

/// Raw data with a header of labels and one observation per row. Returned
/// with one row per variable and one column per observation.
pub fn read_data(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), CliError> {
    let rows = read_rows(path)?;
    let labels = rows[0].cells.clone();
    if let Some(k) = labels.iter().position(|c| is_number(c)) {
        return Err(CliError::parse(path, rows[0].line, k + 1, "data files need a header row of variable labels"));
    }
    check_unique(path, rows[0].line, &labels)?;
    let p = labels.len();
    let n = rows.len() - 1;
    let mut y = DMatrix::zeros(p, n);
    for (m, row) in rows[1..].iter().enumerate() {
        if row.cells.len() != p {
            return Err(CliError::parse(
                path,
                row.line,
                row.cells.len().min(p) + 1,
                format!("expected {p} values, found {}", row.cells.len()),
            ));
        }
        for (i, cell) in row.cells.iter().enumerate() {
            y[(i, m)] = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::parse(path, row.line, i + 1, format!("expected a number, found `{cell}`"))
            })?;
        }
    }
    Ok((labels, y))
}
