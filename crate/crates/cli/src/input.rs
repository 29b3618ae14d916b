// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV ingestion. Rows are time points, columns are coordinates.

use std::fs::File;
use std::path::Path;

use lqcp_core::simgen::{vech, vech_len};
use lqcp_core::{validate_matrix, DataMatrix};

use crate::CliError;

/// A loaded matrix plus its column names, if the file had a header.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded {
    pub matrix: DataMatrix,
    pub names: Option<Vec<String>>,
}

pub fn load_csv_matrix(path: impl AsRef<Path>, has_header: bool) -> Result<Loaded, CliError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let names = if has_header {
        let header = reader.headers().map_err(|e| CliError::Io(e.to_string()))?;
        Some(header.iter().map(str::to_owned).collect::<Vec<String>>())
    } else {
        None
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| CliError::Parse {
                    row: i + 1,
                    col: j + 1,
                    field: field.to_owned(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    let matrix = validate_matrix(&rows)?;
    if let Some(names) = &names {
        if names.len() != matrix.p() {
            return Err(CliError::InvalidArgument(format!(
                "header has {} names but rows have {} columns",
                names.len(),
                matrix.p()
            )));
        }
    }
    Ok(Loaded { matrix, names })
}

/// Loads a network series stored one flattened `m x m` adjacency matrix per
/// row (row-major) and returns the vech of every network. Names are `i-j`
/// node pairs, 1-based.
pub fn load_adjacency_series(path: impl AsRef<Path>, has_header: bool) -> Result<(Loaded, usize), CliError> {
    let raw = load_csv_matrix(path, has_header)?.matrix;
    let m = (raw.p() as f64).sqrt().round() as usize;
    if m < 2 || m * m != raw.p() {
        return Err(CliError::InvalidArgument(format!(
            "rows have {} entries, not a square adjacency matrix with at least 2 nodes",
            raw.p()
        )));
    }
    let mut values = Vec::with_capacity(raw.n() * vech_len(m));
    for row in raw.rows() {
        let adjacency: Vec<&[f64]> = row.chunks_exact(m).collect();
        values.extend(vech(&adjacency)?);
    }
    let matrix = DataMatrix::new(raw.n(), vech_len(m), values)?;
    let names = (1..=m)
        .flat_map(|j| (j + 1..=m).map(move |i| format!("{i}-{j}")))
        .collect();
    Ok((
        Loaded {
            matrix,
            names: Some(names),
        },
        m,
    ))
}
