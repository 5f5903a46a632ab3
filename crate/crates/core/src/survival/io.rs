use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::SurvivalDataset;

/// Which CSV columns hold the time, the event indicator and the covariates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub time: String,
    pub status: String,
    pub covariates: Vec<String>,
}

/// What to do with empty cells in the selected columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Error,
    DropRows,
}

#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: SurvivalDataset,
    /// Rows skipped under [`MissingPolicy::DropRows`].
    pub dropped_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, columns: &CsvColumns, missing: MissingPolicy) -> Result<CsvLoad> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, columns, missing)
}

/// Parses comma-separated UTF-8 text with a header row.
pub fn read_csv<R: Read>(reader: R, columns: &CsvColumns, missing: MissingPolicy) -> Result<CsvLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, "<header>", e.to_string()))?
        .clone();
    let locate = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            column: name.to_string(),
            message: "column not found in header".into(),
        })
    };
    let time_idx = locate(&columns.time)?;
    let status_idx = locate(&columns.status)?;
    let cov_idx: Vec<usize> = columns
        .covariates
        .iter()
        .map(|c| locate(c))
        .collect::<Result<_>>()?;

    let mut times = Vec::new();
    let mut status = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_err(row, "<record>", e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let cell = |idx: usize| record.get(idx).unwrap_or("");

        let wanted = std::iter::once(time_idx)
            .chain(std::iter::once(status_idx))
            .chain(cov_idx.iter().copied());
        if let Some(idx) = wanted.clone().find(|&i| cell(i).is_empty()) {
            match missing {
                MissingPolicy::DropRows => {
                    dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(parse_err(row, &headers[idx], "missing value".into()));
                }
            }
        }

        let number = |idx: usize| -> Result<f64> {
            let s = cell(idx);
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(row, &headers[idx], format!("`{s}` is not a number")))
        };
        let t = number(time_idx)?;
        if t <= 0.0 {
            return Err(parse_err(
                row,
                &columns.time,
                format!("time {t} must be strictly positive"),
            ));
        }
        let s = number(status_idx)?;
        let event = if s == 1.0 {
            true
        } else if s == 0.0 {
            false
        } else {
            return Err(parse_err(
                row,
                &columns.status,
                format!("status `{}` is not 0 or 1", cell(status_idx)),
            ));
        };
        times.push(t);
        status.push(event);
        for &idx in &cov_idx {
            values.push(number(idx)?);
        }
    }
    if times.is_empty() {
        return Err(Error::Structure("no data rows in CSV input".into()));
    }
    let p = cov_idx.len();
    let covariates = DMatrix::from_row_slice(times.len(), p, &values);
    let dataset = SurvivalDataset::new(times, status, covariates, columns.covariates.clone())?;
    Ok(CsvLoad {
        dataset,
        dropped_rows: dropped,
    })
}

fn parse_err(row: usize, column: &str, message: String) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> CsvColumns {
        CsvColumns {
            time: "time".into(),
            status: "status".into(),
            covariates: vec!["x".into()],
        }
    }

    #[test]
    fn well_formed() {
        let text = "time,status,x\n1.5,1,0.2\n2,0,1\n3,1,-1\n";
        let load = read_csv(text.as_bytes(), &cols(), MissingPolicy::Error).unwrap();
        assert_eq!(load.dataset.n(), 3);
        assert_eq!(load.dataset.status(), &[true, false, true]);
        assert_eq!(load.dataset.covariates()[(2, 0)], -1.0);
    }

    #[test]
    fn bad_status_names_row() {
        let text = "time,status,x\n1,1,0\n2,2,0\n";
        let err = read_csv(text.as_bytes(), &cols(), MissingPolicy::Error).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "status");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_structure_error() {
        let err = read_csv("time,status,x\n".as_bytes(), &cols(), MissingPolicy::Error).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn missing_column_and_bad_cells() {
        let err = read_csv("time,x\n1,0\n".as_bytes(), &cols(), MissingPolicy::Error).unwrap_err();
        assert!(matches!(err, Error::Parse { ref column, .. } if column == "status"));
        let err = read_csv("time,status,x\n1,1,abc\n2,0,1\n".as_bytes(), &cols(), MissingPolicy::Error)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = read_csv("time,status,x\n-1,1,0\n2,0,1\n".as_bytes(), &cols(), MissingPolicy::Error)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { ref column, .. } if column == "time"));
    }

    #[test]
    fn missing_values_policy() {
        let text = "time,status,x\n1,1,\n2,0,1\n3,1,2\n";
        assert!(read_csv(text.as_bytes(), &cols(), MissingPolicy::Error).is_err());
        let load = read_csv(text.as_bytes(), &cols(), MissingPolicy::DropRows).unwrap();
        assert_eq!(load.dropped_rows, 1);
        assert_eq!(load.dataset.n(), 2);
    }
}
