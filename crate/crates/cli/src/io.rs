//! Shared argument groups, dataset loading and output helpers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pbcox_core::datasets::Bundled;
use pbcox_core::output::format_number;
use pbcox_core::survival::{load_csv, CsvColumns, MissingPolicy};
use pbcox_core::SurvivalDataset;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BundledName {
    Larynx,
    Lung,
}

impl From<BundledName> for Bundled {
    fn from(b: BundledName) -> Self {
        match b {
            BundledName::Larynx => Bundled::Larynx,
            BundledName::Lung => Bundled::Lung,
        }
    }
}

/// Where the survival data come from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub data: Option<PathBuf>,
    /// Use a bundled dataset with its default columns.
    #[arg(long, value_enum)]
    pub dataset: Option<BundledName>,
    /// Time column.
    #[arg(long, default_value = "time")]
    pub time: String,
    /// Event indicator column (1 = event, 0 = censored).
    #[arg(long, default_value = "status")]
    pub status: String,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Drop rows with missing cells instead of failing.
    #[arg(long)]
    pub drop_missing: bool,
}

pub struct Loaded {
    pub data: SurvivalDataset,
    pub dropped_rows: usize,
    pub source: String,
}

impl DataArgs {
    pub fn load(&self) -> CliResult<Loaded> {
        if let Some(b) = self.dataset {
            let b: Bundled = b.into();
            let mut cols = b.columns();
            if !self.covariates.is_empty() {
                cols.covariates = self.covariates.clone();
            }
            let load = b.load_with(&cols)?;
            return Ok(Loaded {
                data: load.dataset,
                dropped_rows: load.dropped_rows,
                source: b.name().to_string(),
            });
        }
        let path = self.data.as_ref().expect("clap requires data or dataset");
        if self.covariates.is_empty() {
            return Err(CliError::Input("--covariates is required with --data".into()));
        }
        let cols = CsvColumns {
            time: self.time.clone(),
            status: self.status.clone(),
            covariates: self.covariates.clone(),
        };
        let policy = if self.drop_missing {
            MissingPolicy::DropRows
        } else {
            MissingPolicy::Error
        };
        let load = load_csv(path, &cols, policy)?;
        Ok(Loaded {
            data: load.dataset,
            dropped_rows: load.dropped_rows,
            source: path.display().to_string(),
        })
    }
}

/// Stdout or a file.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

/// A JSON number rounded to 9 significant digits; non-finite values become
/// `null`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        let rounded: f64 = format_number(v).parse().expect("formatted number parses");
        serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
    } else {
        Value::Null
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

/// Rounds every float inside a serialized value.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64 number")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn parse_unit_level(level: f64) -> CliResult<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(CliError::Input(format!("--ci-level must lie in (0, 1), got {level}")))
    }
}

pub fn parse_tau(tau: f64) -> CliResult<f64> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(tau)
    } else {
        Err(CliError::Input(format!("--tau must be nonnegative, got {tau}")))
    }
}
