//! Right-censored survival data: the dataset type, time grouping, risk-set
//! construction, covariate standardization and CSV ingestion.

mod dataset;
mod io;
mod risk;

pub(crate) use dataset::linear_predictor;
pub use dataset::{
    group_times, standardize_covariates, ColumnTransform, SurvivalDataset, GROUPING_REL_TOL,
};
pub use io::{load_csv, read_csv, CsvColumns, CsvLoad, MissingPolicy};
pub use risk::{build_risk_structure, RiskStructure};
