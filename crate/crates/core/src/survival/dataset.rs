use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance applied to `t / tau` before taking the ceiling, so a
/// time that is a multiple of `tau` up to rounding stays on its grid point.
pub const GROUPING_REL_TOL: f64 = 1e-9;

/// Observed times, event indicators and an `n x p` covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    times: Vec<f64>,
    status: Vec<bool>,
    covariates: DMatrix<f64>,
    names: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(
        times: Vec<f64>,
        status: Vec<bool>,
        covariates: DMatrix<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = times.len();
        if n < 2 {
            return Err(Error::Structure(format!(
                "need at least 2 subjects, got {n}"
            )));
        }
        if status.len() != n || covariates.nrows() != n {
            return Err(Error::Structure(format!(
                "row counts disagree: {n} times, {} status values, {} covariate rows",
                status.len(),
                covariates.nrows()
            )));
        }
        if names.len() != covariates.ncols() {
            return Err(Error::Structure(format!(
                "{} covariate names for {} columns",
                names.len(),
                covariates.ncols()
            )));
        }
        if let Some((i, t)) = times
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > 0.0))
        {
            return Err(Error::Domain(format!(
                "time {t} of subject {i} is not strictly positive"
            )));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("covariates must be finite".into()));
        }
        if !status.iter().any(|&s| s) {
            return Err(Error::Structure("no events in the data".into()));
        }
        Ok(Self {
            times,
            status,
            covariates,
            names,
        })
    }

    /// Builds a dataset from row-major covariate rows with generated names.
    pub fn from_rows(times: Vec<f64>, status: Vec<bool>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Structure("ragged covariate rows".into()));
        }
        let covariates = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(times, status, covariates, names)
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s).count()
    }

    /// Same subjects with replacement times.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(
            times,
            self.status.clone(),
            self.covariates.clone(),
            self.names.clone(),
        )
    }

    /// Same subjects with a replacement covariate matrix.
    pub fn with_covariates(&self, covariates: DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.times.clone(),
            self.status.clone(),
            covariates,
            self.names.clone(),
        )
    }

    /// `x_i' beta` for every subject.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        linear_predictor(&self.covariates, beta)
    }

    /// Non-fatal problems with the data. At present this reports the absence
    /// of a censored subject at or after the last event time.
    pub fn warnings(&self) -> Vec<String> {
        let last_event = self
            .times
            .iter()
            .zip(&self.status)
            .filter(|(_, &s)| s)
            .map(|(&t, _)| t)
            .fold(f64::NEG_INFINITY, f64::max);
        let survivors = self
            .times
            .iter()
            .zip(&self.status)
            .filter(|(&t, &s)| !s && t >= last_event)
            .count();
        if survivors == 0 {
            vec![format!(
                "no censored subject at or after the last event time {last_event}"
            )]
        } else {
            Vec::new()
        }
    }
}

pub(crate) fn linear_predictor(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    assert_eq!(x.ncols(), beta.len(), "coefficient length mismatch");
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|l| x[(i, l)] * beta[l]).sum())
        .collect()
}

/// Rounds every time up to the next multiple of `tau`.
pub fn group_times(times: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Domain(format!("grouping width {tau} must be positive")));
    }
    Ok(times
        .iter()
        .map(|&t| {
            let q = t / tau;
            let nearest = q.round();
            let m = if (q - nearest).abs() <= GROUPING_REL_TOL * q.abs().max(1.0) {
                nearest
            } else {
                q.ceil()
            };
            m * tau
        })
        .collect())
}

/// Location and scale applied to one covariate column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnTransform {
    pub mean: f64,
    pub sd: f64,
    /// Binary columns are passed through (mean 0, sd 1).
    pub binary: bool,
}

impl ColumnTransform {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Centers and scales every non-binary column to mean 0 and sample sd 1.
/// A column is binary when its values all lie in `{0, 1}`.
pub fn standardize_covariates(
    data: &SurvivalDataset,
) -> Result<(SurvivalDataset, Vec<ColumnTransform>)> {
    let x = data.covariates();
    let n = x.nrows() as f64;
    let mut out = x.clone();
    let mut transforms = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        if col.iter().all(|&v| v == 0.0 || v == 1.0) {
            transforms.push(ColumnTransform {
                mean: 0.0,
                sd: 1.0,
                binary: true,
            });
            continue;
        }
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateCovariate(data.names()[j].clone()));
        }
        let t = ColumnTransform {
            mean,
            sd,
            binary: false,
        };
        for i in 0..x.nrows() {
            out[(i, j)] = t.apply(x[(i, j)]);
        }
        transforms.push(t);
    }
    Ok((data.with_covariates(out)?, transforms))
}
