//! Bundled example datasets.

use crate::error::Result;
use crate::survival::{read_csv, CsvColumns, CsvLoad, MissingPolicy};

const LARYNX_CSV: &str = include_str!("../../../data/larynx.csv");
const LUNG_CSV: &str = include_str!("../../../data/lung.csv");

/// Available bundled datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundled {
    /// Male laryngeal cancer patients, 90 subjects, time in years.
    Larynx,
    /// NCCTG advanced lung cancer, 228 subjects, time in days.
    Lung,
}

impl Bundled {
    pub fn name(self) -> &'static str {
        match self {
            Bundled::Larynx => "larynx",
            Bundled::Lung => "lung",
        }
    }

    pub fn csv(self) -> &'static str {
        match self {
            Bundled::Larynx => LARYNX_CSV,
            Bundled::Lung => LUNG_CSV,
        }
    }

    /// Default column selection: age with stage 3 and 4 indicators for the
    /// laryngeal data; sex, ECOG, both Karnofsky scores and weight loss for
    /// the lung data.
    pub fn columns(self) -> CsvColumns {
        let (time, status, covs): (&str, &str, &[&str]) = match self {
            Bundled::Larynx => ("time", "death", &["age", "stage3", "stage4"]),
            Bundled::Lung => (
                "time",
                "status",
                &["female", "ph_ecog", "ph_karno", "pat_karno", "wt_loss"],
            ),
        };
        CsvColumns {
            time: time.into(),
            status: status.into(),
            covariates: covs.iter().map(|c| c.to_string()).collect(),
        }
    }

    /// Loads with the default columns, dropping rows with missing values.
    pub fn load(self) -> Result<CsvLoad> {
        self.load_with(&self.columns())
    }

    pub fn load_with(self, columns: &CsvColumns) -> Result<CsvLoad> {
        read_csv(self.csv().as_bytes(), columns, MissingPolicy::DropRows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sizes() {
        let l = Bundled::Larynx.load().unwrap();
        assert_eq!(l.dataset.n(), 90);
        assert_eq!(l.dropped_rows, 0);
        let g = Bundled::Lung.load().unwrap();
        assert_eq!(g.dataset.n() + g.dropped_rows, 228);
        assert_eq!(g.dataset.n(), 210);
    }
}
