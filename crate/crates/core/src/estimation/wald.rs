//! Wald confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::fit::FitResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalStatus {
    Finite,
    /// Zero standard error: the interval is the point estimate.
    Degenerate,
    /// Infinite or undefined standard error.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldInterval {
    pub lower: f64,
    pub upper: f64,
    pub status: IntervalStatus,
}

impl WaldInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Two-sided standard normal quantile `z_{(1 + level)/2}`.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level} not in (0, 1)")));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf((1.0 + level) / 2.0))
}

/// `estimate +- z se` for one coefficient.
pub fn wald_interval(estimate: f64, se: f64, z: f64) -> WaldInterval {
    if se == 0.0 {
        WaldInterval {
            lower: estimate,
            upper: estimate,
            status: IntervalStatus::Degenerate,
        }
    } else if !se.is_finite() {
        WaldInterval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            status: IntervalStatus::Unbounded,
        }
    } else {
        WaldInterval {
            lower: estimate - z * se,
            upper: estimate + z * se,
            status: IntervalStatus::Finite,
        }
    }
}

/// Per-coefficient Wald intervals at `level`.
pub fn wald_ci(fit: &FitResult, level: f64) -> Result<Vec<WaldInterval>> {
    let z = normal_quantile(level)?;
    Ok(fit
        .beta_hat
        .iter()
        .zip(&fit.std_err)
        .map(|(b, s)| wald_interval(*b, *s, z))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let i = wald_interval(0.0, 1.0, normal_quantile(0.95).unwrap());
        assert!((i.lower + 1.959964).abs() < 1e-6 && (i.upper - 1.959964).abs() < 1e-6);
        let i = wald_interval(2.0, 1.0, normal_quantile(0.5).unwrap());
        assert!((i.lower - 1.325511).abs() < 1e-6 && (i.upper - 2.674489).abs() < 1e-6);
    }

    #[test]
    fn degenerate_and_unbounded() {
        let i = wald_interval(1.5, 0.0, 1.96);
        assert_eq!((i.lower, i.upper, i.status), (1.5, 1.5, IntervalStatus::Degenerate));
        let i = wald_interval(1.5, f64::INFINITY, 1.96);
        assert_eq!(i.status, IntervalStatus::Unbounded);
        assert!(i.contains(1e300));
    }

    #[test]
    fn level_must_be_open_unit() {
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(0.0).is_err());
    }
}
