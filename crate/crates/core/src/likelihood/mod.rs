//! Partial-likelihood evaluation.
//!
//! [`log_apl`] is the accurate partial likelihood: at each distinct event time
//! the probability of the observed event set divided by the Poisson-binomial
//! probability of observing that many events. The classical tie corrections
//! (Breslow, Efron, Cox's exact subset average, Kalbfleisch-Prentice's
//! permutation average) approximate it and are provided for comparison.
//!
//! Breslow's `sum log d_j!` constant is omitted; it does not depend on the
//! coefficients, so only likelihood differences are comparable across methods.

mod apl;
mod classical;
mod enumerated;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use apl::{event_prob, log_apl, log_apl_gradient_fd, log_apl_with_gradient};
pub use classical::{
    breslow_information, breslow_score, efron_information, efron_score, log_pl_breslow,
    log_pl_efron, log_pl_no_ties,
};
pub use enumerated::{
    cox_correction_score, kp_correction_score, log_pl_cox_correction, log_pl_kp_correction,
    COX_SUBSET_CAP, KP_MAX_TIES,
};

/// Likelihood variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PbExact,
    Breslow,
    Efron,
    CoxCorrection,
    KalbfleischPrentice,
    NoTiesApprox,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PbExact => "pb_exact",
            Method::Breslow => "breslow",
            Method::Efron => "efron",
            Method::CoxCorrection => "cox_correction",
            Method::KalbfleischPrentice => "kalbfleisch_prentice",
            Method::NoTiesApprox => "no_ties_approx",
        }
    }
}

/// Log partial likelihood with its per-event-time contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodEvaluation {
    pub loglik: f64,
    pub per_time_terms: Vec<f64>,
    pub method: Method,
    /// Set when some term is `-inf` (zero hazard at an event time, or an
    /// underflowed denominator).
    pub flagged: bool,
}

impl LikelihoodEvaluation {
    pub(crate) fn from_terms(per_time_terms: Vec<f64>, method: Method) -> Self {
        let flagged = per_time_terms.iter().any(|t| !t.is_finite());
        let loglik = per_time_terms.iter().sum();
        Self {
            loglik,
            per_time_terms,
            method,
            flagged,
        }
    }
}

/// Baseline hazard increments, one per distinct event time.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardIncrements {
    values: Vec<f64>,
    boundary: Vec<bool>,
}

impl HazardIncrements {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "hazard increment {v} must be finite and nonnegative"
            )));
        }
        let boundary = vec![false; values.len()];
        Ok(Self { values, boundary })
    }

    pub(crate) fn with_boundary(values: Vec<f64>, boundary: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), boundary.len());
        Self { values, boundary }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Which increments sit at the search cap because nobody survived the
    /// event time.
    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    /// Step-function cumulative hazard at each event time.
    pub fn cumulative(&self) -> Vec<f64> {
        self.values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }

    /// Every increment multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

/// Shared check that coefficient and covariate dimensions agree.
pub(crate) fn check_dims(beta: &[f64], x: &nalgebra::DMatrix<f64>, n: usize) -> Result<()> {
    if beta.len() != x.ncols() {
        return Err(Error::Domain(format!(
            "{} coefficients for {} covariates",
            beta.len(),
            x.ncols()
        )));
    }
    if x.nrows() != n {
        return Err(Error::Domain(format!(
            "covariate matrix has {} rows but the risk structure covers {n} subjects",
            x.nrows()
        )));
    }
    Ok(())
}
