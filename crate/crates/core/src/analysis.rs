//! Real-data protocol: rescale times, standardize covariates, regroup over a
//! grid of widths, refit, and compare the estimators against the PB fit.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_breslow, fit_pb_pipeline, InitBeta, InitLambda};
use crate::likelihood::{check_dims, event_prob, log_apl, HazardIncrements};
use crate::output::{csv_err, format_number};
use crate::survival::{
    build_risk_structure, group_times, linear_predictor, standardize_covariates, RiskStructure,
    SurvivalDataset,
};

/// Divides every time by the largest one.
pub fn scale_times(data: &SurvivalDataset) -> Result<SurvivalDataset> {
    let max = data.times().iter().copied().fold(0.0_f64, f64::max);
    data.with_times(data.times().iter().map(|t| t / max).collect())
}

/// Scaled times and standardized non-binary covariates.
pub fn prepare(data: &SurvivalDataset) -> Result<SurvivalDataset> {
    let (standardized, _) = standardize_covariates(&scale_times(data)?)?;
    Ok(standardized)
}

/// The grid `0, 0.01, ..., 0.25`.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=25).map(|i| i as f64 / 100.0).collect()
}

/// `max_l exp(|beta_hat_l - beta_pb_l|) - 1`.
pub fn estimation_discrepancy(beta_hat: &[f64], beta_pb: &[f64]) -> Result<f64> {
    if beta_hat.len() != beta_pb.len() {
        return Err(Error::Domain(format!(
            "coefficient vectors of lengths {} and {}",
            beta_hat.len(),
            beta_pb.len()
        )));
    }
    Ok(beta_hat
        .iter()
        .zip(beta_pb)
        .map(|(a, b)| (a - b).abs().exp_m1())
        .fold(0.0, f64::max))
}

fn check_lambdas(lambdas: &HazardIncrements, risk: &RiskStructure) -> Result<()> {
    if lambdas.len() != risk.k() {
        return Err(Error::Domain(format!(
            "{} hazard increments for {} event times",
            lambdas.len(),
            risk.k()
        )));
    }
    Ok(())
}

/// `(1/k) sum_j (1/n_j) sum_{R_j} p_ij^2` with `p_ij` evaluated at the
/// given coefficients and increments.
pub fn sum_squared_hazards(
    beta_pb: &[f64],
    lambdas_pb: &HazardIncrements,
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<f64> {
    check_dims(beta_pb, x, risk.order().len())?;
    check_lambdas(lambdas_pb, risk)?;
    let eta = linear_predictor(x, beta_pb);
    let total: f64 = (0..risk.k())
        .map(|j| {
            let lambda = lambdas_pb.values()[j];
            let members = risk.risk_set(j);
            members
                .iter()
                .map(|&i| event_prob(eta[i], lambda).powi(2))
                .sum::<f64>()
                / members.len() as f64
        })
        .sum();
    Ok(total / risk.k() as f64)
}

/// Log APL of each estimator's coefficients at the PB increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AplGoodness {
    pub breslow: f64,
    pub efron: f64,
    pub pb: f64,
    /// Some evaluation hit a `-inf` term.
    pub flagged: bool,
}

pub fn apl_goodness(
    beta_b: &[f64],
    beta_e: &[f64],
    beta_pb: &[f64],
    lambdas_pb: &HazardIncrements,
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<AplGoodness> {
    let b = log_apl(beta_b, lambdas_pb, risk, x)?;
    let e = log_apl(beta_e, lambdas_pb, risk, x)?;
    let p = log_apl(beta_pb, lambdas_pb, risk, x)?;
    Ok(AplGoodness {
        breslow: b.loglik,
        efron: e.loglik,
        pb: p.loglik,
        flagged: b.flagged || e.flagged || p.flagged,
    })
}

/// Coefficients and standard errors of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub beta: Vec<f64>,
    pub std_err: Vec<f64>,
}

/// Results at one grouping width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSweepRecord {
    pub tau: f64,
    /// Distinct event times.
    pub k: usize,
    pub max_ties: usize,
    pub breslow: Option<CoefficientFit>,
    pub efron: Option<CoefficientFit>,
    pub pb: Option<CoefficientFit>,
    pub ed_breslow: f64,
    pub ed_efron: f64,
    pub ssh: f64,
    pub goodness: Option<AplGoodness>,
    /// Set when a fit at this width failed; the other fields are then partial.
    pub error: Option<String>,
}

impl TauSweepRecord {
    fn empty(tau: f64) -> Self {
        Self {
            tau,
            k: 0,
            max_ties: 0,
            breslow: None,
            efron: None,
            pb: None,
            ed_breslow: f64::NAN,
            ed_efron: f64::NAN,
            ssh: f64::NAN,
            goodness: None,
            error: None,
        }
    }
}

/// Regroups `data` at width `tau` (`0` keeps the times) and refits.
pub fn sweep_cell(data: &SurvivalDataset, tau: f64) -> TauSweepRecord {
    let mut rec = TauSweepRecord::empty(tau);
    if let Err(e) = fill_cell(data, tau, &mut rec) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill_cell(data: &SurvivalDataset, tau: f64, rec: &mut TauSweepRecord) -> Result<()> {
    let grouped = if tau > 0.0 {
        data.with_times(group_times(data.times(), tau)?)?
    } else {
        data.clone()
    };
    let risk = build_risk_structure(&grouped)?;
    rec.k = risk.k();
    rec.max_ties = risk.max_ties();
    let x = grouped.covariates();
    let b = fit_breslow(&grouped, &risk)?;
    rec.breslow = Some(CoefficientFit {
        beta: b.beta_hat.clone(),
        std_err: b.std_err.clone(),
    });
    let pipe = fit_pb_pipeline(&grouped, &risk, InitBeta::Efron, InitLambda::Efron)?;
    let e = pipe.efron.expect("Efron initialization");
    rec.efron = Some(CoefficientFit {
        beta: e.beta_hat.clone(),
        std_err: e.std_err.clone(),
    });
    let pb = pipe.pb;
    rec.pb = Some(CoefficientFit {
        beta: pb.beta_hat.clone(),
        std_err: pb.std_err.clone(),
    });
    rec.ed_breslow = estimation_discrepancy(&b.beta_hat, &pb.beta_hat)?;
    rec.ed_efron = estimation_discrepancy(&e.beta_hat, &pb.beta_hat)?;
    rec.ssh = sum_squared_hazards(&pb.beta_hat, &pb.baseline, &risk, x)?;
    rec.goodness = Some(apl_goodness(
        &b.beta_hat,
        &e.beta_hat,
        &pb.beta_hat,
        &pb.baseline,
        &risk,
        x,
    )?);
    Ok(())
}

/// One record per width, in grid order. Cells run in parallel; a failed
/// cell carries its error and the sweep continues.
pub fn tau_sweep(data: &SurvivalDataset, taus: &[f64]) -> Result<Vec<TauSweepRecord>> {
    if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain(format!("grouping width {t} must be nonnegative")));
    }
    Ok(taus.par_iter().map(|&tau| sweep_cell(data, tau)).collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, format_number)
}

/// Long format: one row per width and estimator, with coefficient and
/// standard-error columns named after the covariates.
pub fn write_sweep_long<W: Write>(
    records: &[TauSweepRecord],
    names: &[String],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["tau", "method", "k", "max_ties", "ed", "log_apl"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(names.iter().map(|n| format!("beta_{n}")));
    header.extend(names.iter().map(|n| format!("se_{n}")));
    header.push("error".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let rows = [
            ("breslow", &r.breslow, Some(r.ed_breslow), r.goodness.map(|g| g.breslow)),
            ("efron", &r.efron, Some(r.ed_efron), r.goodness.map(|g| g.efron)),
            ("pb", &r.pb, Some(0.0), r.goodness.map(|g| g.pb)),
        ];
        for (label, fit, ed, ll) in rows {
            let mut row = vec![
                format_number(r.tau),
                label.to_string(),
                r.k.to_string(),
                r.max_ties.to_string(),
                if fit.is_some() { fmt_opt(ed) } else { String::new() },
                fmt_opt(ll),
            ];
            for l in 0..names.len() {
                row.push(fmt_opt(fit.as_ref().map(|f| f.beta[l])));
            }
            for l in 0..names.len() {
                row.push(fmt_opt(fit.as_ref().map(|f| f.std_err[l])));
            }
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wide format: one row per width with the plotted quantities. The ratio
/// columns are `exp(logL_pb - logL_m)`.
pub fn write_sweep_wide<W: Write>(records: &[TauSweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tau",
        "k",
        "max_ties",
        "ssh",
        "ed_breslow",
        "ed_efron",
        "log_apl_breslow",
        "log_apl_efron",
        "log_apl_pb",
        "apl_ratio_breslow",
        "apl_ratio_efron",
        "error",
    ])
    .map_err(csv_err)?;
    for r in records {
        let g = r.goodness;
        w.write_record([
            format_number(r.tau),
            r.k.to_string(),
            r.max_ties.to_string(),
            format_number(r.ssh),
            format_number(r.ed_breslow),
            format_number(r.ed_efron),
            fmt_opt(g.map(|g| g.breslow)),
            fmt_opt(g.map(|g| g.efron)),
            fmt_opt(g.map(|g| g.pb)),
            fmt_opt(g.map(|g| (g.pb - g.breslow).exp())),
            fmt_opt(g.map(|g| (g.pb - g.efron).exp())),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
