//! Coefficient fits for each partial likelihood.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{
    breslow_information, breslow_score, cox_correction_score, efron_information, efron_score,
    kp_correction_score, log_apl_with_gradient, log_pl_breslow, log_pl_cox_correction,
    log_pl_efron, log_pl_kp_correction, HazardIncrements, Method,
};
use crate::survival::{RiskStructure, SurvivalDataset};

use super::baseline::{baseline_breslow, baseline_efron, baseline_nelson_aalen, update_baseline_pb};
use super::optimize::{maximize_bfgs, maximize_newton, OptimOptions, OptimOutcome};

/// A fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub beta_hat: Vec<f64>,
    /// Square roots of the diagonal of the inverse information; infinite when
    /// the information is singular.
    pub std_err: Vec<f64>,
    pub information: DMatrix<f64>,
    pub loglik_at_optimum: f64,
    pub baseline: HazardIncrements,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn check_fit_inputs(data: &SurvivalDataset, risk: &RiskStructure) -> Result<()> {
    if risk.order().len() != data.n() {
        return Err(Error::Structure(format!(
            "risk structure covers {} subjects, dataset has {}",
            risk.order().len(),
            data.n()
        )));
    }
    Ok(())
}

/// Standard errors from an information matrix. Non-invertible information
/// gives infinite errors for every coefficient.
pub fn standard_errors(information: &DMatrix<f64>) -> Vec<f64> {
    let p = information.nrows();
    let inverse = information
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .filter(|inv| inv.iter().all(|v| v.is_finite()));
    match inverse {
        Some(inv) => (0..p).map(|l| inv[(l, l)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; p],
    }
}

fn require_positive_definite(information: &DMatrix<f64>, label: &str) -> Result<()> {
    if information.clone().cholesky().is_none() {
        return Err(Error::DegenerateFit(format!(
            "{label} information is singular at the optimum"
        )));
    }
    Ok(())
}

// Above this spread of the linear predictor a concave objective that does not
// decrease along the ray to 2 beta is treated as monotone.
const MONOTONE_SPREAD: f64 = 1.0;

/// Rejects an optimum that lies on a monotone likelihood: the linear
/// predictor spread is non-negligible and the objective does not decrease
/// from `beta` to `2 beta`. Valid for concave objectives only.
fn require_finite_maximum<V>(value: V, beta: &[f64], x: &DMatrix<f64>, label: &str) -> Result<()>
where
    V: Fn(&[f64]) -> Result<f64>,
{
    let eta = x * nalgebra::DVector::from_column_slice(beta);
    let spread = eta.max() - eta.min();
    if !(spread > MONOTONE_SPREAD) {
        return Ok(());
    }
    let here = value(beta)?;
    let doubled: Vec<f64> = beta.iter().map(|b| 2.0 * b).collect();
    let there = value(&doubled)?;
    if there >= here - 8.0 * f64::EPSILON * here.abs().max(1.0) {
        return Err(Error::DegenerateFit(format!(
            "{label} likelihood is monotone: coefficients diverge"
        )));
    }
    Ok(())
}

fn inverse_or_identity(information: &DMatrix<f64>) -> DMatrix<f64> {
    let p = information.nrows();
    information
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| DMatrix::identity(p, p))
}

fn finish(
    method: Method,
    out: OptimOutcome,
    information: DMatrix<f64>,
    baseline: HazardIncrements,
) -> FitResult {
    FitResult {
        method,
        std_err: standard_errors(&information),
        grad_norm: out.grad_norm(),
        beta_hat: out.x,
        information,
        loglik_at_optimum: out.value,
        baseline,
        converged: true,
        iterations: out.iterations,
    }
}

/// Breslow fit by damped Newton from `beta = 0`.
pub fn fit_breslow(data: &SurvivalDataset, risk: &RiskStructure) -> Result<FitResult> {
    fit_breslow_with(data, risk, &OptimOptions::default())
}

pub fn fit_breslow_with(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    opts: &OptimOptions,
) -> Result<FitResult> {
    check_fit_inputs(data, risk)?;
    let x = data.covariates();
    let p = data.n_covariates();
    let out = maximize_newton(
        |b| {
            Ok((
                log_pl_breslow(b, risk, x)?.loglik,
                breslow_score(b, risk, x)?,
                breslow_information(b, risk, x)?,
            ))
        },
        &vec![0.0; p],
        opts,
    )?;
    let info = breslow_information(&out.x, risk, x)?;
    require_positive_definite(&info, "Breslow")?;
    require_finite_maximum(|b| Ok(log_pl_breslow(b, risk, x)?.loglik), &out.x, x, "Breslow")?;
    let baseline = baseline_breslow(&out.x, risk, x)?;
    Ok(finish(Method::Breslow, out, info, baseline))
}

/// Efron fit by BFGS from `beta = 0`, seeded with the inverse Efron
/// information at the start.
pub fn fit_efron(data: &SurvivalDataset, risk: &RiskStructure) -> Result<FitResult> {
    fit_efron_with(data, risk, &OptimOptions::default())
}

pub fn fit_efron_with(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    opts: &OptimOptions,
) -> Result<FitResult> {
    check_fit_inputs(data, risk)?;
    let x = data.covariates();
    let beta0 = vec![0.0; data.n_covariates()];
    let h0 = inverse_or_identity(&efron_information(&beta0, risk, x)?);
    let out = maximize_bfgs(
        |b| Ok((log_pl_efron(b, risk, x)?.loglik, efron_score(b, risk, x)?)),
        &beta0,
        Some(h0),
        opts,
    )?;
    let info = efron_information(&out.x, risk, x)?;
    require_positive_definite(&info, "Efron")?;
    require_finite_maximum(|b| Ok(log_pl_efron(b, risk, x)?.loglik), &out.x, x, "Efron")?;
    let baseline = baseline_efron(&out.x, risk, x)?;
    Ok(finish(Method::Efron, out, info, baseline))
}

// Negative central-difference Jacobian of a score, symmetrized.
fn information_from_score<F>(beta: &[f64], mut score: F) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let p = beta.len();
    let mut info = DMatrix::zeros(p, p);
    let mut b = beta.to_vec();
    let step = f64::EPSILON.cbrt();
    for l in 0..p {
        let h = beta[l].abs().max(1.0) * step;
        b[l] = beta[l] + h;
        let up = score(&b)?;
        b[l] = beta[l] - h;
        let down = score(&b)?;
        b[l] = beta[l];
        for m in 0..p {
            info[(m, l)] = -(up[m] - down[m]) / (2.0 * h);
        }
    }
    Ok((&info + info.transpose()) * 0.5)
}

fn fit_enumerated<V, S>(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    method: Method,
    value: V,
    score: S,
    opts: &OptimOptions,
) -> Result<FitResult>
where
    V: Fn(&[f64]) -> Result<f64>,
    S: Fn(&[f64]) -> Result<Vec<f64>>,
{
    check_fit_inputs(data, risk)?;
    let x = data.covariates();
    let beta0 = vec![0.0; data.n_covariates()];
    let h0 = inverse_or_identity(&breslow_information(&beta0, risk, x)?);
    let out = maximize_bfgs(|b| Ok((value(b)?, score(b)?)), &beta0, Some(h0), opts)?;
    require_finite_maximum(&value, &out.x, x, method.name())?;
    let info = information_from_score(&out.x, &score)?;
    let baseline = baseline_breslow(&out.x, risk, x)?;
    Ok(finish(method, out, info, baseline))
}

/// Cox subset-average correction fit by BFGS. Standard errors come from a
/// finite-difference Jacobian of the enumerated score; the baseline is the
/// Breslow formula at the fitted coefficients.
pub fn fit_cox_correction(data: &SurvivalDataset, risk: &RiskStructure) -> Result<FitResult> {
    let x = data.covariates();
    fit_enumerated(
        data,
        risk,
        Method::CoxCorrection,
        |b| Ok(log_pl_cox_correction(b, risk, x)?.loglik),
        |b| cox_correction_score(b, risk, x),
        &OptimOptions::default(),
    )
}

/// Kalbfleisch-Prentice permutation-average correction fit, as
/// [`fit_cox_correction`].
pub fn fit_kp(data: &SurvivalDataset, risk: &RiskStructure) -> Result<FitResult> {
    let x = data.covariates();
    fit_enumerated(
        data,
        risk,
        Method::KalbfleischPrentice,
        |b| Ok(log_pl_kp_correction(b, risk, x)?.loglik),
        |b| kp_correction_score(b, risk, x),
        &OptimOptions::default(),
    )
}

/// PB fit: maximizes the accurate partial likelihood in `beta` with the
/// increments held at `init_lambdas`, then refreshes the increments with
/// [`update_baseline_pb`]. Standard errors use the Breslow information at the
/// PB estimate.
pub fn fit_pb(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    init_beta: &[f64],
    init_lambdas: &HazardIncrements,
) -> Result<FitResult> {
    fit_pb_with(data, risk, init_beta, init_lambdas, &OptimOptions::default())
}

pub fn fit_pb_with(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    init_beta: &[f64],
    init_lambdas: &HazardIncrements,
    opts: &OptimOptions,
) -> Result<FitResult> {
    check_fit_inputs(data, risk)?;
    let x = data.covariates();
    if init_beta.len() != data.n_covariates() || init_beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain(format!(
            "initial coefficients must be {} finite values",
            data.n_covariates()
        )));
    }
    if init_lambdas.len() != risk.k() {
        return Err(Error::Domain(format!(
            "{} initial increments for {} event times",
            init_lambdas.len(),
            risk.k()
        )));
    }
    if let Some(j) = init_lambdas.values().iter().position(|l| !(*l > 0.0)) {
        return Err(Error::Domain(format!(
            "initial increment at event time {j} must be positive"
        )));
    }
    let h0 = inverse_or_identity(&breslow_information(init_beta, risk, x)?);
    let out = maximize_bfgs(
        |b| {
            let (eval, grad) = log_apl_with_gradient(b, init_lambdas, risk, x)?;
            Ok((eval.loglik, grad))
        },
        init_beta,
        Some(h0),
        opts,
    )?;
    let info = breslow_information(&out.x, risk, x)?;
    let baseline = update_baseline_pb(&out.x, risk, x, Some(init_lambdas))?;
    Ok(finish(Method::PbExact, out, info, baseline))
}

/// Starting coefficients for the PB fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitBeta {
    #[default]
    Efron,
    Breslow,
    Zero,
}

/// Increments held fixed during the PB fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitLambda {
    #[default]
    Efron,
    Breslow,
    NelsonAalen,
}

/// Output of [`fit_pb_pipeline`]: the PB fit and whichever classical fits
/// were needed to initialize it.
#[derive(Debug, Clone, PartialEq)]
pub struct PbPipelineFit {
    pub pb: FitResult,
    pub efron: Option<FitResult>,
    pub breslow: Option<FitResult>,
    pub init_beta: Vec<f64>,
    pub init_lambdas: HazardIncrements,
}

/// Fits the classical models named by the initialization choices, then the
/// PB model from them. The default is Efron coefficients and Efron baseline.
pub fn fit_pb_pipeline(
    data: &SurvivalDataset,
    risk: &RiskStructure,
    init_beta: InitBeta,
    init_lambda: InitLambda,
) -> Result<PbPipelineFit> {
    let need_efron = init_beta == InitBeta::Efron || init_lambda == InitLambda::Efron;
    let need_breslow = init_beta == InitBeta::Breslow || init_lambda == InitLambda::Breslow;
    let efron = need_efron.then(|| fit_efron(data, risk)).transpose()?;
    let breslow = need_breslow.then(|| fit_breslow(data, risk)).transpose()?;
    let beta0 = match init_beta {
        InitBeta::Efron => efron.as_ref().map(|f| f.beta_hat.clone()),
        InitBeta::Breslow => breslow.as_ref().map(|f| f.beta_hat.clone()),
        InitBeta::Zero => Some(vec![0.0; data.n_covariates()]),
    }
    .expect("initial fit present");
    let lambdas = match init_lambda {
        InitLambda::Efron => efron.as_ref().map(|f| f.baseline.clone()),
        InitLambda::Breslow => breslow.as_ref().map(|f| f.baseline.clone()),
        InitLambda::NelsonAalen => Some(baseline_nelson_aalen(risk)),
    }
    .expect("initial fit present");
    let pb = fit_pb(data, risk, &beta0, &lambdas)?;
    Ok(PbPipelineFit {
        pb,
        efron,
        breslow,
        init_beta: beta0,
        init_lambdas: lambdas,
    })
}
