//! Monte Carlo harness: fit every replicate and summarize.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    fit_breslow, fit_cox_correction, fit_efron, fit_kp, fit_pb, normal_quantile, wald_interval,
    FitResult,
};
use crate::likelihood::Method;
use crate::output::{csv_err, format_number};
use crate::survival::{build_risk_structure, SurvivalDataset};

use super::generate::{generate_replicate, SimulationConfig};

/// Share of failed replicates above which a summary is flagged invalid.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// One coefficient estimate from one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub beta: f64,
    pub se: f64,
    pub seconds: f64,
}

/// Something that fits a replicate under one or more labelled methods.
pub trait ReplicateEstimator: Sync {
    fn labels(&self) -> Vec<String>;
    /// One entry per label, in label order.
    fn estimate(&self, data: &SurvivalDataset) -> Vec<Result<Estimate>>;
}

/// The library fits. The PB fit starts from the Efron fit, which is shared
/// with the Efron row when both are requested; the PB time includes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardEstimators {
    methods: Vec<Method>,
}

impl StandardEstimators {
    pub fn new(methods: Vec<Method>) -> Result<Self> {
        if methods.is_empty() {
            return Err(Error::Domain("no methods requested".into()));
        }
        if methods.contains(&Method::NoTiesApprox) {
            return Err(Error::Domain(
                "the no-ties approximation is not a simulation method".into(),
            ));
        }
        Ok(Self { methods })
    }

    /// Breslow, Efron and PB.
    pub fn default_trio() -> Self {
        Self {
            methods: vec![Method::Breslow, Method::Efron, Method::PbExact],
        }
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (Result<T>, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}

fn to_estimate(fit: &FitResult, seconds: f64) -> Result<Estimate> {
    let se = fit.std_err[0];
    if !se.is_finite() {
        return Err(Error::DegenerateFit("standard error is not finite".into()));
    }
    Ok(Estimate {
        beta: fit.beta_hat[0],
        se,
        seconds,
    })
}

fn clone_err(e: &Error) -> Error {
    Error::Numeric(format!("initial Efron fit failed: {e}"))
}

impl ReplicateEstimator for StandardEstimators {
    fn labels(&self) -> Vec<String> {
        self.methods.iter().map(|m| m.name().to_string()).collect()
    }

    fn estimate(&self, data: &SurvivalDataset) -> Vec<Result<Estimate>> {
        let risk = match build_risk_structure(data) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.to_string();
                return self
                    .methods
                    .iter()
                    .map(|_| Err(Error::Structure(msg.clone())))
                    .collect();
            }
        };
        let needs_efron = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::Efron | Method::PbExact));
        let efron = needs_efron.then(|| timed(|| fit_efron(data, &risk)));
        self.methods
            .iter()
            .map(|m| match m {
                Method::Breslow => {
                    let (fit, s) = timed(|| fit_breslow(data, &risk));
                    fit.and_then(|f| to_estimate(&f, s))
                }
                Method::Efron => match efron.as_ref().expect("efron fitted") {
                    (Ok(f), s) => to_estimate(f, *s),
                    (Err(e), _) => Err(clone_err(e)),
                },
                Method::PbExact => match efron.as_ref().expect("efron fitted") {
                    (Ok(e), s0) => {
                        let (fit, s) = timed(|| fit_pb(data, &risk, &e.beta_hat, &e.baseline));
                        fit.and_then(|f| to_estimate(&f, s + s0))
                    }
                    (Err(e), _) => Err(clone_err(e)),
                },
                Method::CoxCorrection => {
                    let (fit, s) = timed(|| fit_cox_correction(data, &risk));
                    fit.and_then(|f| to_estimate(&f, s))
                }
                Method::KalbfleischPrentice => {
                    let (fit, s) = timed(|| fit_kp(data, &risk));
                    fit.and_then(|f| to_estimate(&f, s))
                }
                Method::NoTiesApprox => unreachable!("rejected at construction"),
            })
            .collect()
    }
}

/// Monte Carlo summary of one method. Moments exclude failed replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub successes: usize,
    pub failures: usize,
    pub mean_beta: f64,
    /// `sqrt(mean((beta_hat - beta)^2))`.
    pub rmse: f64,
    /// `mean(beta_hat) - beta`.
    pub bias: f64,
    /// Standard deviation of `beta_hat` with divisor `B - 1`.
    pub empirical_sd: f64,
    /// `rmse / |beta|`; undefined when `beta = 0`.
    pub scaled_rmse: f64,
    /// `|bias| / |beta|`; undefined when `beta = 0`.
    pub scaled_abs_bias: f64,
    pub coverage: f64,
    pub mean_se: f64,
    pub mean_fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub methods: Vec<MethodSummary>,
    /// Replicates whose data could not be generated; they count as failures
    /// for every method.
    pub generation_failures: usize,
    /// False when some method failed on more than 5% of replicates.
    pub valid: bool,
}

impl SimulationSummary {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label)
    }
}

/// What happened to one replicate.
#[derive(Debug)]
pub enum ReplicateOutcome {
    /// One entry per method label.
    Fitted(Vec<Result<Estimate>>),
    /// The data could not be generated; counts as a failure for every method.
    GenerationFailed(Error),
}

/// Outcomes in replicate order.
pub type ReplicateTable = Vec<ReplicateOutcome>;

/// Generates and fits every replicate in parallel; results are in replicate
/// order regardless of scheduling.
pub fn run_replicates<E: ReplicateEstimator>(
    config: &SimulationConfig,
    estimator: &E,
) -> Result<ReplicateTable> {
    config.validate()?;
    Ok((0..config.replicates as u64)
        .into_par_iter()
        .map(|b| match generate_replicate(config, b) {
            Ok(data) => ReplicateOutcome::Fitted(estimator.estimate(&data)),
            Err(e) => ReplicateOutcome::GenerationFailed(e),
        })
        .collect())
}

/// Aggregates a replicate table into per-method summaries.
pub fn summarize(
    config: &SimulationConfig,
    labels: &[String],
    table: &ReplicateTable,
) -> Result<SimulationSummary> {
    let z = normal_quantile(config.ci_level)?;
    let truth = config.beta;
    let generation_failures = table
        .iter()
        .filter(|o| matches!(o, ReplicateOutcome::GenerationFailed(_)))
        .count();
    let mut methods = Vec::with_capacity(labels.len());
    for (col, label) in labels.iter().enumerate() {
        let ok: Vec<Estimate> = table
            .iter()
            .filter_map(|o| match o {
                ReplicateOutcome::Fitted(row) => row[col].as_ref().ok().copied(),
                ReplicateOutcome::GenerationFailed(_) => None,
            })
            .collect();
        let count = ok.len();
        let failures = table.len() - count;
        let nf = count as f64;
        let mean = |f: &dyn Fn(&Estimate) -> f64| ok.iter().map(f).sum::<f64>() / nf;
        let mean_beta = mean(&|e| e.beta);
        let mse = mean(&|e| (e.beta - truth).powi(2));
        let rmse = mse.sqrt();
        let bias = mean_beta - truth;
        let empirical_sd = if count > 1 {
            (ok.iter().map(|e| (e.beta - mean_beta).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            f64::NAN
        };
        let coverage = mean(&|e| {
            if wald_interval(e.beta, e.se, z).contains(truth) {
                1.0
            } else {
                0.0
            }
        });
        let scale = truth.abs();
        methods.push(MethodSummary {
            method: label.clone(),
            successes: count,
            failures,
            mean_beta,
            rmse,
            bias,
            empirical_sd,
            scaled_rmse: if scale > 0.0 { rmse / scale } else { f64::NAN },
            scaled_abs_bias: if scale > 0.0 { bias.abs() / scale } else { f64::NAN },
            coverage,
            mean_se: mean(&|e| e.se),
            mean_fit_seconds: mean(&|e| e.seconds),
        });
    }
    let limit = MAX_FAILURE_RATE * table.len() as f64;
    let valid = methods.iter().all(|m| m.failures as f64 <= limit);
    Ok(SimulationSummary {
        config: config.clone(),
        methods,
        generation_failures,
        valid,
    })
}

/// Runs the full experiment for `estimator`.
pub fn run_simulation_with<E: ReplicateEstimator>(
    config: &SimulationConfig,
    estimator: &E,
) -> Result<SimulationSummary> {
    let table = run_replicates(config, estimator)?;
    summarize(config, &estimator.labels(), &table)
}

/// Runs the full experiment for the named methods.
pub fn run_simulation(config: &SimulationConfig, methods: &[Method]) -> Result<SimulationSummary> {
    run_simulation_with(config, &StandardEstimators::new(methods.to_vec())?)
}

/// One CSV row per method. Fit timings are omitted unless requested so that
/// repeated runs produce identical files.
pub fn write_summary_csv<W: Write>(
    summary: &SimulationSummary,
    out: W,
    include_timing: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "method",
        "successes",
        "failures",
        "mean_beta",
        "rmse",
        "bias",
        "empirical_sd",
        "scaled_rmse",
        "scaled_abs_bias",
        "coverage",
        "mean_se",
    ];
    if include_timing {
        header.push("mean_fit_seconds");
    }
    w.write_record(&header).map_err(csv_err)?;
    for m in &summary.methods {
        let mut row = vec![
            m.method.clone(),
            m.successes.to_string(),
            m.failures.to_string(),
            format_number(m.mean_beta),
            format_number(m.rmse),
            format_number(m.bias),
            format_number(m.empirical_sd),
            format_number(m.scaled_rmse),
            format_number(m.scaled_abs_bias),
            format_number(m.coverage),
            format_number(m.mean_se),
        ];
        if include_timing {
            row.push(format_number(m.mean_fit_seconds));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
