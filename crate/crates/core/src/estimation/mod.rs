//! Coefficient fits, baseline hazard estimators and Wald intervals.

mod baseline;
mod fit;
mod optimize;
mod wald;

pub use baseline::{
    baseline_breslow, baseline_efron, baseline_nelson_aalen, pb_baseline_condition,
    update_baseline_pb, PB_LAMBDA_CAP_SCALE, PB_LAMBDA_FLOOR,
};
pub use fit::{
    fit_breslow, fit_breslow_with, fit_cox_correction, fit_efron, fit_efron_with, fit_kp, fit_pb,
    fit_pb_pipeline, fit_pb_with, standard_errors, FitResult, InitBeta, InitLambda, PbPipelineFit,
};
pub use optimize::{maximize_bfgs, maximize_newton, OptimOptions, OptimOutcome};
pub use wald::{normal_quantile, wald_ci, wald_interval, IntervalStatus, WaldInterval};
