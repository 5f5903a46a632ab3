//! `pbcox fit`: fit the requested models to one dataset.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pbcox_core::estimation::{
    fit_breslow, fit_cox_correction, fit_efron, fit_kp, fit_pb_pipeline, wald_ci, IntervalStatus,
};
use pbcox_core::output::format_number;
use pbcox_core::survival::group_times;
use pbcox_core::{build_risk_structure, FitResult, InitBeta, InitLambda, RiskStructure};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{nums, num, parse_tau, parse_unit_level, sink, write_json, DataArgs, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Breslow,
    Efron,
    Pb,
    Cox,
    Kp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitBetaArg {
    Efron,
    Breslow,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitLambdaArg {
    Efron,
    Breslow,
    NelsonAalen,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Models to fit, comma-separated.
    #[arg(long = "method", value_enum, value_delimiter = ',', default_values_t = [FitMethod::Breslow, FitMethod::Efron, FitMethod::Pb])]
    pub methods: Vec<FitMethod>,
    /// Group times to multiples of this width before fitting (0 keeps them).
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Starting coefficients of the PB fit.
    #[arg(long, value_enum, default_value = "efron")]
    pub init_beta: InitBetaArg,
    /// Hazard increments held fixed during the PB fit.
    #[arg(long, value_enum, default_value = "efron")]
    pub init_lambda: InitLambdaArg,
    /// Confidence level of the Wald intervals.
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write baseline hazard increments (CSV) to this file.
    #[arg(long)]
    pub baseline_out: Option<PathBuf>,
}

struct Report {
    label: &'static str,
    fit: FitResult,
}

fn label(m: FitMethod) -> &'static str {
    match m {
        FitMethod::Breslow => "breslow",
        FitMethod::Efron => "efron",
        FitMethod::Pb => "pb",
        FitMethod::Cox => "cox",
        FitMethod::Kp => "kp",
    }
}

fn run_fits(args: &FitArgs, data: &pbcox_core::SurvivalDataset, risk: &RiskStructure) -> CliResult<Vec<Report>> {
    let mut methods = args.methods.clone();
    methods.dedup();
    let mut pipeline = None;
    if methods.contains(&FitMethod::Pb) {
        let beta = match args.init_beta {
            InitBetaArg::Efron => InitBeta::Efron,
            InitBetaArg::Breslow => InitBeta::Breslow,
            InitBetaArg::Zero => InitBeta::Zero,
        };
        let lambda = match args.init_lambda {
            InitLambdaArg::Efron => InitLambda::Efron,
            InitLambdaArg::Breslow => InitLambda::Breslow,
            InitLambdaArg::NelsonAalen => InitLambda::NelsonAalen,
        };
        pipeline = Some(fit_pb_pipeline(data, risk, beta, lambda)?);
    }
    let mut out = Vec::new();
    for m in methods {
        let fit = match m {
            FitMethod::Breslow => match pipeline.as_ref().and_then(|p| p.breslow.clone()) {
                Some(f) => f,
                None => fit_breslow(data, risk)?,
            },
            FitMethod::Efron => match pipeline.as_ref().and_then(|p| p.efron.clone()) {
                Some(f) => f,
                None => fit_efron(data, risk)?,
            },
            FitMethod::Pb => pipeline.as_ref().expect("pipeline ran").pb.clone(),
            FitMethod::Cox => fit_cox_correction(data, risk)?,
            FitMethod::Kp => fit_kp(data, risk)?,
        };
        out.push(Report { label: label(m), fit });
    }
    Ok(out)
}

fn status_name(s: IntervalStatus) -> &'static str {
    match s {
        IntervalStatus::Finite => "finite",
        IntervalStatus::Degenerate => "degenerate",
        IntervalStatus::Unbounded => "unbounded",
    }
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let level = parse_unit_level(args.ci_level)?;
    let tau = parse_tau(args.tau)?;
    if args.methods.is_empty() {
        return Err(CliError::Input("no methods requested".into()));
    }
    let loaded = args.data.load()?;
    let mut data = loaded.data;
    if tau > 0.0 {
        data = data.with_times(group_times(data.times(), tau)?)?;
    }
    for w in data.warnings() {
        eprintln!("warning: {w}");
    }
    if loaded.dropped_rows > 0 {
        eprintln!("note: dropped {} rows with missing values", loaded.dropped_rows);
    }
    let risk = build_risk_structure(&data)?;
    let reports = run_fits(args, &data, &risk)?;
    let names = data.names().to_vec();

    let mut out = sink(args.output.as_deref())?;
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "method", "term", "estimate", "std_err", "ci_lower", "ci_upper", "ci_status",
                "loglik", "converged", "iterations", "grad_norm",
            ])?;
            for r in &reports {
                let cis = wald_ci(&r.fit, level)?;
                for (l, name) in names.iter().enumerate() {
                    w.write_record([
                        r.label.to_string(),
                        name.clone(),
                        format_number(r.fit.beta_hat[l]),
                        format_number(r.fit.std_err[l]),
                        format_number(cis[l].lower),
                        format_number(cis[l].upper),
                        status_name(cis[l].status).to_string(),
                        format_number(r.fit.loglik_at_optimum),
                        r.fit.converged.to_string(),
                        r.fit.iterations.to_string(),
                        format_number(r.fit.grad_norm),
                    ])?;
                }
            }
            w.flush()?;
        }
        Format::Json => {
            let mut fits = Vec::new();
            for r in &reports {
                let cis = wald_ci(&r.fit, level)?;
                let coefs: Vec<Value> = names
                    .iter()
                    .enumerate()
                    .map(|(l, name)| {
                        json!({
                            "term": name,
                            "estimate": num(r.fit.beta_hat[l]),
                            "std_err": num(r.fit.std_err[l]),
                            "ci_lower": num(cis[l].lower),
                            "ci_upper": num(cis[l].upper),
                            "ci_status": status_name(cis[l].status),
                        })
                    })
                    .collect();
                fits.push(json!({
                    "method": r.label,
                    "coefficients": coefs,
                    "loglik": num(r.fit.loglik_at_optimum),
                    "converged": r.fit.converged,
                    "iterations": r.fit.iterations,
                    "grad_norm": num(r.fit.grad_norm),
                    "baseline": {
                        "event_times": nums(risk.event_times()),
                        "increments": nums(r.fit.baseline.values()),
                        "boundary": r.fit.baseline.boundary(),
                    },
                }));
            }
            let doc = json!({
                "source": loaded.source,
                "n": data.n(),
                "events": data.n_events(),
                "distinct_event_times": risk.k(),
                "tau": num(tau),
                "ci_level": num(level),
                "dropped_rows": loaded.dropped_rows,
                "fits": fits,
            });
            write_json(&mut out, &doc)?;
        }
    }
    out.flush()?;

    if let Some(path) = &args.baseline_out {
        let mut w = csv::Writer::from_writer(sink(Some(path))?);
        w.write_record(["method", "event_time", "increment", "cumulative", "boundary"])?;
        for r in &reports {
            let cum = r.fit.baseline.cumulative();
            for (j, t) in risk.event_times().iter().enumerate() {
                w.write_record([
                    r.label.to_string(),
                    format_number(*t),
                    format_number(r.fit.baseline.values()[j]),
                    format_number(cum[j]),
                    r.fit.baseline.boundary()[j].to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
