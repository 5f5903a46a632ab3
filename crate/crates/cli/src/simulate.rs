//! `pbcox simulate`: Monte Carlo comparison of estimators.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pbcox_core::simulation::{run_simulation, write_summary_csv};
use pbcox_core::{Method, SimulationConfig};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::io::{create_dir, round_floats, sink, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMethod {
    Breslow,
    Efron,
    Pb,
    Cox,
    Kp,
}

impl From<SimMethod> for Method {
    fn from(m: SimMethod) -> Self {
        match m {
            SimMethod::Breslow => Method::Breslow,
            SimMethod::Efron => Method::Efron,
            SimMethod::Pb => Method::PbExact,
            SimMethod::Cox => Method::CoxCorrection,
            SimMethod::Kp => Method::KalbfleischPrentice,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of replicates.
    #[arg(long = "replicates", short = 'B')]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ci_level: Option<f64>,
    /// Estimators, comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SimMethod::Breslow, SimMethod::Efron, SimMethod::Pb])]
    pub methods: Vec<SimMethod>,
    /// Write summary.csv, summary.json and config.json here instead of
    /// printing the CSV summary.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Include mean fit times (not reproducible across runs).
    #[arg(long)]
    pub timing: bool,
}

fn resolve_config(args: &SimulateArgs) -> CliResult<SimulationConfig> {
    let mut map = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?
            {
                Value::Object(m) => m,
                _ => return Err(CliError::Input("config must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    set("beta", args.beta.map(Value::from));
    set("sigma_x", args.sigma_x.map(Value::from));
    set("tau", args.tau.map(Value::from));
    set("n", args.n.map(Value::from));
    set("B", args.replicates.map(Value::from));
    set("seed", args.seed.map(Value::from));
    set("ci_level", args.ci_level.map(Value::from));
    let config: SimulationConfig = serde_json::from_value(Value::Object(map))
        .map_err(|e| CliError::Input(format!("invalid configuration: {e}")))?;
    config.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(config)
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let config = resolve_config(args)?;
    let mut methods: Vec<Method> = args.methods.iter().map(|m| (*m).into()).collect();
    methods.dedup();
    if methods.is_empty() {
        return Err(CliError::Input("no methods requested".into()));
    }
    eprintln!("config: {}", serde_json::to_string(&config)?);
    let summary = run_simulation(&config, &methods)?;

    match &args.out_dir {
        Some(dir) => {
            create_dir(dir)?;
            write_summary_csv(&summary, BufWriter::new(File::create(dir.join("summary.csv"))?), args.timing)?;
            let mut doc = round_floats(serde_json::to_value(&summary)?);
            if !args.timing {
                if let Some(ms) = doc.get_mut("methods").and_then(Value::as_array_mut) {
                    for m in ms {
                        if let Some(o) = m.as_object_mut() {
                            o.remove("mean_fit_seconds");
                        }
                    }
                }
            }
            write_json(BufWriter::new(File::create(dir.join("summary.json"))?), &doc)?;
            let cfg = serde_json::to_value(&config)?;
            write_json(BufWriter::new(File::create(dir.join("config.json"))?), &cfg)?;
        }
        None => {
            let mut out = sink(None)?;
            write_summary_csv(&summary, &mut out, args.timing)?;
            out.flush()?;
        }
    }
    if !summary.valid {
        let worst = summary
            .methods
            .iter()
            .map(|m| format!("{}: {} failures", m.method, m.failures))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(CliError::Fit(format!(
            "summary flagged invalid: too many failed replicates ({worst})"
        )));
    }
    Ok(())
}
