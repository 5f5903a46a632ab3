//! `pbcox pb`: Poisson-binomial pmf at one count.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pbcox_core::output::format_number;
use pbcox_core::pb::{default_algorithm, lecam_bound, pmf_with, ENUMERATION_CAP};
use pbcox_core::{PbAlgorithm, PbInput};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{num, sink, write_json, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Enum,
    Dft,
    Conv,
    Poisson,
    /// Default exact algorithm for the input size.
    Auto,
    /// Every algorithm that applies, plus the Le Cam bound.
    All,
}

#[derive(Debug, Args)]
pub struct PbArgs {
    /// Success probabilities, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "probs_file", required_unless_present = "probs_file")]
    pub probs: Vec<f64>,
    /// File of probabilities separated by commas or whitespace.
    #[arg(long)]
    pub probs_file: Option<PathBuf>,
    /// Number of successes.
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn read_probs(args: &PbArgs) -> CliResult<Vec<f64>> {
    let Some(path) = &args.probs_file else {
        return Ok(args.probs.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Input(format!("invalid probability {s:?} in {}", path.display())))
        })
        .collect()
}

pub fn run(args: &PbArgs) -> CliResult<()> {
    let probs = read_probs(args)?;
    let input = PbInput::new(probs).map_err(|e| CliError::Input(e.to_string()))?;
    if args.d > input.len() {
        return Err(CliError::Input(format!(
            "--d {} exceeds the {} probabilities",
            args.d,
            input.len()
        )));
    }
    let algos: Vec<PbAlgorithm> = match args.algo {
        AlgoArg::Enum => vec![PbAlgorithm::Enumeration],
        AlgoArg::Dft => vec![PbAlgorithm::DftCf],
        AlgoArg::Conv => vec![PbAlgorithm::Convolution],
        AlgoArg::Poisson => vec![PbAlgorithm::PoissonApprox],
        AlgoArg::Auto => vec![default_algorithm(input.len())],
        AlgoArg::All => PbAlgorithm::ALL.to_vec(),
    };
    if args.algo == AlgoArg::Enum && input.len() > ENUMERATION_CAP {
        return Err(CliError::Input(format!(
            "enumeration accepts at most {ENUMERATION_CAP} probabilities, got {}",
            input.len()
        )));
    }
    let mut rows: Vec<(&'static str, Option<f64>, String)> = Vec::new();
    for a in algos {
        if a == PbAlgorithm::Enumeration && input.len() > ENUMERATION_CAP {
            rows.push((a.name(), None, format!("skipped: more than {ENUMERATION_CAP} trials")));
            continue;
        }
        let r = pmf_with(&input, args.d, a)?;
        let note = if a.is_exact() { "exact" } else { "approximate" };
        rows.push((a.name(), Some(r.value), note.to_string()));
    }
    let bound = lecam_bound(&input);

    let mut out = sink(args.output.as_deref())?;
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["algorithm", "value", "note"])?;
            for (name, v, note) in &rows {
                w.write_record([name.to_string(), v.map_or_else(String::new, format_number), note.clone()])?;
            }
            w.write_record(["lecam_bound".to_string(), format_number(bound), "bound".to_string()])?;
            w.flush()?;
        }
        Format::Json => {
            let values: Vec<_> = rows
                .iter()
                .map(|(name, v, note)| json!({"algorithm": name, "value": v.map(num), "note": note}))
                .collect();
            let doc = json!({"n": input.len(), "d": args.d, "results": values, "lecam_bound": num(bound)});
            write_json(&mut out, &doc)?;
        }
    }
    out.flush()?;
    Ok(())
}
