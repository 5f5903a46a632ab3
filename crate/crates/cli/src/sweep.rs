//! `pbcox sweep`: refit a dataset over a grid of grouping widths.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use pbcox_core::analysis::{default_tau_grid, prepare, tau_sweep, write_sweep_long, write_sweep_wide};

use crate::error::{CliError, CliResult};
use crate::io::{create_dir, sink, DataArgs};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Grouping widths, comma-separated (default 0, 0.01, ..., 0.25).
    #[arg(long, value_delimiter = ',')]
    pub taus: Vec<f64>,
    /// Write sweep.csv and sweep_wide.csv here instead of printing the long
    /// table.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let taus = if args.taus.is_empty() {
        default_tau_grid()
    } else {
        args.taus.clone()
    };
    if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Input(format!("--taus entries must be nonnegative, got {t}")));
    }
    let loaded = args.data.load()?;
    if loaded.dropped_rows > 0 {
        eprintln!("note: dropped {} rows with missing values", loaded.dropped_rows);
    }
    let data = prepare(&loaded.data)?;
    let records = tau_sweep(&data, &taus)?;
    for r in &records {
        if let Some(e) = &r.error {
            eprintln!("warning: tau {}: {e}", r.tau);
        }
    }
    let names = data.names().to_vec();
    match &args.out_dir {
        Some(dir) => {
            create_dir(dir)?;
            write_sweep_long(&records, &names, BufWriter::new(File::create(dir.join("sweep.csv"))?))?;
            write_sweep_wide(&records, BufWriter::new(File::create(dir.join("sweep_wide.csv"))?))?;
        }
        None => {
            let mut out = sink(None)?;
            write_sweep_long(&records, &names, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
