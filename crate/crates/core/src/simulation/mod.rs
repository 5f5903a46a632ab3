//! Monte Carlo study of the estimators under grouped Weibull data.

mod generate;
mod harness;

pub use generate::{
    draw_latent, generate_replicate, observe, replicate_rng, LatentReplicate, SimulationConfig,
};
pub use harness::{
    run_replicates, run_simulation, run_simulation_with, summarize, write_summary_csv, Estimate,
    MethodSummary, ReplicateEstimator, ReplicateOutcome, ReplicateTable, SimulationSummary,
    StandardEstimators, MAX_FAILURE_RATE,
};
