//! Cox proportional-hazards regression on the accurate partial likelihood.
//!
//! The accurate partial likelihood divides, at each distinct event time, the
//! probability of the observed event set by the Poisson-binomial probability
//! of observing that many events. This crate evaluates and maximizes it, and
//! provides the classical Breslow, Efron, Cox and Kalbfleisch-Prentice tie
//! corrections alongside, together with a Monte Carlo harness and a
//! real-data grouping sweep for comparing them.
//!
//! ```
//! use pbcox_core::pb::{pmf_convolution, PbInput};
//!
//! let input = PbInput::new(vec![0.1, 0.2]).unwrap();
//! let p = pmf_convolution(&input, 1).unwrap().value;
//! assert!((p - 0.26).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod datasets;
pub mod error;
pub mod estimation;
pub mod likelihood;
pub mod output;
pub mod pb;
pub mod simulation;
pub mod survival;

pub use error::{Error, Result};
pub use analysis::TauSweepRecord;
pub use estimation::{FitResult, InitBeta, InitLambda};
pub use likelihood::{HazardIncrements, LikelihoodEvaluation, Method};
pub use pb::{PbAlgorithm, PbInput, PbResult};
pub use simulation::{SimulationConfig, SimulationSummary};
pub use survival::{build_risk_structure, RiskStructure, SurvivalDataset};
