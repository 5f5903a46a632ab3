//! Simulation configuration and replicate generation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{group_times, SurvivalDataset};

fn default_eta() -> f64 {
    1.31
}
fn default_gamma() -> f64 {
    1.5
}
fn default_zeta() -> f64 {
    1.0
}
fn default_ci_level() -> f64 {
    0.95
}

/// Weibull proportional-hazards design with one normal covariate,
/// independent Weibull censoring, administrative censoring at `zeta`, and
/// optional grouping of times to a grid of width `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub beta: f64,
    pub sigma_x: f64,
    #[serde(default)]
    pub tau: f64,
    pub n: usize,
    #[serde(rename = "B")]
    pub replicates: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eta")]
    pub eta_c: f64,
    #[serde(default = "default_gamma")]
    pub gamma_c: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
}

impl SimulationConfig {
    /// A design with the standard Weibull and censoring parameters
    /// (`zeta = 1`, `eta = eta_c = 1.31`, `gamma = gamma_c = 1.5`).
    pub fn new(beta: f64, sigma_x: f64, tau: f64, n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            beta,
            sigma_x,
            tau,
            n,
            replicates,
            eta: default_eta(),
            gamma: default_gamma(),
            eta_c: default_eta(),
            gamma_c: default_gamma(),
            zeta: default_zeta(),
            seed,
            ci_level: default_ci_level(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("eta_c", self.eta_c),
            ("gamma_c", self.gamma_c),
            ("sigma_x", self.sigma_x),
            ("zeta", self.zeta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.beta.is_finite() {
            return Err(Error::Domain(format!("beta must be finite, got {}", self.beta)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::Domain(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if self.n < 2 {
            return Err(Error::Domain(format!("n must be at least 2, got {}", self.n)));
        }
        if self.replicates < 1 {
            return Err(Error::Domain("B must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Domain(format!(
                "ci_level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        Ok(())
    }
}

/// Ungrouped draws behind one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentReplicate {
    pub x: Vec<f64>,
    /// Event times `exp(mu_i + W_i / gamma)`.
    pub event_times: Vec<f64>,
    /// Censoring times before truncation at `zeta`.
    pub censor_times: Vec<f64>,
}

/// Random source for replicate `index`: one ChaCha8 stream per replicate.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws covariates, event times and censoring times for `n` subjects.
///
/// `W = ln(-ln U)` is standard smallest extreme value, so
/// `T = eta_i (-ln U)^(1/gamma)` with `eta_i = eta exp(-x_i beta / gamma)`.
pub fn draw_latent<R: Rng>(config: &SimulationConfig, rng: &mut R) -> LatentReplicate {
    let normal = Normal::new(0.0, config.sigma_x).expect("validated sigma_x");
    let mut x = Vec::with_capacity(config.n);
    let mut event_times = Vec::with_capacity(config.n);
    let mut censor_times = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let xi: f64 = normal.sample(rng);
        let u: f64 = Open01.sample(rng);
        let w = (-u.ln()).ln();
        let mu = config.eta.ln() - xi * config.beta / config.gamma;
        event_times.push((mu + w / config.gamma).exp());
        let uc: f64 = Open01.sample(rng);
        censor_times.push(config.eta_c * (-uc.ln()).powf(1.0 / config.gamma_c));
        x.push(xi);
    }
    LatentReplicate {
        x,
        event_times,
        censor_times,
    }
}

/// Observed data from latent draws: censoring truncated at `zeta`, event
/// and censoring times grouped separately when `tau > 0`, then
/// `t = min(T, C)` and `delta = 1(T <= C)`.
pub fn observe(config: &SimulationConfig, latent: &LatentReplicate) -> Result<SurvivalDataset> {
    let censor: Vec<f64> = latent
        .censor_times
        .iter()
        .map(|c| c.min(config.zeta))
        .collect();
    let (events, censor) = if config.tau > 0.0 {
        (
            group_times(&latent.event_times, config.tau)?,
            group_times(&censor, config.tau)?,
        )
    } else {
        (latent.event_times.clone(), censor)
    };
    let times: Vec<f64> = events.iter().zip(&censor).map(|(t, c)| t.min(*c)).collect();
    let status: Vec<bool> = events.iter().zip(&censor).map(|(t, c)| t <= c).collect();
    let x = DMatrix::from_column_slice(latent.x.len(), 1, &latent.x);
    SurvivalDataset::new(times, status, x, vec!["x".to_string()])
}

/// Dataset for replicate `index`. A draw without events is replaced by one
/// further draw from the same stream; a second failure is an error.
pub fn generate_replicate(config: &SimulationConfig, index: u64) -> Result<SurvivalDataset> {
    config.validate()?;
    let mut rng = replicate_rng(config.seed, index);
    let mut last = None;
    for _ in 0..2 {
        let latent = draw_latent(config, &mut rng);
        match observe(config, &latent) {
            Ok(d) => return Ok(d),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("two attempts made"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let c = SimulationConfig::new(1.5, 2.0, 0.2, 200, 1000, 7);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"B\":1000"));
        let back: SimulationConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let minimal: SimulationConfig =
            serde_json::from_str(r#"{"beta":1,"sigma_x":1.5,"n":100,"B":10}"#).unwrap();
        assert_eq!(minimal.eta, 1.31);
        assert_eq!(minimal.gamma_c, 1.5);
        assert_eq!(minimal.zeta, 1.0);
        assert_eq!(minimal.tau, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = SimulationConfig::new(1.0, 1.5, 0.01, 100, 10, 1);
        assert!(c.validate().is_ok());
        c.n = 1;
        assert!(c.validate().is_err());
        c.n = 10;
        c.sigma_x = 0.0;
        assert!(c.validate().is_err());
        c.sigma_x = 1.0;
        c.ci_level = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grouped_times_are_grid_multiples() {
        let c = SimulationConfig::new(1.0, 1.5, 0.1, 100, 1, 3);
        let d = generate_replicate(&c, 0).unwrap();
        for t in d.times() {
            let m = t / 0.1;
            assert!((m - m.round()).abs() < 1e-9);
            assert!(*t <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = SimulationConfig::new(1.0, 1.5, 0.0, 50, 1, 11);
        let a = generate_replicate(&c, 4).unwrap();
        let b = generate_replicate(&c, 4).unwrap();
        assert_eq!(a, b);
        let other = generate_replicate(&c, 5).unwrap();
        assert_ne!(a.times(), other.times());
    }

    #[test]
    fn event_times_are_weibull_at_zero_beta() {
        let c = SimulationConfig::new(0.0, 1.0, 0.0, 100_000, 1, 2024);
        c.validate().unwrap();
        let mut rng = replicate_rng(c.seed, 0);
        let mut t = draw_latent(&c, &mut rng).event_times;
        t.sort_by(f64::total_cmp);
        let n = t.len() as f64;
        let cdf = |v: f64| 1.0 - (-(v / c.eta).powf(c.gamma)).exp();
        let ks = t
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let f = cdf(*v);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn censoring_never_exceeds_study_end() {
        let c = SimulationConfig::new(1.0, 2.0, 0.0, 500, 1, 5);
        let d = generate_replicate(&c, 0).unwrap();
        assert!(d.times().iter().all(|t| *t <= 1.0));
        assert!(d.status().iter().any(|s| !s));
    }
}
