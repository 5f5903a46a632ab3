//! Poisson-binomial probability mass function.
//!
//! The count of events among independent, non-identically distributed
//! Bernoulli trials follows a Poisson-binomial law. Four routes to its pmf are
//! provided: brute-force subset enumeration (a test oracle), the discrete
//! Fourier transform of the characteristic function, direct convolution of
//! the two-point distributions, and the Poisson approximation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest trial count accepted by [`pmf_enumeration`].
pub const ENUMERATION_CAP: usize = 25;

/// Above this trial count [`pmf`] routes to the DFT algorithm.
pub const DFT_THRESHOLD: usize = 50;

/// Stand-in for `ln(0)` returned by [`log_pmf`].
pub const LOG_ZERO: f64 = -1.0e300;

const DFT_ROUNDING_FLOOR: f64 = -1.0e-6;

/// Per-trial success probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PbInput {
    probs: Vec<f64>,
}

impl PbInput {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("probability vector is empty".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::Domain(format!(
                "probability {p} at position {i} is outside [0, 1]"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbAlgorithm {
    Enumeration,
    DftCf,
    Convolution,
    PoissonApprox,
}

impl PbAlgorithm {
    pub const ALL: [PbAlgorithm; 4] = [
        PbAlgorithm::Enumeration,
        PbAlgorithm::DftCf,
        PbAlgorithm::Convolution,
        PbAlgorithm::PoissonApprox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PbAlgorithm::Enumeration => "enumeration",
            PbAlgorithm::DftCf => "dft_cf",
            PbAlgorithm::Convolution => "convolution",
            PbAlgorithm::PoissonApprox => "poisson_approx",
        }
    }

    pub fn is_exact(self) -> bool {
        !matches!(self, PbAlgorithm::PoissonApprox)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbResult {
    pub value: f64,
    pub algorithm: PbAlgorithm,
}

fn check_count(input: &PbInput, d: usize) -> Result<()> {
    if d > input.len() {
        return Err(Error::Domain(format!(
            "event count {d} exceeds the {} trials",
            input.len()
        )));
    }
    Ok(())
}

/// Sum over all size-`d` subsets of the product of their success
/// probabilities and the failure probabilities of the complement.
pub fn pmf_enumeration(input: &PbInput, d: usize) -> Result<PbResult> {
    if input.len() > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "pmf enumeration",
            size: input.len() as f64,
            cap: ENUMERATION_CAP as f64,
        });
    }
    check_count(input, d)?;
    let value = enumerate_subsets(input.probs(), d, 0, 1.0);
    Ok(PbResult {
        value,
        algorithm: PbAlgorithm::Enumeration,
    })
}

// Depth-first walk of the include/exclude tree, pruned to leaves with exactly
// `remaining` further inclusions.
fn enumerate_subsets(probs: &[f64], remaining: usize, start: usize, acc: f64) -> f64 {
    let left = probs.len() - start;
    if remaining > left {
        return 0.0;
    }
    if left == 0 {
        return acc;
    }
    let p = probs[start];
    let mut total = 0.0;
    if remaining > 0 {
        total += enumerate_subsets(probs, remaining - 1, start + 1, acc * p);
    }
    if remaining < left {
        total += enumerate_subsets(probs, remaining, start + 1, acc * (1.0 - p));
    }
    total
}

/// Evaluates the pmf at `d` through the inverse DFT of the characteristic
/// function sampled at the `n + 1` roots of unity.
pub fn pmf_dft(input: &PbInput, d: usize) -> Result<PbResult> {
    check_count(input, d)?;
    let z = characteristic_samples(input.probs());
    let n1 = z.len();
    let omega = 2.0 * PI / n1 as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, zl) in z.iter().enumerate() {
        // reduce l*d mod (n+1) before the multiply to keep the angle small
        let k = (l * d) % n1;
        acc += Complex64::from_polar(1.0, -omega * k as f64) * zl;
    }
    let value = clean_dft_value(acc.re / n1 as f64)?;
    Ok(PbResult {
        value,
        algorithm: PbAlgorithm::DftCf,
    })
}

/// The whole pmf vector `(P(0), …, P(n))` by the DFT route.
pub fn pmf_vector_dft(input: &PbInput) -> Result<Vec<f64>> {
    let z = characteristic_samples(input.probs());
    let n1 = z.len();
    let omega = 2.0 * PI / n1 as f64;
    let twiddle: Vec<Complex64> = (0..n1)
        .map(|k| Complex64::from_polar(1.0, -omega * k as f64))
        .collect();
    (0..n1)
        .map(|d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, zl) in z.iter().enumerate() {
                acc += twiddle[(l * d) % n1] * zl;
            }
            clean_dft_value(acc.re / n1 as f64)
        })
        .collect()
}

// z_l = prod_i (1 - p_i + p_i e^{i omega l}), l = 0..=n. The upper half is the
// conjugate of the lower half.
fn characteristic_samples(probs: &[f64]) -> Vec<Complex64> {
    let n1 = probs.len() + 1;
    let omega = 2.0 * PI / n1 as f64;
    let mut z = vec![Complex64::new(0.0, 0.0); n1];
    z[0] = Complex64::new(1.0, 0.0);
    for l in 1..=(n1 / 2) {
        let w = Complex64::from_polar(1.0, omega * l as f64);
        let mut prod = Complex64::new(1.0, 0.0);
        for &p in probs {
            prod *= Complex64::new(1.0 - p, 0.0) + w * p;
        }
        z[l] = prod;
        z[n1 - l] = prod.conj();
    }
    z
}

fn clean_dft_value(v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::Numeric("DFT pmf evaluated to NaN".into()));
    }
    if v < DFT_ROUNDING_FLOOR {
        return Err(Error::Numeric(format!(
            "DFT pmf value {v:e} is negative beyond rounding"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Evaluates the pmf at `d` by sequentially convolving the two-point
/// distributions `{1 - p_i, p_i}`.
pub fn pmf_convolution(input: &PbInput, d: usize) -> Result<PbResult> {
    check_count(input, d)?;
    let value = pmf_vector_convolution(input.probs())[d];
    Ok(PbResult {
        value,
        algorithm: PbAlgorithm::Convolution,
    })
}

/// The whole pmf vector by direct convolution.
pub fn pmf_vector_convolution(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        let q = 1.0 - p;
        for m in (1..=i + 1).rev() {
            pmf[m] = pmf[m] * q + pmf[m - 1] * p;
        }
        pmf[0] *= q;
    }
    pmf
}

/// Poisson approximation `mu^d e^{-mu} / d!` with `mu = sum p_i`.
pub fn pmf_poisson(input: &PbInput, d: usize) -> Result<PbResult> {
    Ok(PbResult {
        value: poisson_pmf(input.mean(), d),
        algorithm: PbAlgorithm::PoissonApprox,
    })
}

pub(crate) fn poisson_pmf(mu: f64, d: usize) -> f64 {
    if mu == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let k = d as f64;
    (k * mu.ln() - mu - ln_gamma(k + 1.0)).exp()
}

/// Dispatches to the requested algorithm.
pub fn pmf_with(input: &PbInput, d: usize, algorithm: PbAlgorithm) -> Result<PbResult> {
    match algorithm {
        PbAlgorithm::Enumeration => pmf_enumeration(input, d),
        PbAlgorithm::DftCf => pmf_dft(input, d),
        PbAlgorithm::Convolution => pmf_convolution(input, d),
        PbAlgorithm::PoissonApprox => pmf_poisson(input, d),
    }
}

/// Default exact algorithm for `n` trials.
pub fn default_algorithm(n: usize) -> PbAlgorithm {
    if n > DFT_THRESHOLD {
        PbAlgorithm::DftCf
    } else {
        PbAlgorithm::Convolution
    }
}

/// Exact pmf at `d` using the default algorithm for the input size.
pub fn pmf(input: &PbInput, d: usize) -> Result<PbResult> {
    pmf_with(input, d, default_algorithm(input.len()))
}

/// `ln P(d)` from the default algorithm; a zero probability maps to [`LOG_ZERO`].
pub fn log_pmf(input: &PbInput, d: usize) -> Result<f64> {
    let v = pmf(input, d)?.value;
    Ok(if v > 0.0 { v.ln() } else { LOG_ZERO })
}

/// Le Cam bound on the average absolute error of the Poisson approximation,
/// `(2/n) sum p_i^2`.
pub fn lecam_bound(input: &PbInput) -> f64 {
    let n = input.len() as f64;
    2.0 * input.probs().iter().map(|p| p * p).sum::<f64>() / n
}

/// A pmf truncated to `0..=max_count`, stored as `values * exp(log_scale)` so
/// long products of small factors do not underflow.
#[derive(Debug, Clone)]
pub(crate) struct ScaledPmf {
    values: Vec<f64>,
    log_scale: f64,
}

impl ScaledPmf {
    pub(crate) fn point_mass(max_count: usize) -> Self {
        let mut values = vec![0.0; max_count + 1];
        values[0] = 1.0;
        Self {
            values,
            log_scale: 0.0,
        }
    }

    /// Convolves in one more trial with success probability `p`.
    pub(crate) fn push(&mut self, p: f64) {
        let q = 1.0 - p;
        let v = &mut self.values;
        for m in (1..v.len()).rev() {
            v[m] = v[m] * q + v[m - 1] * p;
        }
        v[0] *= q;
        let peak = v.iter().fold(0.0_f64, |a, &b| a.max(b));
        if peak > 0.0 && !(1e-100..=1e100).contains(&peak) {
            v.iter_mut().for_each(|x| *x /= peak);
            self.log_scale += peak.ln();
        }
    }

    pub(crate) fn ln_at(&self, m: usize) -> f64 {
        let v = self.values[m];
        if v > 0.0 {
            v.ln() + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn log_scale(&self) -> f64 {
        self.log_scale
    }
}

/// Exponential tilt that moves the mean of a Poisson-binomial law to `d`.
///
/// For any `theta > 0`,
/// `P(d) = theta^{-d} prod_i (q_i + p_i theta) P_theta(d)` where `P_theta` has
/// success probabilities `p_i theta / (q_i + p_i theta)`. Tilting to the
/// saddle point puts `d` near the mode of `P_theta`, so a convolution
/// truncated at `d` never has to carry values far below its peak.
pub(crate) struct Tilt {
    /// `ln theta`.
    pub(crate) log_theta: f64,
    /// `sum_i ln(q_i + p_i theta)`.
    pub(crate) log_norm: f64,
    /// Tilted success probabilities.
    pub(crate) probs: Vec<f64>,
    /// `ln(q_i + p_i theta)` per trial.
    pub(crate) log_factors: Vec<f64>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Tilt {
    /// Tilt for trials given by `ln p_i` and `ln q_i`, targeting count `d`.
    /// At an end of the support the tilt makes the forced outcomes nearly sure.
    pub(crate) fn new(ln_p: &[f64], ln_q: &[f64], d: usize) -> Self {
        let logit: Vec<f64> = ln_p.iter().zip(ln_q).map(|(a, b)| a - b).collect();
        let certain = ln_q.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        let possible = ln_p.iter().filter(|v| **v > f64::NEG_INFINITY).count();
        let finite = logit.iter().filter(|l| l.is_finite());
        let log_theta = if d > certain && d < possible {
            saddle(&logit, d as f64)
        } else if d == possible && d > certain {
            // every possible trial succeeds: push their tilted odds high
            let lo = finite.fold(f64::INFINITY, |m, l| m.min(*l));
            (40.0 - lo).clamp(-700.0, 700.0)
        } else if d == certain && d < possible {
            let hi = finite.fold(f64::NEG_INFINITY, |m, l| m.max(*l));
            (-40.0 - hi).clamp(-700.0, 700.0)
        } else {
            0.0
        };
        let mut log_norm = 0.0;
        let mut probs = Vec::with_capacity(ln_p.len());
        let mut log_factors = Vec::with_capacity(ln_p.len());
        for (a, b) in ln_p.iter().zip(ln_q) {
            let shifted = a + log_theta;
            let f = log_add_exp(*b, shifted);
            log_norm += f;
            log_factors.push(f);
            probs.push(if shifted == f64::NEG_INFINITY {
                0.0
            } else {
                (shifted - f).exp().min(1.0)
            });
        }
        Self {
            log_theta,
            log_norm,
            probs,
            log_factors,
        }
    }

    /// Tilt for plain success probabilities.
    pub(crate) fn from_probs(probs: &[f64], d: usize) -> Self {
        let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let ln_q: Vec<f64> = probs.iter().map(|p| (-p).ln_1p()).collect();
        Self::new(&ln_p, &ln_q, d)
    }
}

// Root in u of sum_i sigmoid(u + logit_i) = target. Any root estimate keeps
// the tilted identity exact, so a loose tolerance suffices.
fn saddle(logit: &[f64], target: f64) -> f64 {
    let sigmoid = |z: f64| {
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    };
    let (mut lo, mut hi) = (-700.0_f64, 700.0_f64);
    let mut u = 0.0;
    for _ in 0..100 {
        let (mut f, mut slope) = (-target, 0.0);
        for &l in logit {
            let s = sigmoid(u + l);
            f += s;
            slope += s * (1.0 - s);
        }
        if f.abs() < 1e-3 {
            break;
        }
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let next = u - f / slope;
        u = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-9 {
            break;
        }
    }
    u
}

/// `ln P(d)` by a tilted, truncated, rescaled convolution. Accuracy is
/// relative rather than absolute, so tiny probabilities keep their digits.
/// Returns `-inf` when the probability is zero.
pub fn ln_pmf_convolution(probs: &[f64], d: usize) -> f64 {
    if d > probs.len() {
        return f64::NEG_INFINITY;
    }
    let tilt = Tilt::from_probs(probs, d);
    let mut acc = ScaledPmf::point_mass(d);
    for &p in &tilt.probs {
        acc.push(p);
    }
    let ln_tilted = acc.ln_at(d);
    if ln_tilted == f64::NEG_INFINITY {
        return ln_tilted;
    }
    ln_tilted + tilt.log_norm - d as f64 * tilt.log_theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn input(p: &[f64]) -> PbInput {
        PbInput::new(p.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(pmf_enumeration(&input(&[0.0, 0.0]), 0).unwrap().value, 1.0);
        assert_eq!(pmf_enumeration(&input(&[0.5]), 1).unwrap().value, 0.5);
        assert_relative_eq!(
            pmf_enumeration(&input(&[0.1, 0.2]), 1).unwrap().value,
            0.26,
            epsilon = 1e-15
        );
    }

    #[test]
    fn enumeration_cap_and_domain() {
        let big = input(&[0.1; 26]);
        assert!(matches!(
            pmf_enumeration(&big, 3),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            pmf_enumeration(&input(&[0.1, 0.2]), 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dft_examples() {
        assert!((pmf_dft(&input(&[0.1, 0.2]), 1).unwrap().value - 0.26).abs() < 1e-12);
        // C(10,4) 0.3^4 0.7^6
        let expected = 210.0 * 0.3f64.powi(4) * 0.7f64.powi(6);
        assert!((expected - 0.200120949).abs() < 1e-9);
        let v = pmf_dft(&input(&[0.3; 10]), 4).unwrap().value;
        assert!((v - expected).abs() < 1e-12);
        let v = pmf_dft(&input(&[1.0, 1.0, 1.0]), 3).unwrap().value;
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_examples() {
        assert_relative_eq!(
            pmf_convolution(&input(&[0.1, 0.2]), 2).unwrap().value,
            0.02,
            epsilon = 1e-15
        );
        assert_eq!(pmf_convolution(&input(&[0.0, 0.7]), 1).unwrap().value, 0.7);
    }

    #[test]
    fn poisson_examples() {
        let v = pmf_poisson(&input(&[0.1, 0.2]), 1).unwrap().value;
        assert_relative_eq!(v, 0.3 * (-0.3f64).exp(), epsilon = 1e-15);
        assert!((v - 0.222245).abs() < 1e-6);
        assert_eq!(pmf_poisson(&input(&[0.0, 0.0]), 0).unwrap().value, 1.0);
        let v = pmf_poisson(&input(&[0.5, 0.5]), 0).unwrap().value;
        assert_relative_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn lecam_examples() {
        assert_relative_eq!(lecam_bound(&input(&[0.1, 0.2])), 0.05, epsilon = 1e-15);
        assert_relative_eq!(lecam_bound(&input(&[0.1, 0.1])), 0.02, epsilon = 1e-15);
        assert_eq!(lecam_bound(&input(&[0.0; 7])), 0.0);
    }

    #[test]
    fn input_validation() {
        assert!(PbInput::new(vec![]).is_err());
        assert!(PbInput::new(vec![0.2, 1.5]).is_err());
        assert!(PbInput::new(vec![-0.1]).is_err());
        assert!(PbInput::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn routing_switches_above_threshold() {
        assert_eq!(default_algorithm(50), PbAlgorithm::Convolution);
        assert_eq!(default_algorithm(51), PbAlgorithm::DftCf);
        let big = input(&vec![0.02; 80]);
        assert_eq!(pmf(&big, 2).unwrap().algorithm, PbAlgorithm::DftCf);
    }

    #[test]
    fn log_pmf_sentinel() {
        assert_eq!(log_pmf(&input(&[0.0, 0.0]), 1).unwrap(), LOG_ZERO);
        assert_relative_eq!(
            log_pmf(&input(&[0.1, 0.2]), 1).unwrap(),
            0.26f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn scaled_convolution_keeps_tiny_values() {
        // 400 trials with p = 1e-3, all succeed: 1e-1200, far below f64 range
        let probs = vec![1e-3; 400];
        let v = ln_pmf_convolution(&probs, 400);
        assert_relative_eq!(v, 400.0 * 1e-3f64.ln(), max_relative = 1e-12);
        let v = ln_pmf_convolution(&[0.1, 0.2], 1);
        assert_relative_eq!(v, 0.26f64.ln(), epsilon = 1e-14);
        // tail far from the mean, both sides
        let probs = vec![0.5; 60];
        let v = ln_pmf_convolution(&probs, 60);
        assert_relative_eq!(v, 60.0 * 0.5f64.ln(), max_relative = 1e-12);
        assert_eq!(ln_pmf_convolution(&[0.0, 0.3], 2), f64::NEG_INFINITY);
        assert_eq!(ln_pmf_convolution(&[1.0, 0.3], 0), f64::NEG_INFINITY);
        assert_relative_eq!(ln_pmf_convolution(&[1.0, 0.3], 1), 0.7f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn dft_vector_matches_convolution() {
        let probs: Vec<f64> = (0..60).map(|i| ((i * 37) % 100) as f64 / 100.0).collect();
        let a = pmf_vector_dft(&input(&probs)).unwrap();
        let b = pmf_vector_convolution(&probs);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
