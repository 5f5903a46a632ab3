//! Baseline hazard increment estimators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::likelihood::{check_dims, HazardIncrements};
use crate::survival::{linear_predictor, RiskStructure};

/// Sums of `exp(eta_i - shift[j])` over each risk set and event set, with
/// `shift[j]` the largest linear predictor in `R(t_j)`.
fn shifted_sums(eta: &[f64], risk: &RiskStructure) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ord = risk.order();
    let k = risk.k();
    let mut shift = vec![0.0; k];
    let mut s0 = vec![0.0; k];
    let mut m = f64::NEG_INFINITY;
    let mut acc = 0.0;
    let mut pos = ord.len();
    for j in (0..k).rev() {
        while pos > risk.risk_start(j) {
            pos -= 1;
            let e = eta[ord[pos]];
            if e > m {
                if m > f64::NEG_INFINITY {
                    acc *= (m - e).exp();
                }
                m = e;
            }
            acc += (e - m).exp();
        }
        shift[j] = m;
        s0[j] = acc;
    }
    let e0 = (0..k)
        .map(|j| risk.event_set(j).iter().map(|&i| (eta[i] - shift[j]).exp()).sum())
        .collect();
    (shift, s0, e0)
}

/// `lambda_j = d_j / sum_{R_j} exp(x_i' beta)`.
pub fn baseline_breslow(
    beta: &[f64],
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<HazardIncrements> {
    check_dims(beta, x, risk.order().len())?;
    let eta = linear_predictor(x, beta);
    let (shift, s0, _) = shifted_sums(&eta, risk);
    let values = (0..risk.k())
        .map(|j| ((risk.d(j) as f64).ln() - shift[j] - s0[j].ln()).exp())
        .collect();
    HazardIncrements::new(values)
}

/// `lambda_j = sum_{l=0}^{d_j-1} 1 / (S_R - (l/d_j) S_D)` with `S_R`, `S_D`
/// the risk-score sums over the risk and event sets.
pub fn baseline_efron(
    beta: &[f64],
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<HazardIncrements> {
    check_dims(beta, x, risk.order().len())?;
    let eta = linear_predictor(x, beta);
    let (shift, s0, e0) = shifted_sums(&eta, risk);
    let mut values = Vec::with_capacity(risk.k());
    for j in 0..risk.k() {
        let d = risk.d(j) as f64;
        let mut sum = 0.0;
        for l in 0..risk.d(j) {
            let denom = (s0[j] - e0[j]).max(0.0) + (1.0 - l as f64 / d) * e0[j];
            if !(denom > 0.0) {
                return Err(Error::Numeric(format!(
                    "Efron baseline denominator {denom} at event time {j}"
                )));
            }
            sum += 1.0 / denom;
        }
        values.push((sum.ln() - shift[j]).exp());
    }
    HazardIncrements::new(values)
}

/// `lambda_j = d_j / n_j`.
pub fn baseline_nelson_aalen(risk: &RiskStructure) -> HazardIncrements {
    let values = (0..risk.k())
        .map(|j| risk.d(j) as f64 / risk.n_at_risk(j) as f64)
        .collect();
    HazardIncrements::with_boundary(values, vec![false; risk.k()])
}

/// Lower end of the search bracket for the PB baseline update.
pub const PB_LAMBDA_FLOOR: f64 = 1e-12;
/// The cap is this constant divided by the smallest event risk score.
pub const PB_LAMBDA_CAP_SCALE: f64 = 50.0;

/// Derivative in `lambda` of `ln A_j`: `sum_D r e^{-r lambda} / (1 - e^{-r lambda}) - sum_{R \ D} r`.
pub fn pb_baseline_condition(
    lambda: f64,
    event_scores: &[f64],
    survivor_score_sum: f64,
) -> f64 {
    event_scores
        .iter()
        .map(|&r| r / (r * lambda).exp_m1())
        .sum::<f64>()
        - survivor_score_sum
}

fn pb_condition_slope(lambda: f64, event_scores: &[f64]) -> f64 {
    -event_scores
        .iter()
        .map(|&r| {
            let em = (r * lambda).exp_m1();
            // r^2 e^{r l} / (e^{r l} - 1)^2
            let q = r / em;
            q * q * (1.0 + em)
        })
        .sum::<f64>()
}

/// Solves the 1-D condition for one event time by Newton steps in
/// `ln lambda`, falling back to bisection whenever a step leaves the bracket.
fn solve_pb_increment(event_scores: &[f64], survivor_sum: f64, start: f64, cap: f64) -> f64 {
    let g = |l: f64| pb_baseline_condition(l, event_scores, survivor_sum);
    // g decreases from +inf to -survivor_sum; widen the bracket if needed
    let mut lo = PB_LAMBDA_FLOOR;
    let mut hi = cap;
    while g(lo) < 0.0 && lo > f64::MIN_POSITIVE * 1e10 {
        lo *= 1e-3;
    }
    let mut widen = 0;
    while g(hi) > 0.0 && widen < 200 {
        hi *= 2.0;
        widen += 1;
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut u = if start > lo && start < hi { start.ln() } else { 0.5 * (a + b) };
    let tol = 1e-14 * (survivor_sum + event_scores.iter().sum::<f64>());
    for _ in 0..500 {
        let lam = u.exp();
        let gv = g(lam);
        if gv.abs() <= tol {
            return lam;
        }
        if gv > 0.0 {
            a = u;
        } else {
            b = u;
        }
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            return lam;
        }
        let slope = lam * pb_condition_slope(lam, event_scores);
        let next = u - gv / slope;
        u = if next.is_finite() && next > a && next < b {
            next
        } else {
            0.5 * (a + b)
        };
    }
    u.exp()
}

/// Per-time maximizer of `A_j(beta, lambda)` in `lambda`.
///
/// Each increment solves the condition of [`pb_baseline_condition`] with
/// `r_i = exp(x_i' beta)`. When every subject at risk fails the condition has
/// no root; the increment is set to `50 / min_D r_i` and marked as boundary.
/// `init_lambdas` seed the search when supplied.
pub fn update_baseline_pb(
    beta_pb: &[f64],
    risk: &RiskStructure,
    x: &DMatrix<f64>,
    init_lambdas: Option<&HazardIncrements>,
) -> Result<HazardIncrements> {
    check_dims(beta_pb, x, risk.order().len())?;
    if let Some(init) = init_lambdas {
        if init.len() != risk.k() {
            return Err(Error::Domain(format!(
                "{} starting increments for {} event times",
                init.len(),
                risk.k()
            )));
        }
    }
    let eta = linear_predictor(x, beta_pb);
    let mut values = Vec::with_capacity(risk.k());
    let mut boundary = Vec::with_capacity(risk.k());
    for j in 0..risk.k() {
        let mask = risk.event_mask(j);
        let event_scores: Vec<f64> = risk.event_set(j).iter().map(|&i| eta[i].exp()).collect();
        let survivor_sum: f64 = risk
            .risk_set(j)
            .iter()
            .filter(|&&i| !mask[i])
            .map(|&i| eta[i].exp())
            .sum();
        let min_r = event_scores.iter().copied().fold(f64::INFINITY, f64::min);
        let cap = PB_LAMBDA_CAP_SCALE / min_r;
        if !cap.is_finite() || event_scores.iter().any(|r| !r.is_finite()) {
            return Err(Error::Numeric(format!(
                "risk scores overflow at event time {j}"
            )));
        }
        if survivor_sum == 0.0 {
            values.push(cap);
            boundary.push(true);
            continue;
        }
        let start = init_lambdas.map_or(f64::NAN, |l| l.values()[j]);
        values.push(solve_pb_increment(&event_scores, survivor_sum, start, cap));
        boundary.push(false);
    }
    Ok(HazardIncrements::with_boundary(values, boundary))
}
