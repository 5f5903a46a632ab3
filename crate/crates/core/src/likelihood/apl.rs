//! The accurate partial likelihood.
//!
//! With `p_ij = 1 - exp(-exp(eta_i) lambda_j)` the discrete-time event
//! probability, the contribution of event time `j` is `ln A_j - ln B_j`:
//! `A_j` is the probability that exactly the observed subjects fail and
//! `B_j` is the Poisson-binomial probability that `d_j` of the `n_j` subjects
//! at risk fail.
//!
//! Both logs are formed without leaving the log domain: `ln(1 - p) = -r lambda`
//! exactly, and `B_j` comes from a truncated convolution of the law tilted to mean
//! `d_j`, so tiny denominators keep their relative precision.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pb::{ScaledPmf, Tilt};
use crate::survival::{linear_predictor, RiskStructure};

use super::{check_dims, HazardIncrements, LikelihoodEvaluation, Method};

/// `1 - exp(-exp(x_beta) lambda)`, computed through `expm1`.
pub fn event_prob(x_beta: f64, lambda: f64) -> f64 {
    -(-x_beta.exp() * lambda).exp_m1()
}

fn check_lambdas(lambdas: &HazardIncrements, risk: &RiskStructure) -> Result<()> {
    if lambdas.len() != risk.k() {
        return Err(Error::Domain(format!(
            "{} hazard increments for {} event times",
            lambdas.len(),
            risk.k()
        )));
    }
    Ok(())
}

/// Log accurate partial likelihood at fixed baseline increments.
///
/// A zero increment at an event time gives a `-inf` term and a flagged
/// evaluation, as does a denominator that underflows.
pub fn log_apl(
    beta: &[f64],
    lambdas: &HazardIncrements,
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<LikelihoodEvaluation> {
    check_dims(beta, x, risk.order().len())?;
    check_lambdas(lambdas, risk)?;
    let eta = linear_predictor(x, beta);
    let terms = (0..risk.k())
        .map(|j| time_term(&eta, lambdas.values()[j], risk, j, None))
        .collect();
    Ok(LikelihoodEvaluation::from_terms(terms, Method::PbExact))
}

/// [`log_apl`] together with its exact gradient in `beta`.
///
/// The derivative of `ln B_j` needs the leave-one-out pmfs
/// `P_{-i}(d_j - 1)` and `P_{-i}(d_j)`; they are assembled from prefix and
/// suffix convolutions truncated at `d_j`, which costs `O(n_j d_j)` per time.
/// The gradient is zero-filled wherever the value is `-inf`.
pub fn log_apl_with_gradient(
    beta: &[f64],
    lambdas: &HazardIncrements,
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<(LikelihoodEvaluation, Vec<f64>)> {
    check_dims(beta, x, risk.order().len())?;
    check_lambdas(lambdas, risk)?;
    let eta = linear_predictor(x, beta);
    let mut d_eta = vec![0.0; eta.len()];
    let mut terms = Vec::with_capacity(risk.k());
    for j in 0..risk.k() {
        terms.push(time_term(&eta, lambdas.values()[j], risk, j, Some(&mut d_eta)));
    }
    let eval = LikelihoodEvaluation::from_terms(terms, Method::PbExact);
    let p = beta.len();
    let mut grad = vec![0.0; p];
    if !eval.flagged {
        for (i, g) in d_eta.iter().enumerate() {
            if *g != 0.0 {
                for (l, gl) in grad.iter_mut().enumerate() {
                    *gl += g * x[(i, l)];
                }
            }
        }
    }
    Ok((eval, grad))
}

/// Central finite-difference gradient of [`log_apl`] with step
/// `max(1, |beta_l|) * eps^(1/3)`.
pub fn log_apl_gradient_fd(
    beta: &[f64],
    lambdas: &HazardIncrements,
    risk: &RiskStructure,
    x: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let step = f64::EPSILON.cbrt();
    let mut b = beta.to_vec();
    let mut grad = Vec::with_capacity(beta.len());
    for l in 0..beta.len() {
        let h = beta[l].abs().max(1.0) * step;
        b[l] = beta[l] + h;
        let up = log_apl(&b, lambdas, risk, x)?.loglik;
        b[l] = beta[l] - h;
        let down = log_apl(&b, lambdas, risk, x)?.loglik;
        b[l] = beta[l];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

// One event time. When `d_eta` is given, adds d(term)/d(eta_i) into it.
fn time_term(
    eta: &[f64],
    lambda: f64,
    risk: &RiskStructure,
    j: usize,
    d_eta: Option<&mut Vec<f64>>,
) -> f64 {
    let members = risk.risk_set(j);
    let d = risk.d(j);
    let n = members.len();
    if d == n {
        // everyone at risk fails: A_j = B_j
        return 0.0;
    }
    if lambda <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mask = risk.event_mask(j);

    // rate_i = r_i lambda; ln(1 - p_i) = -rate_i
    let rate: Vec<f64> = members.iter().map(|&i| eta[i].exp() * lambda).collect();
    let ln_p: Vec<f64> = rate.iter().map(|r| (-(-r).exp_m1()).ln()).collect();
    let ln_q: Vec<f64> = rate.iter().map(|r| -r).collect();

    let mut ln_a = 0.0;
    for (pos, &i) in members.iter().enumerate() {
        ln_a += if mask[i] { ln_p[pos] } else { ln_q[pos] };
    }

    let tilt = Tilt::new(&ln_p, &ln_q, d);
    let tilted = &tilt.probs;
    let ln_b_of = |ln_tilted: f64| ln_tilted + tilt.log_norm - d as f64 * tilt.log_theta;

    let Some(d_eta) = d_eta else {
        let mut acc = ScaledPmf::point_mass(d);
        for &p in tilted {
            acc.push(p);
        }
        let ln_t = acc.ln_at(d);
        return if ln_t.is_finite() { ln_a - ln_b_of(ln_t) } else { f64::NEG_INFINITY };
    };

    // prefix[m] covers members[..m], suffix[m] covers members[m..]
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = ScaledPmf::point_mass(d);
    prefix.push(acc.clone());
    for &p in tilted {
        acc.push(p);
        prefix.push(acc.clone());
    }
    let ln_t = prefix[n].ln_at(d);
    if !ln_t.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut suffix = vec![ScaledPmf::point_mass(d); n + 1];
    for m in (0..n).rev() {
        let mut s = suffix[m + 1].clone();
        s.push(tilted[m]);
        suffix[m] = s;
    }

    let theta = tilt.log_theta.exp();
    for (pos, &i) in members.iter().enumerate() {
        let f = &prefix[pos];
        let g = &suffix[pos + 1];
        let fv = f.values();
        let gv = g.values();
        // leave-one-out tilted pmf at m, relative to the full tilted pmf at d
        let conv = |m: usize| -> f64 { (0..=m).map(|a| fv[a] * gv[m - a]).sum() };
        let scale = (f.log_scale() + g.log_scale() - ln_t - tilt.log_factors[pos]).exp();
        // (P_{-i}(d - 1) - P_{-i}(d)) / B in untilted terms
        let diff = (theta * conv(d - 1) - conv(d)) * scale;
        let dp = rate[pos] * (-rate[pos]).exp();
        let d_ln_b = dp * diff;
        let d_ln_a = if mask[i] {
            // rate / expm1(rate) is d ln p / d eta
            if rate[pos] > 0.0 {
                rate[pos] / rate[pos].exp_m1()
            } else {
                1.0
            }
        } else {
            -rate[pos]
        };
        d_eta[i] += d_ln_a - d_ln_b;
    }
    ln_a - ln_b_of(ln_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::{build_risk_structure, SurvivalDataset};
    use approx::assert_relative_eq;

    fn setup(times: &[f64], status: &[bool], xs: &[f64]) -> (RiskStructure, DMatrix<f64>) {
        let rows: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
        let data = SurvivalDataset::from_rows(times.to_vec(), status.to_vec(), &rows).unwrap();
        (build_risk_structure(&data).unwrap(), data.covariates().clone())
    }

    #[test]
    fn event_prob_examples() {
        assert_relative_eq!(event_prob(0.0, 0.1), 1.0 - (-0.1f64).exp(), epsilon = 1e-16);
        assert!((event_prob(0.0, 0.1) - 0.0951626).abs() < 1e-7);
        assert_eq!(event_prob(3.0, 0.0), 0.0);
        assert!((event_prob(2.0f64.ln(), 0.1) - 0.1812692).abs() < 1e-7);
    }

    #[test]
    fn two_subject_hand_example() {
        // choose lambdas so p = (0.1, 0.2) at beta = 1 with x = (0, ln(ln .8 / ln .9))
        let lambda = -(0.9f64.ln());
        let x1 = (0.8f64.ln() / 0.9f64.ln()).ln();
        let (r, x) = setup(&[1.0, 2.0], &[true, false], &[0.0, x1]);
        let lam = HazardIncrements::new(vec![lambda]).unwrap();
        let e = log_apl(&[1.0], &lam, &r, &x).unwrap();
        assert_relative_eq!(e.per_time_terms[0], (0.08f64 / 0.26).ln(), epsilon = 1e-13);
        assert!((e.per_time_terms[0] + 1.178655).abs() < 1e-6);
    }

    #[test]
    fn everyone_fails_gives_zero_term() {
        let (r, x) = setup(&[1.0, 1.0, 2.0], &[true, true, true], &[0.0, 1.0, 2.0]);
        let lam = HazardIncrements::new(vec![0.3, 0.2]).unwrap();
        let e = log_apl(&[0.4], &lam, &r, &x).unwrap();
        assert_eq!(e.per_time_terms[1], 0.0);
        assert!(e.per_time_terms[0] < 0.0);
    }

    #[test]
    fn zero_hazard_is_flagged() {
        let (r, x) = setup(&[1.0, 2.0, 3.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let lam = HazardIncrements::new(vec![0.0, 0.2]).unwrap();
        let e = log_apl(&[0.4], &lam, &r, &x).unwrap();
        assert!(e.flagged);
        assert_eq!(e.per_time_terms[0], f64::NEG_INFINITY);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let (r, x) = setup(&[1.0, 2.0, 3.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let lam = HazardIncrements::new(vec![0.1]).unwrap();
        assert!(log_apl(&[0.4], &lam, &r, &x).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let xs = [0.3, -1.2, 0.8, 2.0, -0.4, 1.1, 0.0, -0.7];
        let (r, x) = setup(
            &[1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0],
            &[true, true, false, true, true, false, true, false],
            &xs,
        );
        let lam = HazardIncrements::new(vec![0.3, 0.4, 0.2]).unwrap();
        for beta in [-1.0, 0.0, 0.5, 2.0] {
            let (_, g) = log_apl_with_gradient(&[beta], &lam, &r, &x).unwrap();
            let fd = log_apl_gradient_fd(&[beta], &lam, &r, &x).unwrap();
            assert_relative_eq!(g[0], fd[0], max_relative = 1e-7, epsilon = 1e-9);
        }
    }

    #[test]
    fn tiny_denominator_matches_enumeration() {
        // 12 at risk, 10 tied events, p near 1e-20: B is about 1e-198
        let xs: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.5).collect();
        let mut times = vec![1.0; 10];
        times.extend([2.0, 2.0]);
        let mut status = vec![true; 10];
        status.extend([false, false]);
        let (r, x) = setup(&times, &status, &xs);
        let lam = HazardIncrements::new(vec![1e-20]).unwrap();
        let beta = [0.8];
        let (e, g) = log_apl_with_gradient(&beta, &lam, &r, &x).unwrap();
        let probs: Vec<f64> = xs.iter().map(|v| event_prob(v * beta[0], 1e-20)).collect();
        let b = crate::pb::pmf_enumeration(&crate::pb::PbInput::new(probs.clone()).unwrap(), 10).unwrap();
        let ln_a: f64 = probs[..10].iter().map(|p| p.ln()).sum::<f64>()
            + probs[10..].iter().map(|p| (-p).ln_1p()).sum::<f64>();
        assert_relative_eq!(e.loglik, ln_a - b.value.ln(), max_relative = 1e-10);
        let fd = log_apl_gradient_fd(&beta, &lam, &r, &x).unwrap();
        assert_relative_eq!(g[0], fd[0], max_relative = 1e-6, epsilon = 1e-8);
    }
}
