//! Breslow and Efron partial likelihoods with analytic score and information.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::survival::RiskStructure;

use super::{check_dims, LikelihoodEvaluation, Method};

/// Risk-score sums over every risk set and event set. Scores at event time
/// `j` are `exp(eta_i - shift[j])` with `shift[j]` the largest linear
/// predictor in `R(t_j)`, so every `s0[j] >= 1`.
struct RiskSums {
    shift: Vec<f64>,
    // over R(t_j)
    s0: Vec<f64>,
    s1: Vec<DVector<f64>>,
    s2: Vec<DMatrix<f64>>,
    // over D(t_j)
    e0: Vec<f64>,
    e1: Vec<DVector<f64>>,
    e2: Vec<DMatrix<f64>>,
    // sum of eta over D(t_j)
    eta_d: Vec<f64>,
    x_d: Vec<DVector<f64>>,
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Order {
    Value,
    Gradient,
    Hessian,
}

impl RiskSums {
    fn compute(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>, order: Order) -> Result<Self> {
        let n = risk.order().len();
        check_dims(beta, x, n)?;
        let p = beta.len();
        let eta = crate::survival::linear_predictor(x, beta);
        let k = risk.k();
        let grad = order >= Order::Gradient;
        let hess = order >= Order::Hessian;
        let pg = if grad { p } else { 0 };
        let ph = if hess { p } else { 0 };

        let mut shift = vec![0.0; k];
        let mut s0 = vec![0.0; k];
        let mut s1 = vec![DVector::zeros(pg); k];
        let mut s2 = vec![DMatrix::zeros(ph, ph); k];
        let mut m = f64::NEG_INFINITY;
        let mut acc0 = 0.0;
        let mut acc1 = DVector::zeros(pg);
        let mut acc2 = DMatrix::zeros(ph, ph);
        let ord = risk.order();
        let mut pos = n;
        for j in (0..k).rev() {
            let start = risk.risk_start(j);
            while pos > start {
                pos -= 1;
                let i = ord[pos];
                if eta[i] > m {
                    if m > f64::NEG_INFINITY {
                        let scale = (m - eta[i]).exp();
                        acc0 *= scale;
                        acc1 *= scale;
                        acc2 *= scale;
                    }
                    m = eta[i];
                }
                let w = (eta[i] - m).exp();
                acc0 += w;
                if grad {
                    let xi = x.row(i).transpose();
                    if hess {
                        acc2 += &xi * xi.transpose() * w;
                    }
                    acc1 += xi * w;
                }
            }
            shift[j] = m;
            s0[j] = acc0;
            if grad {
                s1[j] = acc1.clone();
            }
            if hess {
                s2[j] = acc2.clone();
            }
        }

        let mut e0 = vec![0.0; k];
        let mut e1 = vec![DVector::zeros(pg); k];
        let mut e2 = vec![DMatrix::zeros(ph, ph); k];
        let mut eta_d = vec![0.0; k];
        let mut x_d = vec![DVector::zeros(p); k];
        for j in 0..k {
            for &i in risk.event_set(j) {
                let w = (eta[i] - shift[j]).exp();
                e0[j] += w;
                eta_d[j] += eta[i];
                let xi = x.row(i).transpose();
                if grad {
                    if hess {
                        e2[j] += &xi * xi.transpose() * w;
                    }
                    e1[j] += &xi * w;
                }
                x_d[j] += xi;
            }
        }
        Ok(Self {
            shift,
            s0,
            s1,
            s2,
            e0,
            e1,
            e2,
            eta_d,
            x_d,
        })
    }

    /// `sum_{R_j} w - c sum_{D_j} w`, written as survivors plus the
    /// `(1 - c)` share of the events so it stays positive.
    fn efron_denominator(&self, j: usize, c: f64) -> f64 {
        (self.s0[j] - self.e0[j]).max(0.0) + (1.0 - c) * self.e0[j]
    }
}

/// Breslow log partial likelihood,
/// `sum_j [ sum_{D_j} eta_i - d_j log sum_{R_j} exp(eta_i) ]`.
pub fn log_pl_breslow(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<LikelihoodEvaluation> {
    let s = RiskSums::compute(beta, risk, x, Order::Value)?;
    let terms = (0..risk.k())
        .map(|j| s.eta_d[j] - risk.d(j) as f64 * (s.shift[j] + s.s0[j].ln()))
        .collect();
    Ok(LikelihoodEvaluation::from_terms(terms, Method::Breslow))
}

/// The untied approximation; identical to Breslow but refuses tied data.
pub fn log_pl_no_ties(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<LikelihoodEvaluation> {
    if risk.has_ties() {
        return Err(Error::Domain(
            "the untied partial likelihood needs d_j = 1 at every event time".into(),
        ));
    }
    let mut eval = log_pl_breslow(beta, risk, x)?;
    eval.method = Method::NoTiesApprox;
    Ok(eval)
}

/// Breslow score `sum_j sum_{D_j} (x_i - e(beta, t_j))`.
pub fn breslow_score(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = RiskSums::compute(beta, risk, x, Order::Gradient)?;
    let mut u = DVector::zeros(beta.len());
    for j in 0..risk.k() {
        u += &s.x_d[j] - &s.s1[j] * (risk.d(j) as f64 / s.s0[j]);
    }
    Ok(u.iter().copied().collect())
}

/// Breslow information `sum_j d_j V(beta, t_j)`, with `V` the risk-weighted
/// covariance of the covariates over the risk set.
pub fn breslow_information(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = RiskSums::compute(beta, risk, x, Order::Hessian)?;
    let p = beta.len();
    let mut info = DMatrix::zeros(p, p);
    for j in 0..risk.k() {
        let mean = &s.s1[j] / s.s0[j];
        let v = &s.s2[j] / s.s0[j] - &mean * mean.transpose();
        info += v * risk.d(j) as f64;
    }
    Ok(symmetrize(info))
}

/// Efron log partial likelihood.
pub fn log_pl_efron(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<LikelihoodEvaluation> {
    let s = RiskSums::compute(beta, risk, x, Order::Value)?;
    let mut terms = Vec::with_capacity(risk.k());
    for j in 0..risk.k() {
        let d = risk.d(j);
        let mut term = s.eta_d[j];
        for l in 0..d {
            let c = l as f64 / d as f64;
            let den = s.efron_denominator(j, c);
            if !(den > 0.0) {
                return Err(Error::Numeric(format!(
                    "Efron denominator {den:e} at event time {j} is not positive"
                )));
            }
            term -= s.shift[j] + den.ln();
        }
        terms.push(term);
    }
    Ok(LikelihoodEvaluation::from_terms(terms, Method::Efron))
}

/// Gradient of [`log_pl_efron`].
pub fn efron_score(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = RiskSums::compute(beta, risk, x, Order::Gradient)?;
    let mut u = DVector::zeros(beta.len());
    for j in 0..risk.k() {
        let d = risk.d(j);
        u += &s.x_d[j];
        for l in 0..d {
            let c = l as f64 / d as f64;
            let den = s.efron_denominator(j, c);
            u -= (&s.s1[j] - &s.e1[j] * c) / den;
        }
    }
    Ok(u.iter().copied().collect())
}

/// Negative Hessian of [`log_pl_efron`].
pub fn efron_information(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = RiskSums::compute(beta, risk, x, Order::Hessian)?;
    let p = beta.len();
    let mut info = DMatrix::zeros(p, p);
    for j in 0..risk.k() {
        let d = risk.d(j);
        for l in 0..d {
            let c = l as f64 / d as f64;
            let den = s.efron_denominator(j, c);
            let a = (&s.s1[j] - &s.e1[j] * c) / den;
            let m2 = (&s.s2[j] - &s.e2[j] * c) / den;
            info += m2 - &a * a.transpose();
        }
    }
    Ok(symmetrize(info))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
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
    fn breslow_hand_example() {
        let (r, x) = setup(&[1.0, 2.0, 3.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let e = log_pl_breslow(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(e.loglik, (1.0f64 / 3.0).ln() + 0.5f64.ln(), epsilon = 1e-14);
        assert!((e.loglik + 1.791759).abs() < 1e-6);
    }

    #[test]
    fn breslow_at_zero_counts_risk_sets() {
        let (r, x) = setup(
            &[1.0, 1.0, 2.0, 3.0, 3.0, 4.0],
            &[true, true, false, true, true, false],
            &[0.3, -1.0, 2.0, 0.1, 0.0, 5.0],
        );
        let e = log_pl_breslow(&[0.0], &r, &x).unwrap();
        let expected: f64 = (0..r.k())
            .map(|j| -(r.d(j) as f64) * (r.n_at_risk(j) as f64).ln())
            .sum();
        assert_relative_eq!(e.loglik, expected, epsilon = 1e-13);
    }

    #[test]
    fn efron_hand_examples() {
        let (r, x) = setup(&[1.0, 1.0, 2.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let e = log_pl_efron(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(e.loglik, -(3.0f64.ln()) - 2.0f64.ln(), epsilon = 1e-14);
        assert!((e.loglik + 1.791759).abs() < 1e-6);
        let b = log_pl_breslow(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(b.loglik, -2.0 * 3.0f64.ln(), epsilon = 1e-14);
        assert!((b.loglik + 2.197225).abs() < 1e-6);
    }

    #[test]
    fn score_zero_when_risk_set_is_event_subject() {
        // each event subject is alone in its risk set
        let (r, x) = setup(&[1.0, 2.0, 3.0], &[false, false, true], &[0.4, -0.2, 1.7]);
        assert_eq!(r.n_counts(), vec![1]);
        let u = breslow_score(&[0.8], &r, &x).unwrap();
        assert!(u[0].abs() < 1e-15);
    }

    #[test]
    fn information_two_subjects() {
        let (r, x) = setup(&[1.0, 2.0], &[true, false], &[0.0, 1.0]);
        let info = breslow_information(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(info[(0, 0)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn constant_covariate_has_zero_information() {
        let rows = vec![vec![1.0, 0.3], vec![1.0, -0.4], vec![1.0, 2.0], vec![1.0, 0.0]];
        let data = SurvivalDataset::from_rows(
            vec![1.0, 2.0, 2.0, 3.0],
            vec![true, true, true, false],
            &rows,
        )
        .unwrap();
        let r = build_risk_structure(&data).unwrap();
        let info = breslow_information(&[0.2, 0.5], &r, data.covariates()).unwrap();
        assert!(info[(0, 0)].abs() < 1e-14);
        assert!(info[(0, 1)].abs() < 1e-14);
        assert!(info[(1, 0)].abs() < 1e-14);
        assert!(info[(1, 1)] > 0.0);
    }

    #[test]
    fn no_ties_method_refuses_ties() {
        let (r, x) = setup(&[1.0, 1.0, 2.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        assert!(log_pl_no_ties(&[0.0], &r, &x).is_err());
    }

    #[test]
    fn large_linear_predictors_do_not_overflow() {
        let (r, x) = setup(&[1.0, 2.0, 3.0], &[true, true, false], &[400.0, 500.0, 600.0]);
        let e = log_pl_breslow(&[2.0], &r, &x).unwrap();
        assert!(e.loglik.is_finite());
        let e = log_pl_efron(&[2.0], &r, &x).unwrap();
        assert!(e.loglik.is_finite());
    }
}
