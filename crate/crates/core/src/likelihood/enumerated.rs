//! Cox's subset-average and Kalbfleisch-Prentice's permutation-average tie
//! corrections, both by brute-force enumeration. They are comparison
//! baselines, so the enumeration sizes are capped.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::survival::{linear_predictor, RiskStructure};

use super::{check_dims, LikelihoodEvaluation, Method};

/// Most size-`d_j` subsets enumerated per event time.
pub const COX_SUBSET_CAP: f64 = 1.0e6;

/// Largest tie count accepted by the Kalbfleisch-Prentice correction (9! orderings).
pub const KP_MAX_TIES: usize = 9;

/// Cox correction: the event-set risk score over the sum of risk scores of
/// every size-`d_j` subset of the risk set.
pub fn log_pl_cox_correction(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<LikelihoodEvaluation> {
    let (terms, _) = cox_terms(beta, risk, x, false)?;
    Ok(LikelihoodEvaluation::from_terms(terms, Method::CoxCorrection))
}

/// Gradient of [`log_pl_cox_correction`].
pub fn cox_correction_score(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (_, grad) = cox_terms(beta, risk, x, true)?;
    Ok(grad.expect("gradient requested").iter().copied().collect())
}

/// Kalbfleisch-Prentice correction: the average over the `d_j!` orderings of
/// the tied events of the sequential untied likelihood.
pub fn log_pl_kp_correction(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<LikelihoodEvaluation> {
    let (terms, _) = kp_terms(beta, risk, x, false)?;
    Ok(LikelihoodEvaluation::from_terms(terms, Method::KalbfleischPrentice))
}

/// Gradient of [`log_pl_kp_correction`].
pub fn kp_correction_score(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (_, grad) = kp_terms(beta, risk, x, true)?;
    Ok(grad.expect("gradient requested").iter().copied().collect())
}

fn binomial(n: usize, d: usize) -> f64 {
    (1..=d).fold(1.0, |acc, i| acc * (n - d + i) as f64 / i as f64)
}

fn row(x: &DMatrix<f64>, i: usize) -> DVector<f64> {
    x.row(i).transpose()
}

type Terms = (Vec<f64>, Option<DVector<f64>>);

fn cox_terms(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>, want_grad: bool) -> Result<Terms> {
    check_dims(beta, x, risk.order().len())?;
    let eta = linear_predictor(x, beta);
    let p = beta.len();
    let mut terms = Vec::with_capacity(risk.k());
    let mut grad = DVector::zeros(p);

    for j in 0..risk.k() {
        let members = risk.risk_set(j);
        let d = risk.d(j);
        let count = binomial(members.len(), d);
        if count > COX_SUBSET_CAP {
            return Err(Error::Capacity {
                what: "Cox correction subsets",
                size: count,
                cap: COX_SUBSET_CAP,
            });
        }
        let mut sorted: Vec<f64> = members.iter().map(|&i| eta[i]).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        // no subset sum exceeds the sum of the d largest
        let ceiling: f64 = sorted[..d].iter().sum();

        let mut walk = SubsetWalk {
            eta: &eta,
            members,
            ceiling,
            total: 0.0,
            member_weight: if want_grad { vec![0.0; members.len()] } else { Vec::new() },
            chosen: Vec::with_capacity(d),
        };
        walk.visit(0, d, 0.0);

        let eta_d: f64 = risk.event_set(j).iter().map(|&i| eta[i]).sum();
        terms.push(eta_d - (ceiling + walk.total.ln()));
        if want_grad {
            for &i in risk.event_set(j) {
                grad += row(x, i);
            }
            for (pos, &i) in members.iter().enumerate() {
                grad -= row(x, i) * (walk.member_weight[pos] / walk.total);
            }
        }
    }
    Ok((terms, want_grad.then_some(grad)))
}

struct SubsetWalk<'a> {
    eta: &'a [f64],
    members: &'a [usize],
    ceiling: f64,
    total: f64,
    member_weight: Vec<f64>,
    chosen: Vec<usize>,
}

impl SubsetWalk<'_> {
    fn visit(&mut self, start: usize, remaining: usize, sum: f64) {
        if remaining == 0 {
            let w = (sum - self.ceiling).exp();
            self.total += w;
            if !self.member_weight.is_empty() {
                for &pos in &self.chosen {
                    self.member_weight[pos] += w;
                }
            }
            return;
        }
        for pos in start..=(self.members.len() - remaining) {
            self.chosen.push(pos);
            let e = self.eta[self.members[pos]];
            self.visit(pos + 1, remaining - 1, sum + e);
            self.chosen.pop();
        }
    }
}

fn kp_terms(beta: &[f64], risk: &RiskStructure, x: &DMatrix<f64>, want_grad: bool) -> Result<Terms> {
    check_dims(beta, x, risk.order().len())?;
    let eta = linear_predictor(x, beta);
    let p = beta.len();
    let mut terms = Vec::with_capacity(risk.k());
    let mut grad = DVector::zeros(p);

    for j in 0..risk.k() {
        let d = risk.d(j);
        if d > KP_MAX_TIES {
            return Err(Error::Capacity {
                what: "Kalbfleisch-Prentice orderings (tied events)",
                size: d as f64,
                cap: KP_MAX_TIES as f64,
            });
        }
        let members = risk.risk_set(j);
        let shift = members.iter().map(|&i| eta[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        for &i in members {
            let w = (eta[i] - shift).exp();
            s0 += w;
            if want_grad {
                s1 += row(x, i) * w;
            }
        }
        let events = risk.event_set(j);
        let ev_w: Vec<f64> = events.iter().map(|&i| (eta[i] - shift).exp()).collect();
        let ev_x: Vec<DVector<f64>> = events.iter().map(|&i| row(x, i)).collect();
        let eta_d: f64 = events.iter().map(|&i| eta[i]).sum();
        let mut x_d = DVector::zeros(p);
        for xi in &ev_x {
            x_d += xi;
        }

        let mut walk = PermutationWalk {
            d,
            s0,
            s1: &s1,
            ev_w: &ev_w,
            ev_x: &ev_x,
            want_grad,
            used: vec![false; d],
            max_log: f64::NEG_INFINITY,
            sum: 0.0,
            grad_sum: DVector::zeros(p),
        };
        walk.visit(0, 0.0, &DVector::zeros(p), 0.0, &DVector::zeros(p));

        let ln_fact: f64 = (2..=d).map(|v| (v as f64).ln()).sum();
        // every ordering shares exp(eta_D) and the shift; add them back here
        terms.push(eta_d - d as f64 * shift + walk.max_log + walk.sum.ln() - ln_fact);
        if want_grad {
            grad += x_d - walk.grad_sum / walk.sum;
        }
    }
    Ok((terms, want_grad.then_some(grad)))
}

struct PermutationWalk<'a> {
    d: usize,
    s0: f64,
    s1: &'a DVector<f64>,
    ev_w: &'a [f64],
    ev_x: &'a [DVector<f64>],
    want_grad: bool,
    used: Vec<bool>,
    // running log-sum-exp of -sum log(den) over orderings
    max_log: f64,
    sum: f64,
    grad_sum: DVector<f64>,
}

impl PermutationWalk<'_> {
    fn visit(
        &mut self,
        depth: usize,
        removed0: f64,
        removed1: &DVector<f64>,
        log_den: f64,
        mean_acc: &DVector<f64>,
    ) {
        let den = self.s0 - removed0;
        let log_den = log_den + den.ln();
        let mean_acc = if self.want_grad {
            mean_acc + (self.s1 - removed1) / den
        } else {
            mean_acc.clone()
        };
        if depth + 1 == self.d {
            self.accumulate(-log_den, &mean_acc);
            return;
        }
        for e in 0..self.d {
            if self.used[e] {
                continue;
            }
            self.used[e] = true;
            let r1 = if self.want_grad {
                removed1 + &self.ev_x[e] * self.ev_w[e]
            } else {
                removed1.clone()
            };
            self.visit(depth + 1, removed0 + self.ev_w[e], &r1, log_den, &mean_acc);
            self.used[e] = false;
        }
    }

    fn accumulate(&mut self, log_term: f64, mean_acc: &DVector<f64>) {
        if log_term > self.max_log {
            let scale = (self.max_log - log_term).exp();
            self.sum *= scale;
            self.grad_sum *= scale;
            self.max_log = log_term;
        }
        let w = (log_term - self.max_log).exp();
        self.sum += w;
        if self.want_grad {
            self.grad_sum += mean_acc * w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::log_pl_breslow;
    use crate::survival::{build_risk_structure, SurvivalDataset};
    use approx::assert_relative_eq;

    fn setup(times: &[f64], status: &[bool], xs: &[f64]) -> (RiskStructure, DMatrix<f64>) {
        let rows: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
        let data = SurvivalDataset::from_rows(times.to_vec(), status.to_vec(), &rows).unwrap();
        (build_risk_structure(&data).unwrap(), data.covariates().clone())
    }

    #[test]
    fn cox_correction_hand_example() {
        let (r, x) = setup(&[1.0, 1.0, 2.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let e = log_pl_cox_correction(&[1.0], &r, &x).unwrap();
        let expected = 1.0 - (1.0f64.exp() + 2.0f64.exp() + 3.0f64.exp()).ln();
        assert_relative_eq!(e.per_time_terms[0], expected, epsilon = 1e-14);
        assert!((e.per_time_terms[0] + 2.407606).abs() < 1e-6);
    }

    #[test]
    fn cox_correction_at_zero_is_log_inverse_binomial() {
        let (r, x) = setup(
            &[1.0, 1.0, 1.0, 2.0, 3.0, 3.0],
            &[true, true, true, false, true, false],
            &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        );
        let e = log_pl_cox_correction(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(e.per_time_terms[0], -(20.0f64).ln(), epsilon = 1e-14);
        assert_relative_eq!(e.per_time_terms[1], -(2.0f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn kp_hand_example() {
        let (r, x) = setup(&[1.0, 1.0, 2.0], &[true, true, false], &[0.0, 1.0, 2.0]);
        let e = log_pl_kp_correction(&[0.0], &r, &x).unwrap();
        assert_relative_eq!(e.per_time_terms[0], (1.0f64 / 6.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn kp_two_ties_matches_permutation_oracle() {
        let xs = [0.3, -1.2, 0.8, 2.0];
        let (r, x) = setup(&[1.0, 1.0, 2.0, 3.0], &[true, true, false, true], &xs);
        let beta = 0.7;
        let rs: Vec<f64> = xs.iter().map(|v| (v * beta).exp()).collect();
        let total: f64 = rs.iter().sum();
        // orderings (0,1) and (1,0)
        let num = rs[0] * rs[1];
        let a = num / (total * (total - rs[0]));
        let b = num / (total * (total - rs[1]));
        let expected = (0.5 * (a + b)).ln();
        let e = log_pl_kp_correction(&[beta], &r, &x).unwrap();
        assert_relative_eq!(e.per_time_terms[0], expected, epsilon = 1e-13);
    }

    #[test]
    fn single_events_match_breslow() {
        let (r, x) = setup(
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[true, false, true, true, false],
            &[0.5, -0.3, 1.2, 0.0, -2.0],
        );
        let b = log_pl_breslow(&[0.9], &r, &x).unwrap();
        let c = log_pl_cox_correction(&[0.9], &r, &x).unwrap();
        let k = log_pl_kp_correction(&[0.9], &r, &x).unwrap();
        for j in 0..r.k() {
            assert!((b.per_time_terms[j] - c.per_time_terms[j]).abs() < 1e-13);
            assert!((b.per_time_terms[j] - k.per_time_terms[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn caps_are_enforced() {
        let n = 40;
        let times: Vec<f64> = (0..n).map(|i| if i < 20 { 1.0 } else { 2.0 }).collect();
        let status = vec![true; n];
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / 10.0).collect();
        let (r, x) = setup(&times, &status, &xs);
        assert!(matches!(
            log_pl_cox_correction(&[0.1], &r, &x),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            log_pl_kp_correction(&[0.1], &r, &x),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let xs = [0.3, -1.2, 0.8, 2.0, -0.4, 1.1];
        let (r, x) = setup(
            &[1.0, 1.0, 1.0, 2.0, 2.0, 3.0],
            &[true, true, true, true, true, false],
            &xs,
        );
        let h = 1e-5;
        for beta in [-0.8, 0.0, 0.6] {
            let fd = |f: &dyn Fn(f64) -> f64| (f(beta + h) - f(beta - h)) / (2.0 * h);
            let cox = fd(&|b| log_pl_cox_correction(&[b], &r, &x).unwrap().loglik);
            let kp = fd(&|b| log_pl_kp_correction(&[b], &r, &x).unwrap().loglik);
            assert_relative_eq!(cox_correction_score(&[beta], &r, &x).unwrap()[0], cox, max_relative = 1e-7);
            assert_relative_eq!(kp_correction_score(&[beta], &r, &x).unwrap()[0], kp, max_relative = 1e-7);
        }
    }
}
