//! Maximizers for smooth concave-ish objectives: damped Newton when the
//! Hessian is available, BFGS otherwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Stopping rules shared by every fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    /// Convergence when the gradient max-norm falls to this level.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per line search.
    pub max_halvings: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 200,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    /// Trial points rejected because the objective was not finite.
    pub nonfinite_trials: usize,
}

impl OptimOutcome {
    pub fn grad_norm(&self) -> f64 {
        max_norm(&self.grad)
    }
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
}

// Accept a step that fails the sufficient-increase test only by rounding noise
// in the objective, provided the gradient shrank.
fn rounding_slack(value: f64) -> f64 {
    8.0 * f64::EPSILON * value.abs().max(1.0)
}

/// Maximizes `f` by BFGS on the inverse of the negative Hessian, starting from
/// `inv_hess0` (identity when `None`). `f` returns the value and gradient;
/// non-finite values are treated as infeasible and the step is halved.
pub fn maximize_bfgs<F>(
    mut f: F,
    x0: &[f64],
    inv_hess0: Option<DMatrix<f64>>,
    opts: &OptimOptions,
) -> Result<OptimOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let p = x0.len();
    let h_init = inv_hess0.unwrap_or_else(|| DMatrix::identity(p, p));
    let mut h = h_init.clone();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x.as_slice())?;
    if !fx.is_finite() {
        return Err(Error::Numeric(format!(
            "objective is not finite at the starting point ({fx})"
        )));
    }
    let mut g = DVector::from_vec(g0);
    let mut nonfinite = 0;
    let mut reset_used = false;

    for iter in 0..opts.max_iter {
        if max_norm(g.as_slice()) <= opts.grad_tol {
            return Ok(OptimOutcome {
                x: x.iter().copied().collect(),
                value: fx,
                grad: g.iter().copied().collect(),
                iterations: iter,
                nonfinite_trials: nonfinite,
            });
        }
        let mut dir = &h * &g;
        let mut slope = g.dot(&dir);
        if !(slope > 0.0) {
            // lost positive definiteness; fall back to the initial metric
            h = h_init.clone();
            dir = &h * &g;
            slope = g.dot(&dir);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &dir * t;
            let (ft, gt) = f(trial.as_slice())?;
            if !ft.is_finite() || gt.iter().any(|v| !v.is_finite()) {
                nonfinite += 1;
                t *= 0.5;
                continue;
            }
            let gt = DVector::from_vec(gt);
            let sufficient = ft >= fx + 1e-4 * t * slope;
            let noise_ok = ft >= fx - rounding_slack(fx)
                && max_norm(gt.as_slice()) < max_norm(g.as_slice());
            if sufficient || noise_ok {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if !reset_used {
                reset_used = true;
                h = h_init.clone();
                continue;
            }
            return Err(Error::NonConvergence {
                iterations: iter,
                grad_norm: max_norm(g.as_slice()),
                last_iterate: x.iter().copied().collect(),
            });
        };

        let s = &x_new - &x;
        // curvature pair for the negative objective
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let ident = DMatrix::<f64>::identity(p, p);
            let left = &ident - &s * y.transpose() * rho;
            let right = &ident - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    if max_norm(g.as_slice()) <= opts.grad_tol {
        return Ok(OptimOutcome {
            x: x.iter().copied().collect(),
            value: fx,
            grad: g.iter().copied().collect(),
            iterations: opts.max_iter,
            nonfinite_trials: nonfinite,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        grad_norm: max_norm(g.as_slice()),
        last_iterate: x.iter().copied().collect(),
    })
}

/// Damped Newton ascent. `f` returns value, gradient and the negative
/// Hessian (information), which must be positive definite along the path.
pub fn maximize_newton<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> Result<OptimOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)>,
{
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0, mut info) = f(x.as_slice())?;
    if !fx.is_finite() {
        return Err(Error::Numeric(format!(
            "objective is not finite at the starting point ({fx})"
        )));
    }
    let mut g = DVector::from_vec(g0);
    let mut nonfinite = 0;
    for iter in 0..opts.max_iter {
        if max_norm(g.as_slice()) <= opts.grad_tol {
            return Ok(OptimOutcome {
                x: x.iter().copied().collect(),
                value: fx,
                grad: g.iter().copied().collect(),
                iterations: iter,
                nonfinite_trials: nonfinite,
            });
        }
        let chol = info.clone().cholesky().ok_or_else(|| {
            Error::DegenerateFit("information matrix is not positive definite".into())
        })?;
        let dir = chol.solve(&g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &dir * t;
            let (ft, gt, it) = f(trial.as_slice())?;
            if !ft.is_finite() {
                nonfinite += 1;
                t *= 0.5;
                continue;
            }
            let gt = DVector::from_vec(gt);
            let noise_ok = ft >= fx - rounding_slack(fx)
                && max_norm(gt.as_slice()) < max_norm(g.as_slice());
            if ft >= fx || noise_ok {
                accepted = Some((trial, ft, gt, it));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn, inew)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter,
                grad_norm: max_norm(g.as_slice()),
                last_iterate: x.iter().copied().collect(),
            });
        };
        x = xn;
        fx = fnew;
        g = gn;
        info = inew;
    }
    if max_norm(g.as_slice()) <= opts.grad_tol {
        return Ok(OptimOutcome {
            x: x.iter().copied().collect(),
            value: fx,
            grad: g.iter().copied().collect(),
            iterations: opts.max_iter,
            nonfinite_trials: nonfinite,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        grad_norm: max_norm(g.as_slice()),
        last_iterate: x.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // concave quadratic with maximum at (1, -2)
    fn quad(x: &[f64]) -> (f64, Vec<f64>) {
        let a = x[0] - 1.0;
        let b = x[1] + 2.0;
        let v = -(2.0 * a * a + a * b + b * b);
        (v, vec![-(4.0 * a + b), -(a + 2.0 * b)])
    }

    #[test]
    fn bfgs_finds_quadratic_maximum() {
        let out = maximize_bfgs(|x| Ok(quad(x)), &[5.0, 5.0], None, &OptimOptions::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8);
        assert!((out.x[1] + 2.0).abs() < 1e-8);
        assert!(out.grad_norm() <= 1e-8);
    }

    #[test]
    fn newton_finds_quadratic_maximum() {
        let info = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let out = maximize_newton(
            |x| {
                let (v, g) = quad(x);
                Ok((v, g, info.clone()))
            },
            &[5.0, 5.0],
            &OptimOptions::default(),
        )
        .unwrap();
        assert!(out.iterations <= 2);
        assert!((out.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bfgs_backs_off_infeasible_region() {
        // log barrier: -inf for x <= 0, maximum at x = 1
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            if x[0] <= 0.0 {
                return Ok((f64::NEG_INFINITY, vec![0.0]));
            }
            Ok((x[0].ln() - x[0], vec![1.0 / x[0] - 1.0]))
        };
        let out = maximize_bfgs(f, &[4.0], Some(DMatrix::from_element(1, 1, 50.0)), &OptimOptions::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-7);
        assert!(out.nonfinite_trials > 0);
    }

    #[test]
    fn unbounded_objective_does_not_converge() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((x[0], vec![1.0])) };
        let err = maximize_bfgs(f, &[0.0], None, &OptimOptions { max_iter: 20, ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
