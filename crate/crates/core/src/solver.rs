//! Damped Newton iteration on small square systems with a finite-difference
//! Jacobian. Residual evaluators return `None` at infeasible points (e.g. a
//! trial weight vector leaving the positive cone), which the line search
//! treats like an increase.

use crate::linalg::{LuFactor, Matrix};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the residual infinity norm.
    pub tolerance: f64,
    /// Base finite-difference step.
    pub fd_step: f64,
    /// Step-halving factor of the backtracking line search.
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iterations: 120, tolerance: 1e-12, fd_step: 1e-7, damping: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian; falls back to a backward step where the
/// forward point is infeasible.
pub fn fd_jacobian<F>(eval: &F, x: &[f64], r0: &[f64], step: f64) -> Option<Matrix>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    let m = r0.len();
    let mut jac = Matrix::zeros(m, n);
    let mut xt = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        xt[j] = x[j] + h;
        let (rh, used_h) = match eval(&xt) {
            Some(r) => (r, h),
            None => {
                xt[j] = x[j] - h;
                (eval(&xt)?, -h)
            }
        };
        for i in 0..m {
            jac.set(i, j, (rh[i] - r0[i]) / used_h);
        }
        xt[j] = x[j];
    }
    Some(jac)
}

/// Solve `R(x) = 0` for a square system. Returns `None` when the start is
/// infeasible or the iteration stalls above tolerance.
pub fn damped_newton<F>(eval: &F, x0: &[f64], opts: &NewtonOptions) -> Option<NewtonOutcome>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut r = eval(&x)?;
    assert_eq!(r.len(), x.len(), "damped_newton expects a square system");
    let mut rnorm = inf_norm(&r);
    for iter in 0..opts.max_iterations {
        if rnorm <= opts.tolerance {
            return Some(NewtonOutcome { x, iterations: iter, residual: rnorm });
        }
        let jac = fd_jacobian(&eval, &x, &r, opts.fd_step)?;
        let delta = match newton_step(&jac, &r) {
            Some(d) => d,
            None => return None,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..45 {
            let xt: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi + t * di).collect();
            if let Some(rt) = eval(&xt) {
                let rtn = inf_norm(&rt);
                if rtn < rnorm * (1.0 - 1e-4 * t) || rtn <= opts.tolerance {
                    x = xt;
                    r = rt;
                    rnorm = rtn;
                    accepted = true;
                    break;
                }
            }
            t *= opts.damping;
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= opts.tolerance {
        Some(NewtonOutcome { x, iterations: opts.max_iterations, residual: rnorm })
    } else {
        None
    }
}

fn newton_step(jac: &Matrix, r: &[f64]) -> Option<Vec<f64>> {
    let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
    if let Ok(lu) = LuFactor::new(jac) {
        let step = lu.solve(&neg_r);
        if step.iter().all(|v| v.is_finite()) {
            return Some(step);
        }
    }
    // Singular Jacobian: retreat to a Levenberg-style regularised step.
    let n = jac.ncols();
    let mut jtj = Matrix::zeros(n, n);
    let mut jtr = vec![0.0; n];
    let m = jac.nrows();
    let mut trace = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += jac.at(i, a) * jac.at(i, b);
            }
            jtj.set(a, b, acc);
            if a == b {
                trace += acc;
            }
        }
        let mut acc = 0.0;
        for i in 0..m {
            acc += jac.at(i, a) * neg_r[i];
        }
        jtr[a] = acc;
    }
    let mu = 1e-10 * trace.max(1e-300) / n as f64;
    for a in 0..n {
        jtj.set(a, a, jtj.at(a, a) + mu);
    }
    let lu = LuFactor::new(&jtj).ok()?;
    let step = lu.solve(&jtr);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_coupled_quadratics() {
        // x^2 + y - 3 = 0, x + y^2 - 5 = 0 near (1.2, 2.0)
        let eval = |x: &[f64]| -> Option<Vec<f64>> {
            Some(vec![x[0] * x[0] + x[1] - 3.0, x[0] + x[1] * x[1] - 5.0])
        };
        let out = damped_newton(&eval, &[1.0, 1.5], &NewtonOptions::default()).unwrap();
        assert!(out.residual <= 1e-12);
        let r = eval(&out.x).unwrap();
        assert!(inf_norm(&r) <= 1e-12);
    }

    #[test]
    fn respects_feasibility_region() {
        // Residual undefined for x <= 0; root at x = 2.
        let eval = |x: &[f64]| -> Option<Vec<f64>> {
            if x[0] <= 0.0 {
                None
            } else {
                Some(vec![x[0].ln() - std::f64::consts::LN_2])
            }
        };
        let out = damped_newton(&eval, &[0.5], &NewtonOptions::default()).unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure_from_infeasible_start() {
        let eval = |x: &[f64]| -> Option<Vec<f64>> {
            if x[0] < 0.0 {
                Some(vec![x[0] + 1.0])
            } else {
                None
            }
        };
        assert!(damped_newton(&eval, &[1.0], &NewtonOptions::default()).is_none());
    }
}
