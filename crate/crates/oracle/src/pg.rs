//! Accelerated projected gradient ascent.

use crate::config::OracleConfig;
use crate::error::{OracleError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PgOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Length of the last projected-gradient step at the returned point.
    pub step: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Maximizes a concave `f` over the convex set whose Euclidean projection is
/// `project`. Steps use a local Lipschitz estimate of the gradient found by
/// backtracking, momentum restarts on the gradient test, and the run stops
/// once a plain projected-gradient step moves the point by less than
/// `pg_tol * (1 + |x|)`. `f` may return `-inf` outside its domain; objective
/// values are only used to stay inside it, so the run is not limited by
/// rounding in `f` near the optimum.
pub fn projected_gradient(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64], &mut [f64]),
    project: impl Fn(&mut [f64]),
    x0: &[f64],
    cfg: &OracleConfig,
) -> Result<PgOutcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    if !f(&x).is_finite() {
        return Err(OracleError::InfeasibleStart("objective is not finite at the projected start".into()));
    }
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut lip = 1.0 / cfg.pg_step;
    let mut gp = vec![0.0; n];
    let mut go = vec![0.0; n];
    let mut cand = vec![0.0; n];

    // one projected step from `p`, shrinking it until the gradient is locally lip-Lipschitz
    let step_from = |p: &[f64], lip: &mut f64, gp: &mut [f64], go: &mut [f64], out: &mut [f64]| -> bool {
        grad(p, gp);
        loop {
            for i in 0..n {
                out[i] = p[i] + gp[i] / *lip;
            }
            project(out);
            if f(out).is_finite() {
                grad(out, go);
                let dg = dist(go, gp);
                let dx = dist(out, p);
                if dg <= *lip * dx * (1.0 + 1e-12) || dx == 0.0 {
                    return true;
                }
            }
            *lip *= 2.0;
            if !lip.is_finite() {
                return false;
            }
        }
    };

    for it in 1..=cfg.pg_max_iter {
        if !step_from(&y, &mut lip, &mut gp, &mut go, &mut cand) {
            break;
        }
        let moved = dist(&cand, &y);
        let tol = cfg.pg_tol * (1.0 + norm(&cand));
        if moved <= tol {
            // confirm with a plain step at the candidate
            let mut check = vec![0.0; n];
            if step_from(&cand, &mut lip, &mut gp, &mut go, &mut check) {
                let s = dist(&check, &cand);
                if s <= tol {
                    return Ok(PgOutcome {
                        value: f(&cand),
                        x: cand,
                        iterations: it,
                        step: s,
                    });
                }
            }
        }
        // restart when the step points against the momentum
        let against: f64 = (0..n).map(|i| (y[i] - cand[i]) * (cand[i] - x[i])).sum();
        let prev = std::mem::replace(&mut x, cand.clone());
        if against > 0.0 {
            theta = 1.0;
            y.copy_from_slice(&x);
        } else {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            for i in 0..n {
                y[i] = x[i] + beta * (x[i] - prev[i]);
            }
            project(&mut y);
            if f(&y).is_finite() {
                theta = theta_next;
            } else {
                y.copy_from_slice(&x);
                theta = 1.0;
            }
        }
        lip *= 0.95;
    }
    Err(OracleError::NonConvergence {
        what: "projected gradient",
        detail: format!("{} iterations, value {}", cfg.pg_max_iter, f(&x)),
    })
}
