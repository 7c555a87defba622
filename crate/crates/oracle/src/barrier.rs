//! Log-barrier interior-point method with dense Newton steps.

use nalgebra::{DMatrix, DVector};

use crate::config::OracleConfig;
use crate::error::{OracleError, Result};

/// `min f(x) s.t. g_j(x) <= 0` with convex, twice differentiable `f` and `g_j`.
pub trait ConvexProgram {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    /// Objective value, accumulating its gradient and Hessian into `g`, `h`.
    /// Returns `None` outside the domain.
    fn objective(&self, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) -> Option<f64>;
    /// Constraint value; its gradient and Hessian are written into `g`, `h`
    /// (both zeroed by the caller).
    fn constraint(&self, j: usize, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Constraint multipliers.
    pub multipliers: Vec<f64>,
    pub newton_steps: usize,
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// `t f(x) - sum ln(-g_j(x))`, or `None` when `x` is not strictly feasible.
fn barrier_eval<P: ConvexProgram>(p: &P, x: &[f64], t: f64, with_derivs: bool) -> Option<Eval> {
    let n = p.dim();
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    let f = p.objective(x, &mut grad, &mut hess)?;
    if !f.is_finite() {
        return None;
    }
    grad *= t;
    hess *= t;
    let mut value = t * f;
    let mut gj = DVector::zeros(n);
    let mut hj = DMatrix::zeros(n, n);
    for j in 0..p.num_constraints() {
        gj.fill(0.0);
        if with_derivs {
            hj.fill(0.0);
        }
        let v = p.constraint(j, x, &mut gj, &mut hj);
        if !(v < 0.0) {
            return None;
        }
        value -= (-v).ln();
        if with_derivs {
            let inv = -1.0 / v;
            grad.axpy(inv, &gj, 1.0);
            hess.ger(inv * inv, &gj, &gj, 1.0);
            hess += &hj * inv;
        }
    }
    Some(Eval { value, grad, hess })
}

fn objective_value<P: ConvexProgram>(p: &P, x: &[f64]) -> f64 {
    let n = p.dim();
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    p.objective(x, &mut g, &mut h).unwrap_or(f64::NAN)
}

/// Multipliers at a near-optimal `x`. The barrier estimates `-1 / (t g_j)`
/// lose accuracy once `g_j` is down at rounding level, so the active ones are
/// refitted to stationarity by least squares; the barrier values are kept if
/// the fit goes negative.
fn multipliers_at<P: ConvexProgram>(p: &P, x: &[f64], t: f64) -> Vec<f64> {
    let n = p.dim();
    let m = p.num_constraints();
    let mut grads = Vec::with_capacity(m);
    let mut est = Vec::with_capacity(m);
    let mut h = DMatrix::zeros(n, n);
    for j in 0..m {
        let mut g = DVector::zeros(n);
        let v = p.constraint(j, x, &mut g, &mut h);
        est.push(-1.0 / (t * v));
        grads.push(g);
    }
    let floor = 1e-6 * est.iter().copied().fold(1.0, f64::max);
    let active: Vec<usize> = (0..m).filter(|&j| est[j] > floor).collect();
    if active.is_empty() {
        return est;
    }
    let mut gf = DVector::zeros(n);
    let mut hf = DMatrix::zeros(n, n);
    if p.objective(x, &mut gf, &mut hf).is_none() {
        return est;
    }
    let a = DMatrix::from_fn(n, active.len(), |i, k| grads[active[k]][i]);
    let Ok(fit) = a.svd(true, true).solve(&(-gf), 1e-14) else {
        return est;
    };
    if fit.iter().any(|&v| v < 0.0) {
        return est;
    }
    let mut out = vec![0.0; m];
    for (k, &j) in active.iter().enumerate() {
        out[j] = fit[k];
    }
    for j in 0..m {
        if est[j] <= floor {
            out[j] = est[j];
        }
    }
    out
}

/// Solves the program from a strictly feasible `x0`.
pub fn barrier_solve<P: ConvexProgram>(p: &P, x0: &[f64], cfg: &OracleConfig) -> Result<BarrierSolution> {
    let n = p.dim();
    let m = p.num_constraints();
    let mut x = DVector::from_column_slice(x0);
    if barrier_eval(p, x.as_slice(), 1.0, false).is_none() {
        return Err(OracleError::InfeasibleStart("start is not strictly feasible".into()));
    }
    let f0 = objective_value(p, x.as_slice()).abs().max(1.0);
    let mut t = (m.max(1) as f64) / f0;
    let mut newton_steps = 0;
    loop {
        // centering
        for _ in 0..500 {
            let e = barrier_eval(p, x.as_slice(), t, true).expect("iterate stays strictly feasible");
            let mut hess = e.hess.clone();
            let rhs = -&e.grad;
            let step = loop {
                if let Some(ch) = hess.clone().cholesky() {
                    break ch.solve(&rhs);
                }
                let ridge = 1e-12 * hess.diagonal().amax().max(1e-300);
                for i in 0..n {
                    hess[(i, i)] += ridge;
                }
            };
            let decrement = -e.grad.dot(&step);
            newton_steps += 1;
            if decrement <= 1e-20 {
                break;
            }
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..100 {
                let cand = &x + &step * s;
                if let Some(c) = barrier_eval(p, cand.as_slice(), t, false) {
                    if c.value <= e.value - 0.25 * s * decrement {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let f = objective_value(p, x.as_slice());
        if m as f64 / t <= cfg.barrier_gap * f.abs().max(1.0) {
            let multipliers = multipliers_at(p, x.as_slice(), t);
            return Ok(BarrierSolution {
                x: x.as_slice().to_vec(),
                value: f,
                multipliers,
                newton_steps,
            });
        }
        t *= 10.0;
        if !t.is_finite() || newton_steps > 100_000 {
            return Err(OracleError::NonConvergence {
                what: "barrier method",
                detail: format!("gap {} after {newton_steps} Newton steps", m as f64 / t),
            });
        }
    }
}
