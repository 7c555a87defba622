//! Dense solve of the energy block.

use nalgebra::{DMatrix, DVector};

use crate::config::OracleConfig;
use crate::error::{OracleError, Result};
use crate::Point;

/// ```text
/// min  sum_k (w_k / 2) |z_k - c_k|^2
/// s.t. sum_k |z_{k+1} - z_k|^2 <= budget,  z_0 = start, z_{n-1} = end
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProblem {
    pub weights: Vec<f64>,
    pub target_x: Vec<f64>,
    pub target_y: Vec<f64>,
    pub start: Point,
    pub end: Point,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyOptimum {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Multiplier of the budget constraint.
    pub multiplier: f64,
    pub cost: f64,
    pub energy: f64,
}

impl EnergyProblem {
    pub fn len(&self) -> usize {
        self.target_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_x.is_empty()
    }

    pub fn cost(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.len();
        (1..n.saturating_sub(1))
            .map(|k| 0.5 * self.weights[k] * ((x[k] - self.target_x[k]).powi(2) + (y[k] - self.target_y[k]).powi(2)))
            .sum()
    }

    pub fn energy(x: &[f64], y: &[f64]) -> f64 {
        (1..x.len()).map(|k| (x[k] - x[k - 1]).powi(2) + (y[k] - y[k - 1]).powi(2)).sum()
    }

    /// Minimizer of `cost + phi * energy` with the ends fixed, by a dense LU solve.
    fn stationary(&self, phi: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        x[0] = self.start.0;
        y[0] = self.start.1;
        x[n - 1] = self.end.0;
        y[n - 1] = self.end.1;
        if n <= 2 {
            return Some((x, y));
        }
        let m = n - 2;
        // gradient of cost + phi energy in z_k: w_k (z_k - c_k) + 2 phi (2 z_k - z_{k-1} - z_{k+1})
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = self.weights[i + 1] + 4.0 * phi;
            if i > 0 {
                a[(i, i - 1)] = -2.0 * phi;
            }
            if i + 1 < m {
                a[(i, i + 1)] = -2.0 * phi;
            }
        }
        let lu = a.lu();
        for (out, target, first, last) in [
            (&mut x, &self.target_x, self.start.0, self.end.0),
            (&mut y, &self.target_y, self.start.1, self.end.1),
        ] {
            let mut rhs = DVector::from_fn(m, |i, _| self.weights[i + 1] * target[i + 1]);
            rhs[0] += 2.0 * phi * first;
            rhs[m - 1] += 2.0 * phi * last;
            let z = lu.solve(&rhs)?;
            out[1..n - 1].copy_from_slice(z.as_slice());
        }
        Some((x, y))
    }
}

/// Solves the energy block by bisection on the budget multiplier, with each
/// inner problem solved as a dense linear system.
pub fn dense_energy_oracle(p: &EnergyProblem, cfg: &OracleConfig) -> Result<EnergyOptimum> {
    let n = p.len();
    if n < 2 {
        return Err(OracleError::InfeasibleStart("need at least two points".into()));
    }
    let line = (p.end.0 - p.start.0).powi(2) + (p.end.1 - p.start.1).powi(2);
    if line / (n - 1) as f64 > p.budget {
        return Err(OracleError::InfeasibleStart("budget below the straight line".into()));
    }
    let solve = |phi: f64| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let (x, y) = p.stationary(phi).ok_or_else(|| OracleError::NonConvergence {
            what: "dense energy solve",
            detail: format!("singular system at phi = {phi}"),
        })?;
        let e = EnergyProblem::energy(&x, &y);
        Ok((x, y, e))
    };
    let done = |x: Vec<f64>, y: Vec<f64>, phi: f64, energy: f64| EnergyOptimum {
        cost: p.cost(&x, &y),
        x,
        y,
        multiplier: phi,
        energy,
    };

    let (x, y, e) = solve(0.0)?;
    if e <= p.budget {
        return Ok(done(x, y, 0.0, e));
    }
    let mut lo = 0.0;
    let mut hi = p.weights.iter().copied().fold(0.0, f64::max).max(1e-300);
    let mut grown = 0;
    while solve(hi)?.2 > p.budget {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 3000 {
            return Err(OracleError::NonConvergence {
                what: "dense energy bracket",
                detail: "multiplier grew without meeting the budget".into(),
            });
        }
    }
    for _ in 0..cfg.refine_iters.max(200) {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if solve(mid)?.2 <= p.budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (x, y, e) = solve(hi)?;
    Ok(done(x, y, hi, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loose_budget_returns_targets() {
        let p = EnergyProblem {
            weights: vec![1.0; 4],
            target_x: vec![0.0, 1.0, 2.0, 3.0],
            target_y: vec![0.0, 0.5, 0.5, 0.0],
            start: (0.0, 0.0),
            end: (3.0, 0.0),
            budget: 100.0,
        };
        let o = dense_energy_oracle(&p, &OracleConfig::default()).unwrap();
        assert_eq!(o.multiplier, 0.0);
        assert!((o.y[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tight_budget_is_met_with_equality() {
        let p = EnergyProblem {
            weights: vec![1.0; 5],
            target_x: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            target_y: vec![0.0, 3.0, 3.0, 3.0, 0.0],
            start: (0.0, 0.0),
            end: (4.0, 0.0),
            budget: 6.0,
        };
        let o = dense_energy_oracle(&p, &OracleConfig::default()).unwrap();
        assert!(o.multiplier > 0.0);
        assert!((o.energy - 6.0).abs() < 1e-10 && o.energy <= 6.0, "{}", o.energy);
    }
}
