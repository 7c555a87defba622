//! Whole-horizon surrogate problems at small sizes, solved by the barrier method.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{barrier_solve, ConvexProgram};
use crate::config::OracleConfig;
use crate::error::{OracleError, Result};
use crate::slot::SlotInstance;
use crate::Point;

/// ```text
/// max  sum_k surrogate_k(a_k, b_k)
/// s.t. a_k, b_k >= 0,  a_k + b_k <= peak,  sum_k (a_k + b_k) <= total
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSurrogateProblem {
    pub slots: Vec<SlotInstance>,
    pub peak: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptimum {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub value: f64,
    /// Multiplier of the total-power constraint.
    pub total_multiplier: f64,
}

impl PowerSurrogateProblem {
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        self.slots.iter().enumerate().map(|(k, s)| s.surrogate(a[k], b[k])).sum()
    }
}

impl ConvexProgram for PowerSurrogateProblem {
    fn dim(&self) -> usize {
        2 * self.slots.len()
    }

    fn num_constraints(&self) -> usize {
        3 * self.slots.len() + 1
    }

    fn objective(&self, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) -> Option<f64> {
        let mut v = 0.0;
        for (k, s) in self.slots.iter().enumerate() {
            let (a, b) = (x[2 * k], x[2 * k + 1]);
            let (pa, pb) = (a + s.noise_bob, b + s.noise_eve);
            if !(pa > 0.0 && pb > 0.0) {
                return None;
            }
            let inv_anchor = 1.0 / (s.a_f + s.b_f + s.noise_eve);
            v -= s.surrogate(a, b);
            g[2 * k] -= 1.0 / pa - inv_anchor;
            g[2 * k + 1] -= 1.0 / pb - inv_anchor;
            h[(2 * k, 2 * k)] += 1.0 / (pa * pa);
            h[(2 * k + 1, 2 * k + 1)] += 1.0 / (pb * pb);
        }
        Some(v)
    }

    fn constraint(&self, j: usize, x: &[f64], g: &mut DVector<f64>, _h: &mut DMatrix<f64>) -> f64 {
        let n = self.slots.len();
        if j == 3 * n {
            g.fill(1.0);
            return x.iter().sum::<f64>() - self.total;
        }
        let (k, kind) = (j / 3, j % 3);
        match kind {
            0 => {
                g[2 * k] = -1.0;
                -x[2 * k]
            }
            1 => {
                g[2 * k + 1] = -1.0;
                -x[2 * k + 1]
            }
            _ => {
                g[2 * k] = 1.0;
                g[2 * k + 1] = 1.0;
                x[2 * k] + x[2 * k + 1] - self.peak
            }
        }
    }
}

pub fn power_surrogate_oracle(p: &PowerSurrogateProblem, cfg: &OracleConfig) -> Result<PowerOptimum> {
    let n = p.slots.len();
    let level = 0.25 * p.peak.min(p.total / n.max(1) as f64);
    if !(level > 0.0) {
        return Err(OracleError::InfeasibleStart("power budget has no interior".into()));
    }
    let s = barrier_solve(p, &vec![level; 2 * n], cfg)?;
    let a: Vec<f64> = (0..n).map(|k| s.x[2 * k]).collect();
    let b: Vec<f64> = (0..n).map(|k| s.x[2 * k + 1]).collect();
    Ok(PowerOptimum {
        value: p.value(&a, &b),
        a,
        b,
        total_multiplier: s.multipliers[3 * n],
    })
}

/// Coefficients of one slot of the trajectory surrogate
/// `constant - a (|z|^2 + H^2) - b t + ln(q_b + t)`, with
/// `t <= tangent plane of dE^2 at lin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySlot {
    pub active: bool,
    pub bob_weight: f64,
    pub eve_slope: f64,
    pub jam_offset: f64,
    pub lin: Point,
    pub constant: f64,
}

/// ```text
/// max  sum_k slot_k(z_k, t_k)
/// s.t. |z_{k+1} - z_k| <= step,  sum_k |z_{k+1} - z_k|^2 <= budget,
///      z_0 = start,  z_{T-1} = end
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySurrogateProblem {
    pub slots: Vec<TrajectorySlot>,
    pub eve_distance: f64,
    pub altitude: f64,
    pub start: Point,
    pub end: Point,
    pub step: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptimum {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
}

impl TrajectorySurrogateProblem {
    fn n(&self) -> usize {
        self.slots.len()
    }

    fn tangent(&self, k: usize, x: f64, y: f64) -> f64 {
        let (xf, yf) = self.slots[k].lin;
        let l = self.eve_distance;
        (xf - l).powi(2) + yf * yf + self.altitude.powi(2) + 2.0 * (xf - l) * (x - xf) + 2.0 * yf * (y - yf)
    }

    /// Index of each active slot's `t` in the variable vector.
    fn t_index(&self) -> Vec<Option<usize>> {
        let base = 2 * (self.n() - 2);
        let mut next = base;
        self.slots
            .iter()
            .map(|s| {
                s.active.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    fn point(&self, x: &[f64], k: usize) -> Point {
        let n = self.n();
        if k == 0 {
            self.start
        } else if k == n - 1 {
            self.end
        } else {
            (x[2 * (k - 1)], x[2 * (k - 1) + 1])
        }
    }

    fn z_index(&self, k: usize) -> Option<usize> {
        (k > 0 && k < self.n() - 1).then(|| 2 * (k - 1))
    }

    /// Surrogate value of a path with `t` at its best feasible value.
    pub fn path_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let h2 = self.altitude.powi(2);
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.active)
            .map(|(k, s)| {
                let t = self.tangent(k, x[k], y[k]).min(1.0 / s.eve_slope - s.jam_offset);
                if !(s.jam_offset + t > 0.0) {
                    return f64::NEG_INFINITY;
                }
                s.constant - s.bob_weight * (x[k] * x[k] + y[k] * y[k] + h2) - s.eve_slope * t + (s.jam_offset + t).ln()
            })
            .sum()
    }

    fn num_speed(&self) -> usize {
        self.n() - 1
    }
}

impl ConvexProgram for TrajectorySurrogateProblem {
    fn dim(&self) -> usize {
        2 * (self.n() - 2) + self.slots.iter().filter(|s| s.active).count()
    }

    fn num_constraints(&self) -> usize {
        self.slots.iter().filter(|s| s.active).count() + self.num_speed() + 1
    }

    fn objective(&self, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) -> Option<f64> {
        let h2 = self.altitude.powi(2);
        let tix = self.t_index();
        let mut v = 0.0;
        for (k, s) in self.slots.iter().enumerate() {
            let Some(ti) = tix[k] else { continue };
            let (zx, zy) = self.point(x, k);
            let t = x[ti];
            let arg = s.jam_offset + t;
            if !(arg > 0.0) {
                return None;
            }
            v -= s.constant - s.bob_weight * (zx * zx + zy * zy + h2) - s.eve_slope * t + arg.ln();
            if let Some(zi) = self.z_index(k) {
                g[zi] += 2.0 * s.bob_weight * zx;
                g[zi + 1] += 2.0 * s.bob_weight * zy;
                h[(zi, zi)] += 2.0 * s.bob_weight;
                h[(zi + 1, zi + 1)] += 2.0 * s.bob_weight;
            }
            g[ti] += s.eve_slope - 1.0 / arg;
            h[(ti, ti)] += 1.0 / (arg * arg);
        }
        Some(v)
    }

    fn constraint(&self, j: usize, x: &[f64], g: &mut DVector<f64>, h: &mut DMatrix<f64>) -> f64 {
        let active: Vec<usize> = (0..self.n()).filter(|&k| self.slots[k].active).collect();
        let tix = self.t_index();
        if j < active.len() {
            let k = active[j];
            let ti = tix[k].expect("active slot has a t variable");
            let (zx, zy) = self.point(x, k);
            g[ti] = 1.0;
            if let Some(zi) = self.z_index(k) {
                let (xf, yf) = self.slots[k].lin;
                g[zi] = -2.0 * (xf - self.eve_distance);
                g[zi + 1] = -2.0 * yf;
            }
            return x[ti] - self.tangent(k, zx, zy);
        }
        let j = j - active.len();
        let step_term = |k: usize, g: &mut DVector<f64>, h: &mut DMatrix<f64>, scale: f64| -> f64 {
            let (ax, ay) = self.point(x, k);
            let (bx, by) = self.point(x, k + 1);
            let (dx, dy) = (bx - ax, by - ay);
            let ends = [(self.z_index(k), -1.0), (self.z_index(k + 1), 1.0)];
            for (zi, sign) in ends {
                if let Some(zi) = zi {
                    g[zi] += scale * sign * 2.0 * dx;
                    g[zi + 1] += scale * sign * 2.0 * dy;
                }
            }
            for (zi, si) in ends {
                for (zj, sj) in ends {
                    if let (Some(zi), Some(zj)) = (zi, zj) {
                        h[(zi, zj)] += scale * 2.0 * si * sj;
                        h[(zi + 1, zj + 1)] += scale * 2.0 * si * sj;
                    }
                }
            }
            dx * dx + dy * dy
        };
        if j < self.num_speed() {
            return step_term(j, g, h, 1.0) - self.step * self.step;
        }
        let mut e = 0.0;
        for k in 0..self.num_speed() {
            e += step_term(k, g, h, 1.0);
        }
        e - self.budget
    }
}

/// Solves the trajectory surrogate starting from `init`, which must satisfy
/// the speed and energy constraints strictly.
pub fn trajectory_surrogate_oracle(
    p: &TrajectorySurrogateProblem,
    init: (&[f64], &[f64]),
    cfg: &OracleConfig,
) -> Result<TrajectoryOptimum> {
    let n = p.n();
    if n < 3 {
        return Err(OracleError::InfeasibleStart("need at least one free point".into()));
    }
    let mut x0 = Vec::with_capacity(p.dim());
    for k in 1..n - 1 {
        x0.push(init.0[k]);
        x0.push(init.1[k]);
    }
    for (k, s) in p.slots.iter().enumerate() {
        if s.active {
            let cap = p.tangent(k, init.0[k], init.1[k]);
            // strictly below the plane and inside the log domain
            let t = cap - 1e-3 * (cap.abs() + s.jam_offset.abs()).max(1.0);
            let t = t.min(1.0 / s.eve_slope - s.jam_offset);
            if !(s.jam_offset + t > 0.0) {
                return Err(OracleError::InfeasibleStart(format!("slot {k}: tangent plane outside the log domain")));
            }
            x0.push(t);
        }
    }
    let s = barrier_solve(p, &x0, cfg)?;
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for k in 0..n {
        let pt = p.point(&s.x, k);
        x[k] = pt.0;
        y[k] = pt.1;
    }
    Ok(TrajectoryOptimum {
        value: p.path_value(&x, &y),
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_power_matches_slot_search() {
        let slot = SlotInstance {
            noise_bob: 1e-5,
            noise_eve: 3e-5,
            a_f: 1e-3,
            b_f: 1e-3,
        };
        let p = PowerSurrogateProblem {
            slots: vec![slot],
            peak: 4e-3,
            total: 1e-3,
        };
        let o = power_surrogate_oracle(&p, &OracleConfig::default()).unwrap();
        let lambda = o.total_multiplier;
        let g = crate::slot::grid_slot_oracle(
            &slot,
            lambda,
            4e-3,
            &OracleConfig {
                grid_resolution: 64,
                ..Default::default()
            },
        );
        assert!((g.a - o.a[0]).abs() < 1e-8 && (g.b - o.b[0]).abs() < 1e-8, "{o:?} {g:?}");
    }

    #[test]
    fn inactive_slots_leave_a_straight_line_unchanged() {
        let slots = vec![
            TrajectorySlot {
                active: false,
                bob_weight: 0.0,
                eve_slope: 0.0,
                jam_offset: 0.0,
                lin: (0.0, 0.0),
                constant: 0.0,
            };
            4
        ];
        let p = TrajectorySurrogateProblem {
            slots,
            eve_distance: 100.0,
            altitude: 100.0,
            start: (0.0, 0.0),
            end: (3.0, 0.0),
            step: 2.0,
            budget: 10.0,
        };
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.5, 0.5, 0.0];
        let o = trajectory_surrogate_oracle(&p, (&xs, &ys), &OracleConfig::default()).unwrap();
        assert_eq!(o.value, 0.0);
    }
}
