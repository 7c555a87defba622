//! Restores exact feasibility of an ADMM iterate.
//!
//! The consensus positions satisfy the speed and energy constraints only up
//! to the residual. The iterate is pulled toward the straight line, which is
//! feasible whenever the scenario is, until both constraints hold exactly.

use crate::error::{Error, Result};
use crate::model::Trajectory;
use crate::scenario::Scenario;

/// Largest `alpha` in `[0, 1]` with `A alpha^2 + 2 B alpha + C <= R`, given
/// that `alpha = 0` is feasible.
fn max_step(a: f64, b: f64, c: f64, r: f64) -> f64 {
    let slack = r - c;
    if a + 2.0 * b + c <= r {
        return 1.0;
    }
    if a <= 0.0 {
        return if b > 0.0 { (slack / (2.0 * b)).clamp(0.0, 1.0) } else { 1.0 };
    }
    let disc = (b * b + a * slack).max(0.0);
    ((-b + disc.sqrt()) / a).clamp(0.0, 1.0)
}

fn is_feasible(t: &Trajectory, limit: f64, budget: f64) -> bool {
    t.step_lengths().iter().all(|&s| s <= limit) && t.squared_path_length() <= budget
}

/// Returns a trajectory satisfying endpoints, speed and energy constraints
/// exactly, and whether it differs from the input.
pub fn repair(traj: &Trajectory, scen: &Scenario) -> Result<(Trajectory, bool)> {
    let n = traj.len();
    let line = Trajectory::straight_line(scen);
    let limit = scen.step_limit();
    let budget = scen.displacement_budget();
    if !is_feasible(&line, limit, budget) {
        return Err(Error::InfeasibleScenario(
            "straight line violates the speed or energy constraint".into(),
        ));
    }
    let mut out = traj.clone();
    let mut changed = false;
    if out.point(0) != scen.start || out.point(n - 1) != scen.end {
        out.x[0] = scen.start.0;
        out.y[0] = scen.start.1;
        out.x[n - 1] = scen.end.0;
        out.y[n - 1] = scen.end.1;
        changed = true;
    }
    if is_feasible(&out, limit, budget) {
        return Ok((out, changed));
    }

    let dx: Vec<f64> = (0..n).map(|k| out.x[k] - line.x[k]).collect();
    let dy: Vec<f64> = (0..n).map(|k| out.y[k] - line.y[k]).collect();
    let mut alpha = 1.0f64;
    let (mut ea, mut eb, mut ec) = (0.0, 0.0, 0.0);
    for k in 0..n - 1 {
        let (lx, ly) = (line.x[k + 1] - line.x[k], line.y[k + 1] - line.y[k]);
        let (sx, sy) = (dx[k + 1] - dx[k], dy[k + 1] - dy[k]);
        let (a, b, c) = (sx * sx + sy * sy, lx * sx + ly * sy, lx * lx + ly * ly);
        alpha = alpha.min(max_step(a, b, c, limit * limit));
        ea += a;
        eb += b;
        ec += c;
    }
    alpha = alpha.min(max_step(ea, eb, ec, budget));
    let blend = |alpha: f64| {
        let mut t = line.clone();
        for k in 1..n - 1 {
            t.x[k] += alpha * dx[k];
            t.y[k] += alpha * dy[k];
        }
        t
    };
    let mut cand = blend(alpha);
    // guard against rounding at the boundary
    let mut shrink = 0;
    while !is_feasible(&cand, limit, budget) {
        alpha *= 1.0 - 1e-12 * 2f64.powi(shrink);
        cand = blend(alpha);
        shrink += 1;
        if shrink > 60 {
            cand = line.clone();
            break;
        }
    }
    Ok((cand, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_input_is_unchanged() {
        let scen = Scenario::nominal();
        let line = Trajectory::straight_line(&scen);
        let (out, changed) = repair(&line, &scen).unwrap();
        assert!(!changed);
        assert_eq!(out, line);
    }

    #[test]
    fn detour_is_pulled_back() {
        let scen = Scenario::nominal();
        let mut t = Trajectory::straight_line(&scen);
        for k in 100..120 {
            t.y[k] += 50.0;
        }
        let (out, changed) = repair(&t, &scen).unwrap();
        assert!(changed);
        assert!(out.step_lengths().iter().all(|&s| s <= scen.step_limit()));
        assert!(out.squared_path_length() <= scen.displacement_budget());
        assert!(out.y[110] > -150.0);
    }
}
