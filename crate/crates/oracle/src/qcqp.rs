//! Projected-gradient solves of the two small trajectory blocks.

use crate::config::OracleConfig;
use crate::error::Result;
use crate::pg::projected_gradient;
use crate::Point;

/// ```text
/// min  (w_head / 2) |head - m|^2 + (w_tail / 2) |tail - d|^2
/// s.t. |head - tail|^2 <= r^2
/// ```
/// with either end optionally pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProblem {
    pub m: Point,
    pub d: Point,
    pub r: f64,
    pub w_head: f64,
    pub w_tail: f64,
    pub head_pin: Option<Point>,
    pub tail_pin: Option<Point>,
}

/// A pair candidate with the multiplier of `|head - tail|^2 <= r^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCandidate {
    pub head: Point,
    pub tail: Point,
    pub multiplier: f64,
}

impl PairProblem {
    pub fn cost(&self, head: Point, tail: Point) -> f64 {
        let sq = |p: Point, q: Point| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
        let h = if self.head_pin.is_some() { 0.0 } else { 0.5 * self.w_head * sq(head, self.m) };
        let t = if self.tail_pin.is_some() { 0.0 } else { 0.5 * self.w_tail * sq(tail, self.d) };
        h + t
    }
}

/// ```text
/// max  -a (|z|^2 + H^2) - b t + ln(q_b + t) - (delta / 2) |z - v|^2
/// s.t. t <= -x_f^2 + 2 (x_f - L) x + L^2 - y_f^2 + 2 y_f y + H^2
/// ```
/// over `(z, t)`, or over `t` alone when `z` is pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceProblem {
    pub bob_weight: f64,
    pub eve_slope: f64,
    pub jam_offset: f64,
    pub altitude: f64,
    pub eve_distance: f64,
    /// Point where the Eve distance is linearized.
    pub lin: Point,
    pub target: Point,
    pub delta: f64,
    pub pin: Option<Point>,
}

/// A distance candidate with the multiplier of the tangent-plane constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceCandidate {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub multiplier: f64,
}

impl DistanceProblem {
    /// The tangent plane of `(x - L)^2 + y^2 + H^2` at `lin`.
    pub fn tangent(&self, x: f64, y: f64) -> f64 {
        let (xf, yf) = self.lin;
        let l = self.eve_distance;
        let h = self.altitude;
        (xf - l).powi(2) + yf * yf + h * h + 2.0 * (xf - l) * (x - xf) + 2.0 * yf * (y - yf)
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        let arg = self.jam_offset + t;
        if !(arg > 0.0) {
            return f64::NEG_INFINITY;
        }
        let h2 = self.altitude * self.altitude;
        let prox = match self.pin {
            Some(_) => 0.0,
            None => 0.5 * self.delta * ((x - self.target.0).powi(2) + (y - self.target.1).powi(2)),
        };
        -self.bob_weight * (x * x + y * y + h2) - self.eve_slope * t + arg.ln() - prox
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QcqpProblem<'a> {
    Pair(&'a PairProblem),
    Distance(&'a DistanceProblem),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QcqpSolution {
    Pair { head: Point, tail: Point, cost: f64 },
    Distance { x: f64, y: f64, t: f64, value: f64 },
}

pub fn pg_qcqp_oracle(problem: QcqpProblem, cfg: &OracleConfig) -> Result<QcqpSolution> {
    match problem {
        QcqpProblem::Pair(p) => pair_oracle(p, cfg).map(|(head, tail, cost)| QcqpSolution::Pair { head, tail, cost }),
        QcqpProblem::Distance(p) => distance_oracle(p, cfg).map(|(x, y, t, value)| QcqpSolution::Distance { x, y, t, value }),
    }
}

fn ball(p: &mut [f64], c: Point, r: f64) {
    let (dx, dy) = (p[0] - c.0, p[1] - c.1);
    let d = dx.hypot(dy);
    if d > r {
        p[0] = c.0 + dx * r / d;
        p[1] = c.1 + dy * r / d;
    }
}

/// Returns `(head, tail, cost)`.
pub fn pair_oracle(p: &PairProblem, cfg: &OracleConfig) -> Result<(Point, Point, f64)> {
    match (p.head_pin, p.tail_pin) {
        (Some(h), Some(t)) => Ok((h, t, 0.0)),
        (Some(h), None) => {
            let f = |v: &[f64]| -0.5 * p.w_tail * ((v[0] - p.d.0).powi(2) + (v[1] - p.d.1).powi(2));
            let g = |v: &[f64], g: &mut [f64]| {
                g[0] = -p.w_tail * (v[0] - p.d.0);
                g[1] = -p.w_tail * (v[1] - p.d.1);
            };
            let out = projected_gradient(f, g, |v: &mut [f64]| ball(v, h, p.r), &[p.d.0, p.d.1], cfg)?;
            Ok((h, (out.x[0], out.x[1]), -out.value))
        }
        (None, Some(t)) => {
            let f = |v: &[f64]| -0.5 * p.w_head * ((v[0] - p.m.0).powi(2) + (v[1] - p.m.1).powi(2));
            let g = |v: &[f64], g: &mut [f64]| {
                g[0] = -p.w_head * (v[0] - p.m.0);
                g[1] = -p.w_head * (v[1] - p.m.1);
            };
            let out = projected_gradient(f, g, |v: &mut [f64]| ball(v, t, p.r), &[p.m.0, p.m.1], cfg)?;
            Ok(((out.x[0], out.x[1]), t, -out.value))
        }
        (None, None) => {
            let f = |v: &[f64]| -p.cost((v[0], v[1]), (v[2], v[3]));
            let g = |v: &[f64], g: &mut [f64]| {
                g[0] = -p.w_head * (v[0] - p.m.0);
                g[1] = -p.w_head * (v[1] - p.m.1);
                g[2] = -p.w_tail * (v[2] - p.d.0);
                g[3] = -p.w_tail * (v[3] - p.d.1);
            };
            // the set is a cylinder around head = tail: keep the midpoint, shrink the difference
            let project = |v: &mut [f64]| {
                let mid = (0.5 * (v[0] + v[2]), 0.5 * (v[1] + v[3]));
                let mut diff = [v[0] - v[2], v[1] - v[3]];
                ball(&mut diff, (0.0, 0.0), p.r);
                v[0] = mid.0 + 0.5 * diff[0];
                v[1] = mid.1 + 0.5 * diff[1];
                v[2] = mid.0 - 0.5 * diff[0];
                v[3] = mid.1 - 0.5 * diff[1];
            };
            let out = projected_gradient(f, g, project, &[p.m.0, p.m.1, p.d.0, p.d.1], cfg)?;
            Ok(((out.x[0], out.x[1]), (out.x[2], out.x[3]), -out.value))
        }
    }
}

/// Returns `(x, y, t, value)`. Coordinates are rescaled so that the
/// objective has unit curvature near the solution in every direction.
pub fn distance_oracle(p: &DistanceProblem, cfg: &OracleConfig) -> Result<(f64, f64, f64, f64)> {
    let free_t = 1.0 / p.eve_slope - p.jam_offset;
    if let Some((x, y)) = p.pin {
        let cap = p.tangent(x, y);
        let st = 1.0 / p.eve_slope;
        let f = |v: &[f64]| p.value(x, y, st * v[0]);
        let g = |v: &[f64], g: &mut [f64]| g[0] = st * (-p.eve_slope + 1.0 / (p.jam_offset + st * v[0]));
        let project = |v: &mut [f64]| v[0] = v[0].min(cap / st);
        let t0 = cap.min(free_t);
        let out = projected_gradient(f, g, project, &[t0 / st], cfg)?;
        let t = st * out.x[0];
        return Ok((x, y, t, p.value(x, y, t)));
    }

    let sz = 1.0 / (2.0 * p.bob_weight + p.delta).sqrt();
    let st = 1.0 / p.eve_slope;
    let (ex, ey) = (p.lin.0 - p.eve_distance, p.lin.1);
    let l0 = p.tangent(0.0, 0.0);
    // constraint in scaled coordinates: n . w <= l0
    let nrm = [-2.0 * ex * sz, -2.0 * ey * sz, st];
    let nn: f64 = nrm.iter().map(|v| v * v).sum();
    let unscale = |v: &[f64]| (sz * v[0], sz * v[1], st * v[2]);
    let f = |v: &[f64]| {
        let (x, y, t) = unscale(v);
        p.value(x, y, t)
    };
    let g = |v: &[f64], g: &mut [f64]| {
        let (x, y, t) = unscale(v);
        g[0] = sz * (-2.0 * p.bob_weight * x - p.delta * (x - p.target.0));
        g[1] = sz * (-2.0 * p.bob_weight * y - p.delta * (y - p.target.1));
        g[2] = st * (-p.eve_slope + 1.0 / (p.jam_offset + t));
    };
    let project = |v: &mut [f64]| {
        let s: f64 = (0..3).map(|i| nrm[i] * v[i]).sum();
        if s > l0 {
            let k = (s - l0) / nn;
            for i in 0..3 {
                v[i] -= k * nrm[i];
            }
        }
    };
    let t0 = p.tangent(p.lin.0, p.lin.1).min(free_t);
    let start = [p.lin.0 / sz, p.lin.1 / sz, t0 / st];
    let out = projected_gradient(f, g, project, &start, cfg)?;
    let (x, y, t) = unscale(&out.x);
    Ok((x, y, t, p.value(x, y, t)))
}
