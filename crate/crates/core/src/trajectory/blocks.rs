//! Closed-form and one-dimensional solvers for the ADMM blocks.
//!
//! Each solver works on plain numbers so it can be checked in isolation
//! against a generic constrained optimizer.

use super::surrogate::{SlotCoeffs, SurrogateGeometry};
use crate::error::{Error, Result};

type Point = (f64, f64);

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Projects `p` onto the closed ball of radius `r` around `c`.
pub fn project_ball(p: Point, c: Point, r: f64) -> Point {
    let d = dist(p, c);
    if d <= r {
        return p;
    }
    let mut s = r / d;
    let mut out = (c.0 + (p.0 - c.0) * s, c.1 + (p.1 - c.1) * s);
    // rounding can leave the result a few ulps outside
    let mut shrink = f64::EPSILON;
    while dist(out, c) > r && shrink < 1.0 {
        s *= 1.0 - shrink;
        shrink *= 2.0;
        out = (c.0 + (p.0 - c.0) * s, c.1 + (p.1 - c.1) * s);
    }
    out
}

/// Solution of a speed-pair block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSolution {
    pub head: Point,
    pub tail: Point,
    /// Multiplier of the displacement constraint.
    pub multiplier: f64,
}

/// Solves
///
/// ```text
/// min  (w_head / 2) |head - m|^2 + (w_tail / 2) |tail - d|^2
/// s.t. |head - tail|^2 <= r^2
/// ```
///
/// With a common penalty `delta`, `m` is the mean of the three copy targets
/// of the head position, `w_head = 3 delta` and `w_tail = delta`. Either end
/// can be pinned.
pub fn speed_pair(
    m: Point,
    d: Point,
    r: f64,
    (w_head, w_tail): (f64, f64),
    head_pin: Option<Point>,
    tail_pin: Option<Point>,
) -> PairSolution {
    match (head_pin, tail_pin) {
        (Some(h), Some(t)) => PairSolution {
            head: h,
            tail: t,
            multiplier: 0.0,
        },
        (Some(h), None) => {
            let dd = dist(d, h);
            PairSolution {
                head: h,
                tail: project_ball(d, h, r),
                multiplier: if dd > r { 0.5 * w_tail * (dd / r - 1.0) } else { 0.0 },
            }
        }
        (None, Some(t)) => {
            let dm = dist(m, t);
            PairSolution {
                head: project_ball(m, t, r),
                tail: t,
                multiplier: if dm > r { 0.5 * w_head * (dm / r - 1.0) } else { 0.0 },
            }
        }
        (None, None) => {
            let gap = dist(m, d);
            if gap <= r {
                return PairSolution {
                    head: m,
                    tail: d,
                    multiplier: 0.0,
                };
            }
            let total = w_head + w_tail;
            let mu = 0.5 * w_head * w_tail * (gap / r - 1.0) / total;
            // the weighted mean is unconstrained; the gap shrinks to r along m -> d
            let c = ((w_head * m.0 + w_tail * d.0) / total, (w_head * m.1 + w_tail * d.1) / total);
            let e = ((d.0 - m.0) / gap, (d.1 - m.1) / gap);
            let (sh, st) = (w_tail * r / total, w_head * r / total);
            let head = (c.0 - sh * e.0, c.1 - sh * e.1);
            let tail = (c.0 + st * e.0, c.1 + st * e.1);
            PairSolution {
                head,
                tail: project_ball(tail, head, r),
                multiplier: mu,
            }
        }
    }
}

/// Solution of a distance block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSolution {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub t: f64,
    /// Multiplier of the tangent-plane constraint on `t`.
    pub multiplier: f64,
}

/// Solves the per-slot distance block
///
/// ```text
/// max  -a u - b t + ln(q_b + t) - (delta / 2) |z - v|^2
/// s.t. |z|^2 + H^2 <= u,  t <= l(z)
/// ```
///
/// with `z` free, or pinned to `pin`. The `u` bound is always tight.
pub fn distance_block(
    c: &SlotCoeffs,
    g: &SurrogateGeometry,
    target: Point,
    delta: f64,
    pin: Option<Point>,
    slot: usize,
) -> Result<DistanceSolution> {
    let bound = |x: f64, y: f64| g.eve_bound(c.lin_x, c.lin_y, x, y);
    let finish = |x: f64, y: f64, t: f64, multiplier: f64| -> Result<DistanceSolution> {
        if c.is_active() && !(c.jam_offset + t > 0.0) {
            return Err(Error::InfeasibleSurrogate {
                slot,
                detail: format!("tangent-plane bound {t} leaves the log domain (offset {})", c.jam_offset),
            });
        }
        Ok(DistanceSolution {
            x,
            y,
            u: g.bob_dist_sq(x, y),
            t,
            multiplier,
        })
    };

    if !c.is_active() {
        let (x, y) = pin.unwrap_or(target);
        return finish(x, y, bound(x, y), 0.0);
    }
    if let Some((x, y)) = pin {
        let l = bound(x, y);
        let free = c.free_t();
        return if free <= l {
            finish(x, y, free, 0.0)
        } else {
            finish(x, y, l, 1.0 / (l + c.jam_offset) - c.eve_slope)
        };
    }

    let den = 2.0 * c.bob_weight + delta;
    let ex = c.lin_x - g.eve_distance;
    let ey = c.lin_y;
    let z_at = |mu: f64| {
        (
            (delta * target.0 + 2.0 * mu * ex) / den,
            (delta * target.1 + 2.0 * mu * ey) / den,
        )
    };
    let (x0, y0) = z_at(0.0);
    let free = c.free_t();
    if free <= bound(x0, y0) {
        return finish(x0, y0, free, 0.0);
    }

    // l(z(mu)) = k0 + k1 mu must equal t(mu) = 1 / (b + mu) - q_b
    let k1 = 4.0 * (ex * ex + ey * ey) / den;
    let k0 = bound(x0, y0);
    let d = k0 + c.jam_offset;
    let b = c.eve_slope;
    let qa = k1;
    let qb = k1 * b + d;
    let qc = b * d - 1.0;
    let mu = if qc >= 0.0 {
        0.0
    } else if qa == 0.0 {
        if qb <= 0.0 {
            return Err(Error::InfeasibleSurrogate {
                slot,
                detail: "degenerate tangent plane with no feasible t".into(),
            });
        }
        -qc / qb
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        // qa > 0 and qc < 0 give a positive discriminant and one positive root
        let sq = disc.sqrt();
        if qb >= 0.0 {
            -2.0 * qc / (qb + sq)
        } else {
            (sq - qb) / (2.0 * qa)
        }
    };
    let (x, y) = z_at(mu);
    let t = bound(x, y).min(free);
    finish(x, y, t, mu)
}

/// Solves `(w_k + 4 phi) z_k - 2 phi (z_{k-1} + z_{k+1}) = w_k c_k` for the
/// interior points, with `z_0` and `z_{n-1}` fixed.
pub fn smooth_path(weights: &[f64], targets: &[f64], first: f64, last: f64, phi: f64, out: &mut Vec<f64>) {
    let n = targets.len();
    out.clear();
    out.resize(n, 0.0);
    out[0] = first;
    out[n - 1] = last;
    if n <= 2 {
        return;
    }
    let m = n - 2;
    let off = -2.0 * phi;
    // Thomas algorithm; the system is strictly diagonally dominant
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    for i in 0..m {
        let k = i + 1;
        let diag = weights[k] + 4.0 * phi;
        let mut rhs = weights[k] * targets[k];
        if k == 1 {
            rhs -= off * first;
        }
        if k == n - 2 {
            rhs -= off * last;
        }
        if i == 0 {
            cp[i] = off / diag;
            dp[i] = rhs / diag;
        } else {
            let den = diag - off * cp[i - 1];
            cp[i] = off / den;
            dp[i] = (rhs - off * dp[i - 1]) / den;
        }
    }
    out[m] = dp[m - 1];
    for i in (0..m - 1).rev() {
        out[i + 1] = dp[i] - cp[i] * out[i + 2];
    }
}

fn squared_steps(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| (a[1] - a[0]).powi(2) + (b[1] - b[0]).powi(2))
        .sum()
}

/// Input of the energy block.
#[derive(Debug, Clone)]
pub struct EnergyBlock<'a> {
    pub weights: &'a [f64],
    pub target_x: &'a [f64],
    pub target_y: &'a [f64],
    pub start: Point,
    pub end: Point,
    pub budget: f64,
    /// Relative slack at which the budget counts as tight.
    pub tol: f64,
}

/// Solution of the energy block.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub multiplier: f64,
    pub energy: f64,
}

/// Solves
///
/// ```text
/// min  sum_k (w_k / 2) |z_k - c_k|^2
/// s.t. sum_k |z_{k+1} - z_k|^2 <= budget,  z_0, z_{n-1} fixed
/// ```
///
/// by bisection on the multiplier. `phi_hint` seeds the bracket.
pub fn energy_block(input: &EnergyBlock, phi_hint: f64) -> Result<EnergySolution> {
    let n = input.target_x.len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let eval = |phi: f64, x: &mut Vec<f64>, y: &mut Vec<f64>| {
        smooth_path(input.weights, input.target_x, input.start.0, input.end.0, phi, x);
        smooth_path(input.weights, input.target_y, input.start.1, input.end.1, phi, y);
        squared_steps(x, y)
    };
    let budget = input.budget;
    let e0 = eval(0.0, &mut x, &mut y);
    if e0 <= budget {
        return Ok(EnergySolution {
            x,
            y,
            multiplier: 0.0,
            energy: e0,
        });
    }
    let line = (input.end.0 - input.start.0).powi(2) + (input.end.1 - input.start.1).powi(2);
    if line / (n - 1).max(1) as f64 > budget {
        return Err(Error::InfeasibleScenario(
            "energy budget is below the straight-line requirement".into(),
        ));
    }

    let scale = input.weights.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut hi = if phi_hint > 0.0 && phi_hint.is_finite() { phi_hint } else { scale };
    let mut lo = 0.0;
    let mut e_hi = eval(hi, &mut x, &mut y);
    if e_hi > budget {
        let mut grown = 0;
        while e_hi > budget {
            lo = hi;
            hi *= 2.0;
            e_hi = eval(hi, &mut x, &mut y);
            grown += 1;
            if grown > 2000 {
                return Err(Error::convergence("energy block", "multiplier bracket did not close"));
            }
        }
    } else {
        for _ in 0..60 {
            let cand = 0.5 * hi;
            if eval(cand, &mut x, &mut y) <= budget {
                hi = cand;
            } else {
                lo = cand;
                break;
            }
        }
    }
    let mut e_hi = eval(hi, &mut x, &mut y);
    for _ in 0..300 {
        if budget - e_hi <= input.tol * budget || hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let e = eval(mid, &mut x, &mut y);
        if e <= budget {
            hi = mid;
            e_hi = e;
        } else {
            lo = mid;
        }
    }
    let energy = eval(hi, &mut x, &mut y);
    Ok(EnergySolution {
        x,
        y,
        multiplier: hi,
        energy,
    })
}
