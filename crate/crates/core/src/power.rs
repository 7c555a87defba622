//! Power allocation for a fixed trajectory.
//!
//! Each slot's rate is written in the information/jamming split `(a, b)` as a
//! difference of concave functions. The concave-convex procedure linearizes
//! the subtracted term at the previous split, the total-power constraint is
//! dualized, and every slot is then solved in closed form by enumerating the
//! stationary and boundary candidates of a two-variable concave problem. The
//! multiplier is located by bisection on the total-power subgradient.
//!
//! All powers are in watts and rates in nats. Distances enter through the
//! noise-equivalent powers `sigma^2 d^2 / gamma0`.

use crate::error::{Error, Result};
use crate::model::{compute_distances, SplitPower, Trajectory};
use crate::scenario::Scenario;

/// Squared UAV-Bob and UAV-Eve distances of one slot, held fixed during a power step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotGeometry {
    pub dist_bob_sq: f64,
    pub dist_eve_sq: f64,
}

/// Linearization point `(a_f, b_f)` of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurrogatePoint {
    pub a: f64,
    pub b: f64,
}

/// How the information/jamming split is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SplitMode {
    /// Jointly optimize `a` and `b`.
    #[default]
    Free,
    /// Keep `rho` fixed and optimize the slot power `p` only.
    Fixed(f64),
}

/// The concave surrogate of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSurrogate {
    noise_bob: f64,
    noise_eve: f64,
    point: SurrogatePoint,
    /// `a_f + b_f + noise_eve`: the argument of the linearized log.
    anchor: f64,
}

/// Candidates closer than this (relative to the peak power) to a case
/// boundary are admitted and snapped onto the feasible set.
const ADMIT_TOL: f64 = 1e-12;

impl SlotSurrogate {
    pub fn new(slot: SlotGeometry, point: SurrogatePoint, ref_snr: f64) -> Self {
        let noise_bob = slot.dist_bob_sq / ref_snr;
        let noise_eve = slot.dist_eve_sq / ref_snr;
        SlotSurrogate {
            noise_bob,
            noise_eve,
            point,
            anchor: point.a + point.b + noise_eve,
        }
    }

    pub fn point(&self) -> SurrogatePoint {
        self.point
    }

    /// Noise-equivalent powers `(sigma^2 dI^2 / gamma0, sigma^2 dE^2 / gamma0)`.
    pub fn noise_floors(&self) -> (f64, f64) {
        (self.noise_bob, self.noise_eve)
    }

    /// Exact slot rate `g(a, b)`.
    pub fn true_value(&self, a: f64, b: f64) -> f64 {
        (a / self.noise_bob).ln_1p() + (b + self.noise_eve).ln() - (a + b + self.noise_eve).ln()
    }

    /// Surrogate `g_hat(a, b; a_f, b_f)`, a global minorant of `g` that is tight at the point.
    pub fn value(&self, a: f64, b: f64) -> f64 {
        let f = self.point;
        (a / self.noise_bob).ln_1p() - self.anchor.ln() + (b + self.noise_eve).ln()
            - (a - f.a + b - f.b) / self.anchor
    }

    /// `g_hat(a, b) - lambda (a + b)`.
    pub fn objective(&self, a: f64, b: f64, lambda: f64) -> f64 {
        self.value(a, b) - lambda * (a + b)
    }

    /// `C_b = lambda + 1 / anchor`: the marginal cost of power in the dual.
    fn marginal_cost(&self, lambda: f64) -> f64 {
        lambda + 1.0 / self.anchor
    }

    /// Unconstrained maximizer over `b` for any fixed `a`.
    pub fn stationary_b(&self, lambda: f64) -> f64 {
        1.0 / self.marginal_cost(lambda) - self.noise_eve
    }

    /// Maximizer over `b in [0, peak - a]` for fixed `a`.
    pub fn inner_b(&self, a: f64, lambda: f64, peak: f64) -> f64 {
        let bs = self.stationary_b(lambda);
        let hi = (peak - a).max(0.0);
        if bs <= 0.0 {
            0.0
        } else if bs < hi {
            bs
        } else {
            hi
        }
    }

    /// Global maximizer of `g_hat - lambda (a + b)` over
    /// `{a, b >= 0, a + b <= peak}`.
    ///
    /// Candidates: the interior stationary `a` paired with `b_bar(a)` (both the
    /// stationary and the zero `b` branch), `a = 0` with `b_bar(0)`, the
    /// stationary point along `a + b = peak`, and the vertices of the triangle.
    /// Ties go to the smaller `a`, then the smaller `b`.
    pub fn solve(&self, lambda: f64, peak: f64) -> (f64, f64) {
        let cost = self.marginal_cost(lambda);
        let a_stat = 1.0 / cost - self.noise_bob;
        let b_stat = 1.0 / cost - self.noise_eve;
        let edge_a = 0.5 * (self.noise_eve - self.noise_bob + peak);

        let candidates = [
            (a_stat, b_stat.max(0.0)),
            (a_stat, 0.0),
            (0.0, self.inner_b(0.0, lambda, peak)),
            (edge_a, peak - edge_a),
            (0.0, 0.0),
            (peak, 0.0),
            (0.0, peak),
        ];

        let eps = ADMIT_TOL * peak.max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, f64, f64)> = None;
        for (a, b) in candidates {
            let Some((a, b)) = admit(a, b, peak, eps) else {
                continue;
            };
            let v = self.objective(a, b, lambda);
            if !v.is_finite() {
                continue;
            }
            best = match best {
                None => Some((a, b, v)),
                Some((ba, bb, bv)) => {
                    let tie = 1e-14 * bv.abs().max(1.0);
                    if v > bv + tie || ((v - bv).abs() <= tie && (a, b) < (ba, bb)) {
                        Some((a, b, v))
                    } else {
                        Some((ba, bb, bv))
                    }
                }
            };
        }
        // (0, 0) is always admissible
        let (a, b, _) = best.expect("slot candidate set is never empty");
        (a, b)
    }

    /// Maximizer of `g_hat(rho p, (1 - rho) p) - lambda p` over `p in [0, peak]`.
    ///
    /// The derivative is strictly decreasing in `p`; its zero solves a
    /// quadratic, and the answer is the best of that root and the two ends.
    pub fn solve_fixed_split(&self, lambda: f64, peak: f64, rho: f64) -> f64 {
        let cost = self.marginal_cost(lambda);
        let (ni, ne) = (self.noise_bob, self.noise_eve);
        let sr = rho * (1.0 - rho);
        let qa = cost * sr;
        let qb = cost * (rho * ne + (1.0 - rho) * ni) - 2.0 * sr;
        let qc = cost * ni * ne - rho * ne - (1.0 - rho) * ni;

        let f = |p: f64| self.objective(rho * p, (1.0 - rho) * p, lambda);
        let mut best = (0.0, f(0.0));
        let eps = ADMIT_TOL * peak.max(f64::MIN_POSITIVE);
        for p in quadratic_roots(qa, qb, qc).into_iter().chain([peak]) {
            if !(p >= -eps && p <= peak + eps) {
                continue;
            }
            let p = p.clamp(0.0, peak);
            let v = f(p);
            if v.is_finite() && v > best.1 + 1e-14 * best.1.abs().max(1.0) {
                best = (p, v);
            }
        }
        best.0
    }

    /// Solves the slot for the given split mode, returning `(a, b)`.
    pub fn solve_mode(&self, lambda: f64, peak: f64, mode: SplitMode) -> (f64, f64) {
        match mode {
            SplitMode::Free => self.solve(lambda, peak),
            SplitMode::Fixed(rho) => {
                let p = self.solve_fixed_split(lambda, peak, rho);
                (rho * p, (1.0 - rho) * p)
            }
        }
    }
}

fn admit(a: f64, b: f64, peak: f64, eps: f64) -> Option<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) || a < -eps || b < -eps || a + b > peak + eps {
        return None;
    }
    let a = a.clamp(0.0, peak);
    let mut b = b.clamp(0.0, peak - a);
    // `a + (peak - a)` can round one ulp above `peak`
    while b > 0.0 && a + b > peak {
        b = b.next_down();
    }
    Some((a, b))
}

/// Real roots of `qa x^2 + qb x + qc = 0`, tolerating a vanishing leading coefficient.
fn quadratic_roots(qa: f64, qb: f64, qc: f64) -> Vec<f64> {
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if qa.abs() <= 1e-14 * scale {
        return if qb != 0.0 { vec![-qc / qb] } else { Vec::new() };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / qa, qc / q]
}

/// Result of evaluating the dual function at one multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub lambda: f64,
    /// `d(lambda) = max L(a, b, lambda)`.
    pub value: f64,
    pub split: SplitPower,
    /// `sum (a + b)` at the maximizer.
    pub total: f64,
}

/// Tolerances of the multiplier search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    /// Stop when `P - sum(a + b) <= power_tol * P`.
    pub power_tol: f64,
    /// Stop when the bracket width is below `width_tol * lambda_r`.
    pub width_tol: f64,
    /// First upper multiplier tried, nats per watt.
    pub initial_upper: f64,
    pub max_doublings: usize,
    pub max_bisections: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            power_tol: 1e-6,
            width_tol: 1e-12,
            initial_upper: 1.0,
            max_doublings: 200,
            max_bisections: 500,
        }
    }
}

/// The convex per-step power problem: all slot surrogates plus the budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProblem {
    pub slots: Vec<SlotSurrogate>,
    pub peak: f64,
    pub total_power: f64,
    pub mode: SplitMode,
}

/// Output of one power step.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerStep {
    pub split: SplitPower,
    /// Final multiplier of the total-power constraint.
    pub lambda: f64,
    /// Dual evaluations performed.
    pub evaluations: usize,
    /// Surrogate objective `sum g_hat` at the returned split.
    pub surrogate: f64,
    /// True when the linearization point was kept because the search could
    /// not improve on it.
    pub kept_point: bool,
}

impl PowerProblem {
    /// Builds the surrogate problem for `traj`, linearized at `point`.
    pub fn new(traj: &Trajectory, point: &SplitPower, scen: &Scenario, mode: SplitMode) -> Result<Self> {
        let (db, de) = compute_distances(traj, scen)?;
        if point.a.len() != scen.slots || point.b.len() != scen.slots {
            return Err(Error::Dimension {
                what: "surrogate point",
                expected: scen.slots,
                got: point.a.len().min(point.b.len()),
            });
        }
        let g = scen.ref_snr();
        let slots = (0..scen.slots)
            .map(|k| {
                SlotSurrogate::new(
                    SlotGeometry {
                        dist_bob_sq: db[k],
                        dist_eve_sq: de[k],
                    },
                    SurrogatePoint {
                        a: point.a[k],
                        b: point.b[k],
                    },
                    g,
                )
            })
            .collect();
        Ok(PowerProblem {
            slots,
            peak: scen.peak_power,
            total_power: scen.total_power(),
            mode,
        })
    }

    /// Solves every slot at `lambda` and evaluates the dual function.
    pub fn eval_dual(&self, lambda: f64) -> DualEval {
        let n = self.slots.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut value = lambda * self.total_power;
        for s in &self.slots {
            let (ai, bi) = s.solve_mode(lambda, self.peak, self.mode);
            value += s.objective(ai, bi, lambda);
            a.push(ai);
            b.push(bi);
        }
        let split = SplitPower { a, b };
        let total = split.total();
        DualEval {
            lambda,
            value,
            split,
            total,
        }
    }

    /// `sum g_hat(a, b)` over all slots.
    pub fn surrogate_value(&self, split: &SplitPower) -> f64 {
        self.slots
            .iter()
            .zip(split.a.iter().zip(&split.b))
            .map(|(s, (&a, &b))| s.value(a, b))
            .sum()
    }

    fn point_is_feasible(&self) -> bool {
        let mut total = 0.0;
        for s in &self.slots {
            let f = s.point;
            if f.a < 0.0 || f.b < 0.0 || f.a + f.b > self.peak * (1.0 + 1e-12) {
                return false;
            }
            if let SplitMode::Fixed(rho) = self.mode {
                let p = f.a + f.b;
                if (f.a - rho * p).abs() > 1e-12 * p.max(f64::MIN_POSITIVE) {
                    return false;
                }
            }
            total += f.a + f.b;
        }
        total <= self.total_power * (1.0 + 1e-12)
    }

    /// Maximizes the surrogate subject to per-slot and total-power budgets.
    ///
    /// Tries `lambda = 0` first; otherwise doubles an upper multiplier until
    /// the total power fits and bisects on the sign of the subgradient
    /// `P - sum(a + b)`. The returned split is always from the feasible side of
    /// the bracket. If the result does not improve the surrogate over the
    /// linearization point, the point itself is returned.
    pub fn solve(&self, cfg: &PowerConfig) -> Result<PowerStep> {
        let budget = self.total_power;
        let mut evaluations = 1;
        let zero = self.eval_dual(0.0);
        let best = if zero.total <= budget {
            zero
        } else {
            let mut lo = 0.0;
            let mut hi = cfg.initial_upper;
            let mut upper = self.eval_dual(hi);
            evaluations += 1;
            let mut doublings = 0;
            while upper.total > budget {
                if doublings == cfg.max_doublings {
                    return Err(Error::convergence(
                        "power multiplier bracket",
                        format!(
                            "total power {:.6e} W still above budget {:.6e} W at lambda {:.3e}",
                            upper.total, budget, hi
                        ),
                    ));
                }
                lo = hi;
                hi *= 2.0;
                upper = self.eval_dual(hi);
                evaluations += 1;
                doublings += 1;
            }
            let mut bisections = 0;
            while budget - upper.total > cfg.power_tol * budget
                && hi - lo > cfg.width_tol * hi
                && bisections < cfg.max_bisections
            {
                let mid = 0.5 * (lo + hi);
                let at = self.eval_dual(mid);
                evaluations += 1;
                bisections += 1;
                if at.total <= budget {
                    hi = mid;
                    upper = at;
                } else {
                    lo = mid;
                }
            }
            upper
        };

        let surrogate = self.surrogate_value(&best.split);
        if self.point_is_feasible() {
            let at_point = SplitPower {
                a: self.slots.iter().map(|s| s.point.a).collect(),
                b: self.slots.iter().map(|s| s.point.b).collect(),
            };
            let point_value = self.surrogate_value(&at_point);
            if surrogate < point_value {
                return Ok(PowerStep {
                    split: at_point,
                    lambda: best.lambda,
                    evaluations,
                    surrogate: point_value,
                    kept_point: true,
                });
            }
        }
        Ok(PowerStep {
            split: best.split,
            lambda: best.lambda,
            evaluations,
            surrogate,
            kept_point: false,
        })
    }
}

/// Surrogate value of one slot; errors when a logarithm argument is not positive.
pub fn surrogate_value(a: f64, b: f64, slot: SlotGeometry, point: SurrogatePoint, ref_snr: f64) -> Result<f64> {
    let v = SlotSurrogate::new(slot, point, ref_snr).value(a, b);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("power surrogate"))
    }
}

/// One concave-convex power step for a fixed trajectory, linearized at `point`.
pub fn power_step(
    traj: &Trajectory,
    point: &SplitPower,
    scen: &Scenario,
    mode: SplitMode,
    cfg: &PowerConfig,
) -> Result<PowerStep> {
    PowerProblem::new(traj, point, scen, mode)?.solve(cfg)
}
