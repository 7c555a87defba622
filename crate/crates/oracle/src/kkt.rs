//! KKT residuals of candidate solutions, with finite-difference gradients.
//!
//! Every problem is put in the form `min f(x) s.t. g_j(x) <= 0` and the
//! residual is the largest of
//! - stationarity `|d/dx_i (f + sum mu_j g_j)|`, relative per coordinate to
//!   the size of the terms that cancel in it,
//! - primal violation `max(g_j, 0)`, relative to the constraint's scale,
//! - dual violation and complementarity `mu_j |g_j|`, both normalized.

use nalgebra::{DMatrix, DVector};

use crate::energy::EnergyProblem;
use crate::qcqp::{DistanceCandidate, DistanceProblem, PairCandidate, PairProblem};
use crate::slot::SlotInstance;

pub trait KktCheck {
    type Candidate;
    fn kkt_residual(&self, candidate: &Self::Candidate) -> f64;
}

pub fn kkt_residual<P: KktCheck>(problem: &P, candidate: &P::Candidate) -> f64 {
    problem.kkt_residual(candidate)
}

struct Constraint<'a> {
    g: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    mu: f64,
    scale: f64,
}

/// Five-point central differences.
fn fd_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64], steps: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = steps[i];
            let mut at = |s: f64| {
                p[i] = x[i] + s * h;
                let v = f(&p);
                p[i] = x[i];
                v
            };
            (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
        })
        .collect()
}

fn residual(x: &[f64], steps: &[f64], floors: &[f64], cost: &dyn Fn(&[f64]) -> f64, cons: &[Constraint]) -> f64 {
    let gf = fd_grad(cost, x, steps);
    let mut gl = gf.clone();
    let mut scale: Vec<f64> = gf.iter().zip(floors).map(|(g, f)| g.abs().max(*f)).collect();
    let mut gnorm = Vec::with_capacity(cons.len());
    for c in cons {
        let gg = fd_grad(&*c.g, x, steps);
        for i in 0..x.len() {
            gl[i] += c.mu * gg[i];
            scale[i] = scale[i].max((c.mu * gg[i]).abs());
        }
        // multiplier size relative to the gradient scale it acts against
        gnorm.push((0..x.len()).map(|i| gg[i].abs() / scale[i].max(f64::MIN_POSITIVE)).fold(0.0, f64::max));
    }
    let mut worst = (0..x.len())
        .map(|i| gl[i].abs() / scale[i].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    for (c, gn) in cons.iter().zip(gnorm) {
        let gv = (c.g)(x);
        let mu_n = c.mu.abs() * gn;
        let primal = gv.max(0.0) / c.scale;
        let dual = if c.mu < 0.0 { mu_n } else { 0.0 };
        let compl = mu_n * gv.abs() / c.scale;
        worst = worst.max(primal).max(dual).max(compl);
    }
    worst
}

impl KktCheck for PairProblem {
    type Candidate = PairCandidate;

    fn kkt_residual(&self, c: &PairCandidate) -> f64 {
        let p = *self;
        let w = p.w_head.max(p.w_tail);
        let r2 = p.r * p.r;
        let unpack = move |v: &[f64]| -> ((f64, f64), (f64, f64)) {
            match (p.head_pin, p.tail_pin) {
                (Some(h), Some(t)) => (h, t),
                (Some(h), None) => (h, (v[0], v[1])),
                (None, Some(t)) => ((v[0], v[1]), t),
                (None, None) => ((v[0], v[1]), (v[2], v[3])),
            }
        };
        let x: Vec<f64> = match (p.head_pin, p.tail_pin) {
            (Some(_), Some(_)) => vec![],
            (Some(_), None) => vec![c.tail.0, c.tail.1],
            (None, Some(_)) => vec![c.head.0, c.head.1],
            (None, None) => vec![c.head.0, c.head.1, c.tail.0, c.tail.1],
        };
        let cost = move |v: &[f64]| {
            let (h, t) = unpack(v);
            p.cost(h, t)
        };
        let gap = move |v: &[f64]| {
            let (h, t) = unpack(v);
            (h.0 - t.0).powi(2) + (h.1 - t.1).powi(2) - r2
        };
        let steps: Vec<f64> = x.iter().map(|v| 1e-4 * (p.r + v.abs())).collect();
        let floors = vec![w * p.r; x.len()];
        let cons = [Constraint {
            g: Box::new(gap),
            mu: c.multiplier,
            scale: r2,
        }];
        residual(&x, &steps, &floors, &cost, &cons)
    }
}

impl KktCheck for DistanceProblem {
    type Candidate = DistanceCandidate;

    fn kkt_residual(&self, c: &DistanceCandidate) -> f64 {
        let p = *self;
        let t_step = 1e-4 * (p.jam_offset + c.t).abs();
        let t_scale = c.t.abs().max(p.tangent(c.x, c.y).abs()).max(1.0);
        match p.pin {
            Some((px, py)) => {
                let cost = move |v: &[f64]| -p.value(px, py, v[0]);
                let cap = move |v: &[f64]| v[0] - p.tangent(px, py);
                let cons = [Constraint {
                    g: Box::new(cap),
                    mu: c.multiplier,
                    scale: t_scale,
                }];
                residual(&[c.t], &[t_step], &[p.eve_slope], &cost, &cons)
            }
            None => {
                let cost = move |v: &[f64]| -p.value(v[0], v[1], v[2]);
                let cap = move |v: &[f64]| v[2] - p.tangent(v[0], v[1]);
                let floor = |z: f64, target: f64| {
                    2.0 * p.bob_weight * z.abs() + p.delta * (z - target).abs() + 1e-12 * (2.0 * p.bob_weight + p.delta)
                };
                // the objective is quadratic in z, so wide steps carry no truncation error
                let hz = 1e-2 * (1.0 + c.x.hypot(c.y));
                let steps = [hz, hz, t_step];
                let floors = [floor(c.x, p.target.0), floor(c.y, p.target.1), p.eve_slope];
                let cons = [Constraint {
                    g: Box::new(cap),
                    mu: c.multiplier,
                    scale: t_scale,
                }];
                residual(&[c.x, c.y, c.t], &steps, &floors, &cost, &cons)
            }
        }
    }
}

/// A candidate for the energy block: the full path (ends included) and the
/// budget multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCandidate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub multiplier: f64,
}

impl KktCheck for EnergyProblem {
    type Candidate = EnergyCandidate;

    fn kkt_residual(&self, c: &EnergyCandidate) -> f64 {
        let n = self.len();
        if n <= 2 {
            return 0.0;
        }
        let m = n - 2;
        let (start, end) = (self.start, self.end);
        let full = move |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            x.push(start.0);
            y.push(start.1);
            for k in 0..m {
                x.push(v[2 * k]);
                y.push(v[2 * k + 1]);
            }
            x.push(end.0);
            y.push(end.1);
            (x, y)
        };
        let mut v = Vec::with_capacity(2 * m);
        for k in 1..n - 1 {
            v.push(c.x[k]);
            v.push(c.y[k]);
        }
        let cost = |v: &[f64]| {
            let (x, y) = full(v);
            self.cost(&x, &y)
        };
        let budget = self.budget;
        let energy = move |v: &[f64]| {
            let (x, y) = full(v);
            EnergyProblem::energy(&x, &y) - budget
        };
        let step_len = (budget / (n - 1) as f64).sqrt();
        let steps: Vec<f64> = v.iter().map(|z| 1e-4 * (step_len + z.abs())).collect();
        let floors: Vec<f64> = (0..2 * m).map(|i| self.weights[i / 2 + 1] * step_len).collect();
        let cons = [Constraint {
            g: Box::new(energy),
            mu: c.multiplier,
            scale: budget,
        }];
        residual(&v, &steps, &floors, &cost, &cons)
    }
}

/// The per-slot power problem `max surrogate(a, b) - lambda (a + b)` over
/// `{a, b >= 0, a + b <= peak}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProblem {
    pub slot: SlotInstance,
    pub lambda: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotCandidate {
    pub a: f64,
    pub b: f64,
}

impl KktCheck for SlotProblem {
    type Candidate = SlotCandidate;

    /// The solver reports no multipliers, so the best nonnegative ones for
    /// the active constraints are fitted first.
    fn kkt_residual(&self, c: &SlotCandidate) -> f64 {
        let p = *self;
        let cost = move |v: &[f64]| -p.slot.lagrangian(v[0], v[1], p.lambda);
        let x = [c.a, c.b];
        let s = p.slot;
        let steps = [1e-3 * (c.a.abs() + s.noise_bob), 1e-3 * (c.b.abs() + s.noise_eve)];
        let anchor = 1.0 / (s.a_f + s.b_f + s.noise_eve);
        let floors = [
            (1.0 / (c.a + s.noise_bob)).max(anchor).max(p.lambda.abs()),
            (1.0 / (c.b + s.noise_eve)).max(anchor).max(p.lambda.abs()),
        ];
        let peak = p.peak;
        let grads = [[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]];
        let values = [-c.a, -c.b, c.a + c.b - peak];
        let scale = peak.max(f64::MIN_POSITIVE);
        let active: Vec<usize> = (0..3).filter(|&j| values[j].abs() <= 1e-9 * scale).collect();

        let gf = fd_grad(&cost, &x, &steps);
        let mut mu = [0.0; 3];
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << active.len()) {
            let set: Vec<usize> = (0..active.len()).filter(|i| mask & (1 << i) != 0).map(|i| active[i]).collect();
            let mut cand = [0.0; 3];
            if !set.is_empty() {
                // least squares for -grad f = sum mu_j grad g_j, rows scaled per coordinate
                let a = DMatrix::from_fn(2, set.len(), |i, k| grads[set[k]][i] / floors[i]);
                let b = DVector::from_fn(2, |i, _| -gf[i] / floors[i]);
                let Ok(sol) = a.clone().svd(true, true).solve(&b, 1e-14) else {
                    continue;
                };
                if sol.iter().any(|&m| m < 0.0) {
                    continue;
                }
                for (k, &j) in set.iter().enumerate() {
                    cand[j] = sol[k];
                }
            }
            let res: f64 = (0..2)
                .map(|i| ((gf[i] + (0..3).map(|j| cand[j] * grads[j][i]).sum::<f64>()) / floors[i]).abs())
                .fold(0.0, f64::max);
            if res < best {
                best = res;
                mu = cand;
            }
        }

        let cons: Vec<Constraint> = (0..3)
            .map(|j| {
                let gr = grads[j];
                let off = if j == 2 { -peak } else { 0.0 };
                Constraint {
                    g: Box::new(move |v: &[f64]| gr[0] * v[0] + gr[1] * v[1] + off),
                    mu: mu[j],
                    scale,
                }
            })
            .collect();
        residual(&x, &steps, &floors, &cost, &cons)
    }
}
