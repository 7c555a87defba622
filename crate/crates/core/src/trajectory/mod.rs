//! Trajectory step: ADMM on the concave surrogate.
//!
//! The consensus position `x` is copied four times: `xbar` carries the speed
//! constraints, `xtil` the distance bounds, `xhat` bridges to `xdd`, which
//! carries the energy constraint. Variables are split into two groups by slot
//! parity so that every block decouples into small closed-form problems.
//!
//! Duals are unscaled: `lam` for `x = xbar`, `omega` for `x = xtil`, `eta` for
//! `x = xhat` and `theta` for `xhat = xdd`.

pub mod anderson;
pub mod blocks;
pub mod repair;
pub mod surrogate;

use crate::error::{Error, Result};
use crate::model::{PowerPlan, Trajectory};
use crate::scenario::Scenario;

use anderson::Anderson;
use blocks::{distance_block, energy_block, speed_pair, EnergyBlock};
pub use repair::repair;
pub use surrogate::{build_surrogate, build_tight_surrogate, SlotCoeffs, SurrogateCoeffs, SurrogateGeometry};

/// Slot parity (1-based) whose speed pairs are solved in the first group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parity {
    #[default]
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Initial penalty. `None` uses `penalty_scale * T` times the largest
    /// curvature of the surrogate, see [`default_penalty`]. The factor `T`
    /// keeps the iteration count from growing quickly with the horizon.
    pub delta: Option<f64>,
    pub penalty_scale: f64,
    /// Penalty of the speed copy relative to the others.
    pub speed_weight: f64,
    /// Residual threshold. `None` means `1e-4 * sqrt(8 T)`.
    pub eps: Option<f64>,
    pub max_iter: usize,
    /// Residual balancing of the penalty.
    pub adapt_penalty: bool,
    pub balance_ratio: f64,
    pub balance_factor: f64,
    pub acceleration: Acceleration,
    /// Momentum restarts when the combined residual shrinks by less than this factor.
    pub restart_factor: f64,
    /// An Anderson step is undone when it grows the fixed-point residual by more than this factor.
    pub anderson_safeguard: f64,
    /// Relative slack at which the energy budget counts as tight.
    pub energy_tol: f64,
    pub first_group: Parity,
    pub record_history: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            delta: None,
            penalty_scale: 0.032,
            speed_weight: 1.0,
            eps: None,
            max_iter: 5000,
            adapt_penalty: false,
            balance_ratio: 10.0,
            balance_factor: 2.0,
            acceleration: Acceleration::Anderson { memory: 5 },
            restart_factor: 0.999,
            anderson_safeguard: 1.0,
            energy_tol: 1e-10,
            first_group: Parity::Even,
            record_history: false,
        }
    }
}

/// Extrapolation applied on top of the plain ADMM iteration. Both act on the
/// second-group variables and the multipliers, which determine the next
/// iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceleration {
    None,
    /// Nesterov momentum with restart on the combined residual.
    Momentum,
    /// Type-II Anderson mixing of the last `memory` iterates, safeguarded.
    Anderson { memory: usize },
}

impl Default for Acceleration {
    fn default() -> Self {
        Acceleration::Anderson { memory: 5 }
    }
}

/// A planar vector per slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Planar {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Planar {
    fn filled(x: &[f64], y: &[f64]) -> Self {
        Planar {
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    fn zeros(n: usize) -> Self {
        Planar {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    fn get(&self, k: usize) -> (f64, f64) {
        (self.x[k], self.y[k])
    }

    fn set(&mut self, k: usize, p: (f64, f64)) {
        self.x[k] = p.0;
        self.y[k] = p.1;
    }
}

/// Primal and dual ADMM iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub pos: Planar,
    pub speed: Planar,
    pub dist: Planar,
    pub bridge: Planar,
    pub energy: Planar,
    pub u: Vec<f64>,
    pub t: Vec<f64>,
    pub lam: Planar,
    pub omega: Planar,
    pub eta: Planar,
    pub theta: Planar,
    /// Last multiplier of the energy constraint, reused as a warm start.
    pub phi: f64,
}

impl AdmmState {
    /// All copies equal to `traj`, duals zero, `u` and `t` at the
    /// linearization bounds.
    pub fn from_trajectory(traj: &Trajectory, coeffs: &SurrogateCoeffs) -> Self {
        let p = Planar::filled(&traj.x, &traj.y);
        let n = traj.len();
        let g = coeffs.geometry;
        let u = (0..n).map(|k| g.bob_dist_sq(traj.x[k], traj.y[k])).collect();
        let t = coeffs
            .slots
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let l = g.eve_bound(c.lin_x, c.lin_y, traj.x[k], traj.y[k]);
                if c.is_active() {
                    l.min(c.free_t())
                } else {
                    l
                }
            })
            .collect();
        AdmmState {
            speed: p.clone(),
            dist: p.clone(),
            bridge: p.clone(),
            energy: p.clone(),
            pos: p,
            u,
            t,
            lam: Planar::zeros(n),
            omega: Planar::zeros(n),
            eta: Planar::zeros(n),
            theta: Planar::zeros(n),
            phi: 0.0,
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            x: self.pos.x.clone(),
            y: self.pos.y.clone(),
        }
    }
}

/// Primal and dual residual norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutput {
    pub trajectory: Trajectory,
    pub state: AdmmState,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Residuals,
    pub final_delta: f64,
    /// `(primal, dual, delta)` per iteration when requested.
    pub history: Vec<(f64, f64, f64)>,
    /// Whether the consensus positions had to be pulled back to feasibility.
    pub repaired: bool,
}

/// Penalty matched to the curvature of the surrogate in meters.
pub fn default_penalty(coeffs: &SurrogateCoeffs) -> f64 {
    let mut w: f64 = 0.0;
    for c in coeffs.slots.iter().filter(|c| c.is_active()) {
        w = w.max(2.0 * c.bob_weight);
    }
    if w > 0.0 {
        w
    } else {
        1.0
    }
}

/// One ADMM instance over a fixed surrogate.
#[derive(Debug, Clone)]
pub struct AdmmSolver<'a> {
    pub coeffs: &'a SurrogateCoeffs,
    pub state: AdmmState,
    pub delta: f64,
    pub speed_weight: f64,
    step_limit: f64,
    budget: f64,
    start: (f64, f64),
    end: (f64, f64),
    first: usize,
    energy_tol: f64,
    momentum: Option<Momentum>,
    anderson: Option<AndersonState>,
}

#[derive(Debug, Clone)]
struct AndersonState {
    mixer: Anderson,
    safeguard: f64,
    pending: Option<Vec<f64>>,
    fallback: Option<Vec<f64>>,
    last_norm: f64,
    last_mixed: bool,
}

/// Second-group variables and multipliers.
#[derive(Debug, Clone)]
struct Snapshot {
    z: [Planar; 4],
    nu: [Planar; 4],
}

#[derive(Debug, Clone)]
struct Momentum {
    alpha: f64,
    combined: f64,
    restart_factor: f64,
    prev: Snapshot,
    /// Extrapolated point to load before the next first-group step.
    pending: Option<Snapshot>,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(coeffs: &'a SurrogateCoeffs, traj_f: &Trajectory, scen: &Scenario, cfg: &AdmmConfig) -> Result<Self> {
        traj_f.check_len(scen)?;
        if coeffs.len() != scen.slots {
            return Err(Error::Dimension {
                what: "surrogate slots",
                expected: scen.slots,
                got: coeffs.len(),
            });
        }
        let delta = cfg.delta.unwrap_or_else(|| cfg.penalty_scale * coeffs.len() as f64 * default_penalty(coeffs));
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::NonFinite("ADMM penalty"));
        }
        Ok(AdmmSolver {
            coeffs,
            state: AdmmState::from_trajectory(traj_f, coeffs),
            delta,
            speed_weight: cfg.speed_weight,
            step_limit: scen.step_limit(),
            budget: scen.displacement_budget(),
            start: scen.start,
            end: scen.end,
            // 0-based remainder of the first group's speed-pair heads
            first: match cfg.first_group {
                Parity::Even => 1,
                Parity::Odd => 0,
            },
            energy_tol: cfg.energy_tol,
            momentum: None,
            anderson: None,
        })
        .map(|mut solver| {
            match cfg.acceleration {
                Acceleration::None => {}
                Acceleration::Momentum => {
                    solver.momentum = Some(Momentum {
                        alpha: 1.0,
                        combined: f64::INFINITY,
                        restart_factor: cfg.restart_factor,
                        prev: solver.snapshot(),
                        pending: None,
                    })
                }
                Acceleration::Anderson { memory } => {
                    solver.anderson = Some(AndersonState {
                        mixer: Anderson::new(memory.max(1), 1e-10),
                        safeguard: cfg.anderson_safeguard,
                        pending: None,
                        fallback: None,
                        last_norm: f64::INFINITY,
                        last_mixed: false,
                    })
                }
            }
            solver
        })
    }

    /// Reuses the multipliers of an earlier run; the copies keep their
    /// consistent start at the linearization point.
    pub fn warm_start(&mut self, prev: &AdmmState) {
        if prev.lam.x.len() != self.n() {
            return;
        }
        self.state.lam = prev.lam.clone();
        self.state.omega = prev.omega.clone();
        self.state.eta = prev.eta.clone();
        self.state.theta = prev.theta.clone();
        self.state.phi = prev.phi;
        let snap = self.snapshot();
        if let Some(m) = self.momentum.as_mut() {
            m.prev = snap;
        }
    }

    fn snapshot(&self) -> Snapshot {
        let s = &self.state;
        Snapshot {
            z: [s.pos.clone(), s.speed.clone(), s.dist.clone(), s.bridge.clone()],
            nu: [s.lam.clone(), s.omega.clone(), s.eta.clone(), s.theta.clone()],
        }
    }

    fn load(&mut self, snap: Snapshot) {
        let s = &mut self.state;
        let [pos, speed, dist, bridge] = snap.z;
        let [lam, omega, eta, theta] = snap.nu;
        s.pos = pos;
        s.speed = speed;
        s.dist = dist;
        s.bridge = bridge;
        s.lam = lam;
        s.omega = omega;
        s.eta = eta;
        s.theta = theta;
    }

    /// Penalty-weighted `|B dz|^2` over the second-group entries of `a - b`.
    fn coupling_norm_sq(&self, a: &[Planar; 4], b: &[Planar; 4]) -> f64 {
        let (d, ds) = (self.delta, self.speed_penalty());
        let mut acc = 0.0;
        for k in 0..a[0].x.len() {
            for c in 0..2 {
                let v = |p: &Planar| if c == 0 { p.x[k] } else { p.y[k] };
                if k % 2 == self.first {
                    let dh = v(&a[3]) - v(&b[3]);
                    acc += ds * (v(&a[1]) - v(&b[1])).powi(2) + d * (v(&a[2]) - v(&b[2])).powi(2) + 2.0 * d * dh * dh;
                } else {
                    acc += (ds + 2.0 * d) * (v(&a[0]) - v(&b[0])).powi(2);
                }
            }
        }
        acc
    }

    /// Second-group entries and multipliers (in meters), which fully
    /// determine the next iterate.
    fn pack(&self) -> Vec<f64> {
        let s = &self.state;
        let n = self.n();
        let (d, ds) = (self.delta, self.speed_penalty());
        let mut w = Vec::with_capacity(16 * n);
        for k in 0..n {
            if k % 2 == self.first {
                for p in [&s.speed, &s.dist, &s.bridge] {
                    w.push(p.x[k]);
                    w.push(p.y[k]);
                }
            } else {
                w.push(s.pos.x[k]);
                w.push(s.pos.y[k]);
            }
            for (p, scale) in [(&s.lam, ds), (&s.omega, d), (&s.eta, d), (&s.theta, d)] {
                w.push(p.x[k] / scale);
                w.push(p.y[k] / scale);
            }
        }
        w
    }

    fn unpack(&mut self, w: &[f64]) {
        let n = self.n();
        let (d, ds) = (self.delta, self.speed_penalty());
        let first = self.first;
        let s = &mut self.state;
        let mut it = w.iter().copied();
        let mut next = || it.next().expect("packed iterate has the solver's dimension");
        for k in 0..n {
            if k % 2 == first {
                for p in [&mut s.speed, &mut s.dist, &mut s.bridge] {
                    p.x[k] = next();
                    p.y[k] = next();
                }
            } else {
                s.pos.x[k] = next();
                s.pos.y[k] = next();
            }
            for (p, scale) in [(&mut s.lam, ds), (&mut s.omega, d), (&mut s.eta, d), (&mut s.theta, d)] {
                p.x[k] = next() * scale;
                p.y[k] = next() * scale;
            }
        }
    }

    fn anderson_step(&mut self, w: &[f64]) {
        let f = self.pack();
        let Some(st) = self.anderson.as_mut() else {
            return;
        };
        let norm = f.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if st.last_mixed && norm > st.safeguard * st.last_norm {
            // the mixed point was worse than the plain step it replaced
            st.mixer.reset();
            st.pending = st.fallback.take();
            st.last_mixed = false;
            return;
        }
        st.pending = Some(st.mixer.next(w, &f));
        st.fallback = Some(f);
        st.last_norm = norm;
        st.last_mixed = true;
    }

    fn momentum_step(&mut self, hat: Snapshot) {
        let Some(mut m) = self.momentum.take() else {
            return;
        };
        let cur = self.snapshot();
        let dnu = sq_dist(&cur.nu[0], &hat.nu[0]) / self.speed_penalty()
            + cur.nu[1..].iter().zip(&hat.nu[1..]).map(|(a, b)| sq_dist(a, b)).sum::<f64>() / self.delta;
        let combined = dnu + self.coupling_norm_sq(&cur.z, &hat.z);
        if combined < m.restart_factor * m.combined {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * m.alpha * m.alpha).sqrt());
            let beta = (m.alpha - 1.0) / next;
            m.pending = Some(Snapshot {
                z: std::array::from_fn(|i| extrapolate(&cur.z[i], &m.prev.z[i], beta)),
                nu: std::array::from_fn(|i| extrapolate(&cur.nu[i], &m.prev.nu[i], beta)),
            });
            m.alpha = next;
            m.combined = combined;
        } else {
            m.pending = Some(m.prev.clone());
            m.alpha = 1.0;
            m.combined /= m.restart_factor;
        }
        m.prev = cur;
        self.momentum = Some(m);
    }

    fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// Changes the penalty; accelerator history is dropped since the
    /// fixed-point map changes with it.
    pub fn set_penalty(&mut self, delta: f64) {
        if delta == self.delta {
            return;
        }
        self.delta = delta;
        if let Some(a) = self.anderson.as_mut() {
            a.mixer.reset();
            a.pending = None;
            a.fallback = None;
            a.last_mixed = false;
            a.last_norm = f64::INFINITY;
        }
        if let Some(m) = self.momentum.as_mut() {
            m.alpha = 1.0;
            m.combined = f64::INFINITY;
            m.pending = None;
        }
    }

    /// Penalty on `x = xbar`.
    pub fn speed_penalty(&self) -> f64 {
        self.speed_weight * self.delta
    }

    fn pin(&self, k: usize) -> Option<(f64, f64)> {
        if k == 0 {
            Some(self.start)
        } else if k + 1 == self.n() {
            Some(self.end)
        } else {
            None
        }
    }

    /// Speed pairs `(x[k], xbar[k+1])` for heads with `k % 2 == rem`.
    pub fn speed_step(&mut self, rem: usize) {
        let n = self.n();
        let d = self.delta;
        let ds = self.speed_penalty();
        let wh = ds + 2.0 * d;
        let s = &mut self.state;
        for k in (rem..n.saturating_sub(1)).step_by(2) {
            let m = (
                (ds * s.speed.x[k] + d * (s.dist.x[k] + s.bridge.x[k]) + s.lam.x[k] + s.omega.x[k] + s.eta.x[k]) / wh,
                (ds * s.speed.y[k] + d * (s.dist.y[k] + s.bridge.y[k]) + s.lam.y[k] + s.omega.y[k] + s.eta.y[k]) / wh,
            );
            let tail = (s.pos.x[k + 1] - s.lam.x[k + 1] / ds, s.pos.y[k + 1] - s.lam.y[k + 1] / ds);
            let head_pin = if k == 0 { Some(self.start) } else { None };
            let tail_pin = if k + 2 == n { Some(self.end) } else { None };
            let sol = speed_pair(m, tail, self.step_limit, (wh, ds), head_pin, tail_pin);
            s.pos.set(k, sol.head);
            s.speed.set(k + 1, sol.tail);
        }
    }

    /// Distance copies and bounds for slots with `k % 2 == rem`.
    pub fn distance_step(&mut self, rem: usize) -> Result<()> {
        let n = self.n();
        let d = self.delta;
        for k in (rem..n).step_by(2) {
            let pin = self.pin(k);
            let s = &self.state;
            let target = (s.pos.x[k] - s.omega.x[k] / d, s.pos.y[k] - s.omega.y[k] / d);
            let sol = distance_block(&self.coeffs.slots[k], &self.coeffs.geometry, target, d, pin, k)?;
            let s = &mut self.state;
            s.dist.set(k, (sol.x, sol.y));
            s.u[k] = sol.u;
            s.t[k] = sol.t;
        }
        Ok(())
    }

    fn bridge_value(&self, k: usize) -> (f64, f64) {
        let s = &self.state;
        let d = self.delta;
        (
            0.5 * (s.pos.x[k] + s.energy.x[k]) + (s.theta.x[k] - s.eta.x[k]) / (2.0 * d),
            0.5 * (s.pos.y[k] + s.energy.y[k]) + (s.theta.y[k] - s.eta.y[k]) / (2.0 * d),
        )
    }

    /// Energy copies jointly with the bridge copies at slots `k % 2 != rem`,
    /// where `rem` is the parity of bridge copies held fixed.
    pub fn energy_step(&mut self, fixed_rem: usize) -> Result<()> {
        let n = self.n();
        let d = self.delta;
        let s = &self.state;
        let mut w = vec![0.0; n];
        let mut cx = vec![0.0; n];
        let mut cy = vec![0.0; n];
        for k in 1..n.saturating_sub(1) {
            if k % 2 == fixed_rem {
                w[k] = d;
                cx[k] = s.bridge.x[k] - s.theta.x[k] / d;
                cy[k] = s.bridge.y[k] - s.theta.y[k] / d;
            } else {
                w[k] = 0.5 * d;
                cx[k] = s.pos.x[k] - (s.eta.x[k] + s.theta.x[k]) / d;
                cy[k] = s.pos.y[k] - (s.eta.y[k] + s.theta.y[k]) / d;
            }
        }
        let sol = energy_block(
            &EnergyBlock {
                weights: &w,
                target_x: &cx,
                target_y: &cy,
                start: self.start,
                end: self.end,
                budget: self.budget,
                tol: self.energy_tol,
            },
            self.state.phi,
        )?;
        self.state.energy.x = sol.x;
        self.state.energy.y = sol.y;
        self.state.phi = sol.multiplier;
        for k in 1..n.saturating_sub(1) {
            if k % 2 != fixed_rem {
                let b = self.bridge_value(k);
                self.state.bridge.set(k, b);
            }
        }
        Ok(())
    }

    /// Bridge copies at interior slots with `k % 2 == rem`.
    pub fn bridge_step(&mut self, rem: usize) {
        let n = self.n();
        for k in 1..n.saturating_sub(1) {
            if k % 2 == rem {
                let b = self.bridge_value(k);
                self.state.bridge.set(k, b);
            }
        }
    }

    pub fn dual_step(&mut self) {
        let d = self.delta;
        let ds = self.speed_penalty();
        let s = &mut self.state;
        for k in 0..s.pos.x.len() {
            s.lam.x[k] += ds * (s.speed.x[k] - s.pos.x[k]);
            s.lam.y[k] += ds * (s.speed.y[k] - s.pos.y[k]);
            s.omega.x[k] += d * (s.dist.x[k] - s.pos.x[k]);
            s.omega.y[k] += d * (s.dist.y[k] - s.pos.y[k]);
            s.eta.x[k] += d * (s.bridge.x[k] - s.pos.x[k]);
            s.eta.y[k] += d * (s.bridge.y[k] - s.pos.y[k]);
            s.theta.x[k] += d * (s.energy.x[k] - s.bridge.x[k]);
            s.theta.y[k] += d * (s.energy.y[k] - s.bridge.y[k]);
        }
    }

    /// Norm of all copy mismatches.
    pub fn primal_residual(&self) -> f64 {
        let s = &self.state;
        let mut acc = 0.0;
        for k in 0..s.pos.x.len() {
            for (a, b) in [
                (s.pos.get(k), s.speed.get(k)),
                (s.pos.get(k), s.dist.get(k)),
                (s.pos.get(k), s.bridge.get(k)),
                (s.bridge.get(k), s.energy.get(k)),
            ] {
                acc += (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            }
        }
        acc.sqrt()
    }

    fn second_group(&self) -> [Planar; 4] {
        let s = &self.state;
        [s.pos.clone(), s.speed.clone(), s.dist.clone(), s.bridge.clone()]
    }

    fn dual_residual(&self, old: &[Planar; 4]) -> f64 {
        let (d, ds) = (self.delta, self.speed_penalty());
        let s = &self.state;
        let [pos, speed, dist, bridge] = old;
        let mut acc = 0.0;
        for k in 0..s.pos.x.len() {
            for (cur, prev, bc, bp, dc, dp, hc, hp) in [
                (s.pos.x[k], pos.x[k], s.speed.x[k], speed.x[k], s.dist.x[k], dist.x[k], s.bridge.x[k], bridge.x[k]),
                (s.pos.y[k], pos.y[k], s.speed.y[k], speed.y[k], s.dist.y[k], dist.y[k], s.bridge.y[k], bridge.y[k]),
            ] {
                if k % 2 == self.first {
                    // copies are in the second group, x and xdd in the first
                    let dh = d * (hc - hp);
                    acc += (ds * (bc - bp) + d * (dc - dp) + dh).powi(2) + dh * dh;
                } else {
                    acc += (ds * ds + 2.0 * d * d) * (cur - prev).powi(2);
                }
            }
        }
        acc.sqrt()
    }

    /// One full iteration; returns the residuals after the dual update.
    pub fn iterate(&mut self) -> Result<Residuals> {
        let g1 = self.first;
        let g2 = 1 - g1;
        let previous = match self.momentum.as_mut() {
            Some(m) => {
                let prev = m.prev.z.clone();
                if let Some(p) = m.pending.take() {
                    self.load(p);
                }
                prev
            }
            None => {
                if let Some(p) = self.anderson.as_mut().and_then(|a| a.pending.take()) {
                    self.unpack(&p);
                }
                self.second_group()
            }
        };
        let input = self.anderson.is_some().then(|| self.pack());
        self.speed_step(g1);
        self.distance_step(g2)?;
        self.energy_step(g1)?;
        let hat = self.momentum.is_some().then(|| self.snapshot());
        self.speed_step(g2);
        self.distance_step(g1)?;
        self.bridge_step(g1);
        self.dual_step();
        let res = Residuals {
            primal: self.primal_residual(),
            dual: self.dual_residual(&previous),
        };
        if let Some(hat) = hat {
            self.momentum_step(hat);
        }
        if let Some(w) = input {
            self.anderson_step(&w);
        }
        Ok(res)
    }

    /// Augmented Lagrangian (surrogate objective minus penalties).
    pub fn augmented_lagrangian(&self) -> f64 {
        let s = &self.state;
        let d = self.delta;
        let ds = self.speed_penalty();
        let mut pen = 0.0;
        for k in 0..s.pos.x.len() {
            for (a, b, m) in [(s.pos.x[k], s.speed.x[k], s.lam.x[k]), (s.pos.y[k], s.speed.y[k], s.lam.y[k])] {
                pen += ds / d * (a - b - m / ds).powi(2);
            }
            for (a, b, m) in [
                (s.pos.x[k], s.dist.x[k], s.omega.x[k]),
                (s.pos.y[k], s.dist.y[k], s.omega.y[k]),
                (s.pos.x[k], s.bridge.x[k], s.eta.x[k]),
                (s.pos.y[k], s.bridge.y[k], s.eta.y[k]),
                (s.bridge.x[k], s.energy.x[k], s.theta.x[k]),
                (s.bridge.y[k], s.energy.y[k], s.theta.y[k]),
            ] {
                pen += (a - b - m / d).powi(2);
            }
        }
        self.coeffs.objective(&s.u, &s.t) - 0.5 * d * pen
    }
}

fn sq_dist(a: &Planar, b: &Planar) -> f64 {
    let dx: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (p - q).powi(2)).sum();
    let dy: f64 = a.y.iter().zip(&b.y).map(|(p, q)| (p - q).powi(2)).sum();
    dx + dy
}

fn extrapolate(cur: &Planar, prev: &Planar, beta: f64) -> Planar {
    Planar {
        x: cur.x.iter().zip(&prev.x).map(|(c, p)| c + beta * (c - p)).collect(),
        y: cur.y.iter().zip(&prev.y).map(|(c, p)| c + beta * (c - p)).collect(),
    }
}

/// Runs ADMM on `coeffs` starting from `traj_f` and returns an exactly
/// feasible trajectory.
pub fn admm_run(coeffs: &SurrogateCoeffs, traj_f: &Trajectory, scen: &Scenario, cfg: &AdmmConfig) -> Result<AdmmOutput> {
    admm_run_warm(coeffs, traj_f, scen, cfg, None)
}

/// [`admm_run`] with multipliers taken from `warm` when given.
pub fn admm_run_warm(
    coeffs: &SurrogateCoeffs,
    traj_f: &Trajectory,
    scen: &Scenario,
    cfg: &AdmmConfig,
    warm: Option<&AdmmState>,
) -> Result<AdmmOutput> {
    let mut solver = AdmmSolver::new(coeffs, traj_f, scen, cfg)?;
    if let Some(prev) = warm {
        solver.warm_start(prev);
    }
    let eps = cfg.eps.unwrap_or(1e-4 * (8.0 * scen.slots as f64).sqrt());
    let mut history = Vec::new();
    let mut res = Residuals {
        primal: 0.0,
        dual: 0.0,
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        res = solver.iterate()?;
        iterations += 1;
        if !(res.primal.is_finite() && res.dual.is_finite()) {
            return Err(Error::NonFinite("ADMM residuals"));
        }
        if cfg.record_history {
            history.push((res.primal, res.dual, solver.delta));
        }
        if res.primal <= eps && res.dual <= eps {
            converged = true;
            break;
        }
        if cfg.adapt_penalty {
            if res.primal > cfg.balance_ratio * res.dual {
                solver.set_penalty(solver.delta * cfg.balance_factor);
            } else if res.dual > cfg.balance_ratio * res.primal {
                solver.set_penalty(solver.delta / cfg.balance_factor);
            }
        }
    }
    if !converged && (res.primal > 10.0 * eps || res.dual > 10.0 * eps) {
        return Err(Error::convergence(
            "trajectory ADMM",
            format!(
                "{iterations} iterations, primal residual {:.3e}, dual residual {:.3e}, threshold {:.3e}",
                res.primal, res.dual, eps
            ),
        ));
    }
    let (trajectory, repaired) = repair(&solver.state.trajectory(), scen)?;
    Ok(AdmmOutput {
        trajectory,
        iterations,
        converged,
        residuals: res,
        final_delta: solver.delta,
        history,
        repaired,
        state: solver.state,
    })
}

/// Builds the surrogate at `traj_f` and runs ADMM on it.
pub fn trajectory_step(
    traj_f: &Trajectory,
    plan: &PowerPlan,
    scen: &Scenario,
    cfg: &AdmmConfig,
    warm: Option<&AdmmState>,
) -> Result<AdmmOutput> {
    let coeffs = build_tight_surrogate(traj_f, plan, scen)?;
    admm_run_warm(&coeffs, traj_f, scen, cfg, warm)
}
