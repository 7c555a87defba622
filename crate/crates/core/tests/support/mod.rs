//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

pub mod power_sweeps;
pub mod trajectory_sweeps;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavsec_core::model::{PowerPlan, Trajectory};
use uavsec_core::scenario::{Scenario, SpeedBound};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Reference SNR of the nominal channel, per watt at 1 m.
pub fn nominal_ref_snr() -> f64 {
    Scenario::nominal().ref_snr()
}

/// Squared Bob and Eve distances of a random UAV position.
pub fn random_distances(r: &mut impl Rng) -> (f64, f64) {
    let h: f64 = r.gen_range(50.0..150.0);
    let l: f64 = r.gen_range(50.0..300.0);
    let x: f64 = r.gen_range(-600.0..1200.0);
    let y: f64 = r.gen_range(-400.0..400.0);
    (x * x + y * y + h * h, (x - l).powi(2) + y * y + h * h)
}

/// A point of the triangle `{a, b >= 0, a + b <= peak}`, sometimes on its edges.
pub fn random_split(r: &mut impl Rng, peak: f64) -> (f64, f64) {
    match r.gen_range(0..6) {
        0 => (0.0, 0.0),
        1 => (r.gen_range(0.0..peak), 0.0),
        2 => (0.0, r.gen_range(0.0..peak)),
        _ => {
            let a = r.gen_range(0.0..peak);
            (a, r.gen_range(0.0..=peak - a))
        }
    }
}

/// Multiplier of the total-power constraint, zero one time in five.
pub fn random_lambda(r: &mut impl Rng) -> f64 {
    if r.gen_bool(0.2) {
        0.0
    } else {
        log_uniform(r, 1e-1, 1e5)
    }
}

/// A small scenario whose straight line is strictly inside the speed and
/// energy limits.
pub fn random_scenario(r: &mut impl Rng, slots: usize) -> Scenario {
    let mut s = Scenario::nominal();
    s.slots = slots;
    s.eve_distance = r.gen_range(50.0..300.0);
    s.altitude = r.gen_range(60.0..140.0);
    s.slot_len = r.gen_range(0.3..1.0);
    s.max_speed = r.gen_range(8.0..20.0);
    s.speed_bound = SpeedBound::SpeedTimesSlot;
    let step = s.max_speed * s.slot_len;
    // the line uses between 40% and 90% of the per-slot limit
    let span = step * (slots - 1) as f64 * r.gen_range(0.4..0.9);
    let heading: f64 = r.gen_range(-0.5..0.5);
    s.start = (r.gen_range(-250.0..0.0), r.gen_range(-200.0..200.0));
    s.end = (s.start.0 + span * heading.cos(), s.start.1 + span * heading.sin());
    let line_energy = s.kappa() * span * span / (slots - 1) as f64;
    s.energy_budget = line_energy * r.gen_range(1.2..3.0);
    s.avg_power = 1e-3 * r.gen_range(0.5..2.0);
    s.peak_power = s.avg_power * r.gen_range(1.5..5.0);
    s.validate().unwrap();
    s
}

/// A feasible trajectory: the straight line with a smooth detour that keeps
/// every step within the limit.
pub fn random_feasible_trajectory(r: &mut impl Rng, s: &Scenario) -> Trajectory {
    let line = Trajectory::straight_line(s);
    let n = s.slots;
    let amp = r.gen_range(0.0..0.3) * s.step_limit() * (n - 1) as f64 / std::f64::consts::PI;
    let phase: f64 = r.gen_range(0.0..1.0);
    let (dx, dy) = (s.end.0 - s.start.0, s.end.1 - s.start.1);
    let len = dx.hypot(dy).max(1e-9);
    let (nx, ny) = (-dy / len, dx / len);
    let mut x = line.x.clone();
    let mut y = line.y.clone();
    for k in 1..n - 1 {
        let tau = k as f64 / (n - 1) as f64;
        let off = amp * (std::f64::consts::PI * tau).sin() * (1.0 + 0.2 * (6.0 * tau + phase).sin());
        x[k] += off * nx;
        y[k] += off * ny;
    }
    let t = Trajectory::new(x, y).unwrap();
    let (t, _) = uavsec_core::trajectory::repair(&t, s).unwrap();
    t
}

/// A plan with random per-slot power within the peak and total budgets.
pub fn random_plan(r: &mut impl Rng, s: &Scenario) -> PowerPlan {
    let n = s.slots;
    let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let total = s.total_power() * r.gen_range(0.5..1.0);
    let p = raw.iter().map(|v| (v / sum * total).min(s.peak_power)).collect();
    let rho = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    PowerPlan { p, rho }
}
