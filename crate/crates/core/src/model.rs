//! Plan representations and the physics of the UAV-to-ground links.
//!
//! Rates are in nats per channel use; [`nats_to_bits`] converts for reporting.

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Relative tolerance used by [`check_feasibility`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Planar UAV positions, one per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Trajectory {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                what: "trajectory y",
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Trajectory { x, y })
    }

    /// Constant-speed straight line from `scen.start` to `scen.end`.
    pub fn straight_line(scen: &Scenario) -> Self {
        let n = scen.slots;
        let (x0, y0) = scen.start;
        let (x1, y1) = scen.end;
        let last = (n - 1) as f64;
        let (x, y) = (0..n)
            .map(|k| {
                let s = k as f64 / last;
                (x0 + s * (x1 - x0), y0 + s * (y1 - y0))
            })
            .unzip();
        Trajectory { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.x[k], self.y[k])
    }

    /// Per-slot displacement lengths, `len() - 1` entries.
    pub fn step_lengths(&self) -> Vec<f64> {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(wx, wy)| (wx[1] - wx[0]).hypot(wy[1] - wy[0]))
            .collect()
    }

    /// Sum of squared per-slot displacements.
    pub fn squared_path_length(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(wx, wy)| {
                let dx = wx[1] - wx[0];
                let dy = wy[1] - wy[0];
                dx * dx + dy * dy
            })
            .sum()
    }

    pub(crate) fn check_len(&self, scen: &Scenario) -> Result<()> {
        check_len("trajectory x", scen.slots, self.x.len())?;
        check_len("trajectory y", scen.slots, self.y.len())
    }
}

/// Per-slot transmit power and power-splitting ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan {
    pub p: Vec<f64>,
    pub rho: Vec<f64>,
}

impl PowerPlan {
    pub fn uniform(slots: usize, p: f64, rho: f64) -> Self {
        PowerPlan {
            p: vec![p; slots],
            rho: vec![rho; slots],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn to_split(&self) -> SplitPower {
        let (a, b) = self
            .p
            .iter()
            .zip(&self.rho)
            .map(|(&p, &r)| (p * r, p * (1.0 - r)))
            .unzip();
        SplitPower { a, b }
    }

    pub(crate) fn check_len(&self, scen: &Scenario) -> Result<()> {
        check_len("power p", scen.slots, self.p.len())?;
        check_len("power rho", scen.slots, self.rho.len())
    }
}

/// Information power `a = p rho` and artificial-noise power `b = p (1 - rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPower {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SplitPower {
    /// Recovers `(p, rho)`; `rho` is 0 wherever `p` is 0.
    pub fn to_plan(&self) -> PowerPlan {
        let (p, rho) = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| {
                let p = a + b;
                let rho = if p > 0.0 { (a / p).clamp(0.0, 1.0) } else { 0.0 };
                (p, rho)
            })
            .unzip();
        PowerPlan { p, rho }
    }

    pub fn total(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| a + b).sum()
    }
}

/// Per-slot link quantities for a trajectory and power plan.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    pub dist_bob_sq: Vec<f64>,
    pub dist_eve_sq: Vec<f64>,
    pub snr_bob: Vec<f64>,
    pub sinr_eve: Vec<f64>,
    /// Clamped per-slot secrecy rate, nats.
    pub secrecy: Vec<f64>,
}

/// Per-slot and averaged secrecy rates, nats.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyRate {
    pub per_slot: Vec<f64>,
    /// `(1/T) sum max(0, r_i)`.
    pub average: f64,
    /// `(1/T) sum r_i` without clamping; the optimization objective.
    pub average_unclamped: f64,
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Squared UAV-Bob and UAV-Eve distances per slot.
pub fn compute_distances(traj: &Trajectory, scen: &Scenario) -> Result<(Vec<f64>, Vec<f64>)> {
    traj.check_len(scen)?;
    let h2 = scen.altitude * scen.altitude;
    let l = scen.eve_distance;
    Ok(traj
        .x
        .iter()
        .zip(&traj.y)
        .map(|(&x, &y)| (x * x + y * y + h2, (x - l) * (x - l) + y * y + h2))
        .unzip())
}

/// Secrecy rate of one slot from power, split ratio and squared distances, nats,
/// before clamping at zero.
pub fn slot_secrecy_rate(p: f64, rho: f64, dist_bob_sq: f64, dist_eve_sq: f64, ref_snr: f64) -> f64 {
    let info = ref_snr * p * rho;
    let snr = info / dist_bob_sq;
    let sinr = info / (ref_snr * (1.0 - rho) * p + dist_eve_sq);
    snr.ln_1p() - sinr.ln_1p()
}

/// Link metrics for every slot.
pub fn link_metrics(traj: &Trajectory, plan: &PowerPlan, scen: &Scenario) -> Result<LinkMetrics> {
    plan.check_len(scen)?;
    let (dist_bob_sq, dist_eve_sq) = compute_distances(traj, scen)?;
    let g = scen.ref_snr();
    let mut snr_bob = Vec::with_capacity(scen.slots);
    let mut sinr_eve = Vec::with_capacity(scen.slots);
    let mut secrecy = Vec::with_capacity(scen.slots);
    for k in 0..scen.slots {
        let (p, rho) = (plan.p[k], plan.rho[k]);
        let info = g * p * rho;
        let snr = info / dist_bob_sq[k];
        let sinr = info / (g * (1.0 - rho) * p + dist_eve_sq[k]);
        snr_bob.push(snr);
        sinr_eve.push(sinr);
        secrecy.push((snr.ln_1p() - sinr.ln_1p()).max(0.0));
    }
    Ok(LinkMetrics {
        dist_bob_sq,
        dist_eve_sq,
        snr_bob,
        sinr_eve,
        secrecy,
    })
}

/// Per-slot secrecy rates and their clamped and unclamped averages.
pub fn secrecy_rate(traj: &Trajectory, plan: &PowerPlan, scen: &Scenario) -> Result<SecrecyRate> {
    plan.check_len(scen)?;
    let (db, de) = compute_distances(traj, scen)?;
    let g = scen.ref_snr();
    let raw: Vec<f64> = (0..scen.slots)
        .map(|k| slot_secrecy_rate(plan.p[k], plan.rho[k], db[k], de[k], g))
        .collect();
    if raw.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("secrecy rate"));
    }
    let t = scen.slots as f64;
    let average_unclamped = raw.iter().sum::<f64>() / t;
    let per_slot: Vec<f64> = raw.iter().map(|r| r.max(0.0)).collect();
    let average = per_slot.iter().sum::<f64>() / t;
    Ok(SecrecyRate {
        per_slot,
        average,
        average_unclamped,
    })
}

/// The unclamped average secrecy rate, nats.
pub fn objective(traj: &Trajectory, plan: &PowerPlan, scen: &Scenario) -> Result<f64> {
    secrecy_rate(traj, plan, scen).map(|r| r.average_unclamped)
}

/// Total mobility energy `kappa * sum |q[i] - q[i+1]|^2`, joules.
pub fn mobility_energy(traj: &Trajectory, scen: &Scenario) -> Result<f64> {
    traj.check_len(scen)?;
    if traj.len() < 2 {
        return Err(Error::Dimension {
            what: "trajectory (need at least 2 slots)",
            expected: 2,
            got: traj.len(),
        });
    }
    Ok(scen.kappa() * traj.squared_path_length())
}

/// Outcome of one constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation in the constraint's own units (0 when satisfied).
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
}

impl FeasibilityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<12} {} (worst violation {:.3e})",
                c.name,
                if c.passed { "ok" } else { "FAIL" },
                c.worst_violation
            )?;
        }
        Ok(())
    }
}

/// Checks endpoints, speed, energy, split ratio, peak and total power.
///
/// Each check passes when its worst violation is within [`FEASIBILITY_TOL`]
/// relative to the constraint's bound (absolute for zero bounds). Length
/// mismatches are reported as a failed `dimensions` check.
pub fn check_feasibility(traj: &Trajectory, plan: &PowerPlan, scen: &Scenario) -> FeasibilityReport {
    let mut checks = Vec::new();
    let tol = FEASIBILITY_TOL;
    let mut push = |name, violation: f64, scale: f64| {
        let violation = violation.max(0.0);
        checks.push(ConstraintCheck {
            name,
            passed: violation.is_finite() && violation <= tol * scale.abs().max(1.0),
            worst_violation: violation,
        });
    };

    let n = scen.slots;
    let dims_ok = traj.x.len() == n && traj.y.len() == n && plan.p.len() == n && plan.rho.len() == n;
    if !dims_ok || n < 2 {
        push("dimensions", 1.0, 0.0);
        return FeasibilityReport { checks };
    }

    let endpoint = (traj.x[0] - scen.start.0)
        .abs()
        .max((traj.y[0] - scen.start.1).abs())
        .max((traj.x[n - 1] - scen.end.0).abs())
        .max((traj.y[n - 1] - scen.end.1).abs());
    let endpoint_scale = [scen.start.0, scen.start.1, scen.end.0, scen.end.1]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    push("endpoints", endpoint, endpoint_scale);

    let limit = scen.step_limit();
    let speed = traj
        .step_lengths()
        .into_iter()
        .fold(0.0f64, |m, s| m.max(s - limit));
    push("speed", speed, limit);

    let energy = scen.kappa() * traj.squared_path_length();
    push("energy", energy - scen.energy_budget, scen.energy_budget);

    let rho = plan
        .rho
        .iter()
        .fold(0.0f64, |m, &r| m.max(-r).max(r - 1.0));
    push("split_ratio", rho, 1.0);

    let peak = plan
        .p
        .iter()
        .fold(0.0f64, |m, &p| m.max(-p).max(p - scen.peak_power));
    push("peak_power", peak, scen.peak_power);

    let total: f64 = plan.p.iter().sum();
    push("total_power", total - scen.total_power(), scen.total_power());

    if traj.x.iter().chain(&traj.y).chain(&plan.p).chain(&plan.rho).any(|v| !v.is_finite()) {
        push("finite", f64::INFINITY, 1.0);
    }

    FeasibilityReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario(slots: usize) -> Scenario {
        let mut s = Scenario::nominal();
        s.slots = slots;
        s
    }

    #[test]
    fn distances_directly_below_bob() {
        let scen = small_scenario(2);
        let traj = Trajectory::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let (db, de) = compute_distances(&traj, &scen).unwrap();
        assert_eq!(db, vec![10_000.0; 2]);
        assert_eq!(de, vec![20_000.0; 2]);
    }

    #[test]
    fn distances_equal_at_midpoint() {
        let scen = small_scenario(2);
        let traj = Trajectory::new(vec![50.0, 50.0], vec![-30.0, 7.0]).unwrap();
        let (db, de) = compute_distances(&traj, &scen).unwrap();
        assert_eq!(db, de);
    }

    #[test]
    fn distances_reject_length_mismatch() {
        let scen = small_scenario(3);
        let traj = Trajectory::new(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(matches!(
            compute_distances(&traj, &scen),
            Err(Error::Dimension { .. })
        ));
        assert!(Trajectory::new(vec![0.0; 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let scen = small_scenario(4);
        let traj = Trajectory::straight_line(&scen);
        let plan = PowerPlan::uniform(4, 0.0, 0.7);
        let r = secrecy_rate(&traj, &plan, &scen).unwrap();
        assert!(r.per_slot.iter().all(|&v| v == 0.0));
        assert_eq!(r.average, 0.0);
    }

    #[test]
    fn no_jamming_at_equal_distances_gives_zero_rate() {
        let scen = small_scenario(2);
        let traj = Trajectory::new(vec![50.0, 50.0], vec![0.0, 0.0]).unwrap();
        let plan = PowerPlan::uniform(2, 2e-3, 1.0);
        let r = secrecy_rate(&traj, &plan, &scen).unwrap();
        assert!(r.per_slot.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn clamped_average_dominates_unclamped() {
        let scen = small_scenario(3);
        // close to Eve without jamming: negative raw rate in some slots
        let traj = Trajectory::new(vec![100.0, 0.0, -50.0], vec![0.0; 3]).unwrap();
        let plan = PowerPlan::uniform(3, 1e-3, 1.0);
        let r = secrecy_rate(&traj, &plan, &scen).unwrap();
        assert!(r.average >= r.average_unclamped);
        assert!(r.average > 0.0);
        assert!(r.average_unclamped < r.average);
    }

    #[test]
    fn energy_of_one_three_meter_step() {
        let scen = small_scenario(2);
        let traj = Trajectory::new(vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(mobility_energy(&traj, &scen).unwrap(), 9.0);
        let still = Trajectory::new(vec![5.0; 2], vec![5.0; 2]).unwrap();
        assert_eq!(mobility_energy(&still, &scen).unwrap(), 0.0);
    }

    #[test]
    fn nominal_straight_line_energy_matches_closed_form() {
        let scen = Scenario::nominal();
        let traj = Trajectory::straight_line(&scen);
        let steps = (scen.slots - 1) as f64;
        let closed = steps * scen.kappa() * (1200.0 / steps).powi(2);
        let e = mobility_energy(&traj, &scen).unwrap();
        assert!((e - closed).abs() < 1e-9 * closed);
        assert!(e < scen.energy_budget);
    }

    #[test]
    fn split_round_trip() {
        let plan = PowerPlan {
            p: vec![0.0, 1e-3, 4e-3, 2.5e-3],
            rho: vec![0.3, 0.0, 1.0, 0.25],
        };
        let back = plan.to_split().to_plan();
        assert_eq!(back.p, plan.p);
        assert_eq!(back.rho[0], 0.0);
        for k in 1..4 {
            assert!((back.rho[k] - plan.rho[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn feasibility_flags_forced_violations() {
        let scen = Scenario::nominal();
        let traj = Trajectory::straight_line(&scen);
        let plan = PowerPlan::uniform(scen.slots, scen.avg_power, 0.5);
        let ok = check_feasibility(&traj, &plan, &scen);
        assert!(ok.all_passed(), "{ok}");

        let mut hot = plan.clone();
        hot.p[7] = 2.0 * scen.peak_power;
        let rep = check_feasibility(&traj, &hot, &scen);
        assert!(!rep.get("peak_power").unwrap().passed);
        assert!((rep.get("peak_power").unwrap().worst_violation - scen.peak_power).abs() < 1e-15);

        let mut jump = traj.clone();
        jump.x[10] += 10.0 * scen.step_limit();
        let rep = check_feasibility(&jump, &plan, &scen);
        assert!(!rep.get("speed").unwrap().passed);

        let mut split = plan.clone();
        split.rho[3] = 1.5;
        assert!(!check_feasibility(&traj, &split, &scen).get("split_ratio").unwrap().passed);

        let short = PowerPlan::uniform(3, 0.0, 0.0);
        assert!(!check_feasibility(&traj, &short, &scen).all_passed());
    }
}
