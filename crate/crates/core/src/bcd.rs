//! Alternating optimization of power and trajectory, and the baselines.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{check_feasibility, nats_to_bits, objective, secrecy_rate, FeasibilityReport, PowerPlan, Trajectory};
use crate::power::{power_step, PowerConfig, SplitMode};
use crate::scenario::Scenario;
use crate::trajectory::{trajectory_step, AdmmConfig, AdmmState};

/// Which variables are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Scheme {
    /// Trajectory, power and splitting ratio.
    #[default]
    Joint,
    /// Power and splitting ratio on the straight line.
    FixedTrajectory,
    /// Trajectory and power with the splitting ratio held at the given value.
    FixedSplit(f64),
    /// Trajectory and power with all power carrying information.
    NoJamming,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Joint => "proposed",
            Scheme::FixedTrajectory => "ft",
            Scheme::FixedSplit(_) => "nps",
            Scheme::NoJamming => "noan",
        }
    }

    fn split_mode(&self) -> SplitMode {
        match *self {
            Scheme::Joint | Scheme::FixedTrajectory => SplitMode::Free,
            Scheme::FixedSplit(rho) => SplitMode::Fixed(rho),
            Scheme::NoJamming => SplitMode::Fixed(1.0),
        }
    }

    fn initial_rho(&self) -> f64 {
        match *self {
            Scheme::Joint | Scheme::FixedTrajectory => 0.5,
            Scheme::FixedSplit(rho) => rho,
            Scheme::NoJamming => 1.0,
        }
    }

    fn moves_trajectory(&self) -> bool {
        !matches!(self, Scheme::FixedTrajectory)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdConfig {
    pub scheme: Scheme,
    /// Relative objective change that ends the outer loop.
    pub tol: f64,
    pub max_outer: usize,
    pub power: PowerConfig,
    pub admm: AdmmConfig,
    /// Start each trajectory step from the previous step's multipliers.
    pub warm_start: bool,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            scheme: Scheme::Joint,
            tol: 1e-4,
            max_outer: 50,
            power: PowerConfig::default(),
            admm: AdmmConfig::default(),
            warm_start: true,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Unclamped average secrecy rate after the iteration, bits/s/Hz.
    pub objective_bits: f64,
    pub power_time: Duration,
    pub trajectory_time: Duration,
    pub admm_iterations: usize,
    pub admm_primal: f64,
    pub admm_dual: f64,
    /// Whether the trajectory proposed by ADMM was kept.
    pub trajectory_accepted: bool,
    /// `(primal, dual)` residuals per ADMM iteration, when the ADMM config
    /// asks for history.
    pub admm_history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scheme: Scheme,
    pub trajectory: Trajectory,
    pub plan: PowerPlan,
    /// Clamped average secrecy rate, bits/s/Hz.
    pub secrecy_rate_bits: f64,
    /// Unclamped average secrecy rate before zeroing negative slots, bits/s/Hz.
    pub objective_bits: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
    pub power_time: Duration,
    pub trajectory_time: Duration,
    pub total_time: Duration,
    pub feasibility: FeasibilityReport,
}

/// Straight-line trajectory and uniform power, the starting point of every scheme.
pub fn initialize(scen: &Scenario, scheme: Scheme) -> Result<(Trajectory, PowerPlan)> {
    scen.validate()?;
    let traj = Trajectory::straight_line(scen);
    let line = traj.step_lengths();
    if line.iter().any(|&s| s > scen.step_limit()) {
        return Err(Error::InfeasibleScenario(format!(
            "straight line needs {:.6} m per slot, limit is {:.6} m",
            line.iter().copied().fold(0.0, f64::max),
            scen.step_limit()
        )));
    }
    if traj.squared_path_length() > scen.displacement_budget() {
        return Err(Error::InfeasibleScenario(format!(
            "straight line needs {:.6} J, budget is {:.6} J",
            scen.kappa() * traj.squared_path_length(),
            scen.energy_budget
        )));
    }
    Ok((traj, PowerPlan::uniform(scen.slots, scen.avg_power, scheme.initial_rho())))
}

/// Runs the alternating optimization for `cfg.scheme`.
pub fn bcd_run(scen: &Scenario, cfg: &BcdConfig) -> Result<RunReport> {
    let started = Instant::now();
    let scheme = cfg.scheme;
    let (mut traj, mut plan) = initialize(scen, scheme)?;
    let mode = scheme.split_mode();
    let mut obj = objective(&traj, &plan, scen)?;
    let mut trace = Vec::new();
    let mut power_time = Duration::ZERO;
    let mut trajectory_time = Duration::ZERO;
    let mut converged = false;
    let mut warm: Option<AdmmState> = None;

    for iteration in 1..=cfg.max_outer {
        let t0 = Instant::now();
        let step = power_step(&traj, &plan.to_split(), scen, mode, &cfg.power)?;
        let mut next_plan = step.split.to_plan();
        if let SplitMode::Fixed(rho) = mode {
            next_plan.rho.iter_mut().for_each(|r| *r = rho);
        }
        let p_obj = objective(&traj, &next_plan, scen)?;
        // the surrogate bound guarantees this up to rounding
        if p_obj >= obj - 1e-12 * obj.abs().max(1.0) {
            plan = next_plan;
        }
        let dt_power = t0.elapsed();

        let t1 = Instant::now();
        let mut record = IterationRecord {
            iteration,
            objective_bits: 0.0,
            power_time: dt_power,
            trajectory_time: Duration::ZERO,
            admm_iterations: 0,
            admm_primal: 0.0,
            admm_dual: 0.0,
            trajectory_accepted: false,
            admm_history: Vec::new(),
        };
        if scheme.moves_trajectory() {
            let prev = if cfg.warm_start { warm.as_ref() } else { None };
            let out = trajectory_step(&traj, &plan, scen, &cfg.admm, prev)?;

            record.admm_iterations = out.iterations;
            record.admm_primal = out.residuals.primal;
            record.admm_dual = out.residuals.dual;
            record.admm_history = out.history.iter().map(|&(r, s, _)| (r, s)).collect();
            let before = objective(&traj, &plan, scen)?;
            let after = objective(&out.trajectory, &plan, scen)?;
            if after >= before {
                traj = out.trajectory;
                record.trajectory_accepted = true;
            }
            warm = Some(out.state);
        }
        if scheme.moves_trajectory() {
            record.trajectory_time = t1.elapsed();
        }

        power_time += dt_power;
        trajectory_time += record.trajectory_time;
        let new_obj = objective(&traj, &plan, scen)?;
        record.objective_bits = nats_to_bits(new_obj);
        trace.push(record);
        let change = (new_obj - obj).abs();
        obj = new_obj;
        if change <= cfg.tol * obj.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let objective_bits = nats_to_bits(obj);
    let rates = secrecy_rate(&traj, &plan, scen)?;
    let g = scen.ref_snr();
    let (db, de) = crate::model::compute_distances(&traj, scen)?;
    for k in 0..scen.slots {
        let r = crate::model::slot_secrecy_rate(plan.p[k], plan.rho[k], db[k], de[k], g);
        if r < 0.0 {
            plan.p[k] = 0.0;
        }
    }
    let final_rate = secrecy_rate(&traj, &plan, scen)?;
    debug_assert!(final_rate.average >= rates.average - 1e-12);
    let feasibility = check_feasibility(&traj, &plan, scen);
    Ok(RunReport {
        scheme,
        secrecy_rate_bits: nats_to_bits(final_rate.average),
        objective_bits,
        outer_iterations: trace.len(),
        converged,
        trace,
        power_time,
        trajectory_time,
        total_time: started.elapsed(),
        feasibility,
        trajectory: traj,
        plan,
    })
}

/// Power and splitting ratio optimized on the straight line.
pub fn baseline_ft(scen: &Scenario, cfg: &BcdConfig) -> Result<RunReport> {
    bcd_run(scen, &BcdConfig {
        scheme: Scheme::FixedTrajectory,
        ..cfg.clone()
    })
}

/// Splitting ratio fixed at 0.5.
pub fn baseline_nps(scen: &Scenario, cfg: &BcdConfig) -> Result<RunReport> {
    bcd_run(scen, &BcdConfig {
        scheme: Scheme::FixedSplit(0.5),
        ..cfg.clone()
    })
}

/// No artificial noise.
pub fn baseline_noan(scen: &Scenario, cfg: &BcdConfig) -> Result<RunReport> {
    bcd_run(scen, &BcdConfig {
        scheme: Scheme::NoJamming,
        ..cfg.clone()
    })
}
