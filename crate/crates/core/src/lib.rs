//! Joint trajectory, transmit power and power-splitting design for a UAV
//! sending confidential data to a ground user while a ground eavesdropper
//! listens.
//!
//! The problem is solved by alternating between a power step (concave-convex
//! procedure with a dual bisection) and a trajectory step (ADMM on a concave
//! surrogate), starting from a straight-line flight with uniform power.

pub mod bcd;
pub mod error;
pub mod model;
pub mod power;
pub mod scenario;
pub mod trajectory;

pub use bcd::{bcd_run, BcdConfig, IterationRecord, RunReport, Scheme};
pub use error::{Error, Result};
pub use model::{check_feasibility, objective, secrecy_rate, FeasibilityReport, PowerPlan, SecrecyRate, SplitPower, Trajectory};
pub use power::{power_step, PowerConfig, SplitMode};
pub use scenario::{Scenario, SpeedBound};
pub use trajectory::{admm_run, trajectory_step, AdmmConfig};
