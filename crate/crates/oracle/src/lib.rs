//! Independent reference solvers for the subproblems of the secrecy-rate
//! planner.
//!
//! Everything here works on plain numeric descriptors and re-derives the
//! objectives from scratch, so agreement with the fast solvers is evidence
//! rather than tautology. None of it is fast.

pub mod barrier;
pub mod config;
pub mod energy;
pub mod error;
pub mod kkt;
pub mod pg;
pub mod qcqp;
pub mod slot;
pub mod surrogate;

pub use config::OracleConfig;
pub use energy::{dense_energy_oracle, EnergyOptimum, EnergyProblem};
pub use error::{OracleError, Result};
pub use kkt::{kkt_residual, EnergyCandidate, KktCheck, SlotCandidate, SlotProblem};
pub use qcqp::{
    distance_oracle, pair_oracle, pg_qcqp_oracle, DistanceCandidate, DistanceProblem, PairCandidate, PairProblem,
    QcqpProblem, QcqpSolution,
};
pub use slot::{grid_fixed_split_oracle, grid_slot_oracle, SlotInstance, SlotOptimum};
pub use surrogate::{
    power_surrogate_oracle, trajectory_surrogate_oracle, PowerOptimum, PowerSurrogateProblem, TrajectoryOptimum,
    TrajectorySlot, TrajectorySurrogateProblem,
};

/// A planar point in meters.
pub type Point = (f64, f64);
