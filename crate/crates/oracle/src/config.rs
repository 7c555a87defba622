use crate::error::{OracleError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grid points per axis of the slot searches.
    pub grid_resolution: usize,
    /// Golden-section steps after the grid pass.
    pub refine_iters: usize,
    /// Initial step of the projected-gradient solver.
    pub pg_step: f64,
    /// Relative size of the projected-gradient step at which it stops.
    pub pg_tol: f64,
    pub pg_max_iter: usize,
    /// Relative duality gap at which the barrier solver stops.
    pub barrier_gap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_resolution: 1024,
            refine_iters: 80,
            pg_step: 1.0,
            pg_tol: 1e-13,
            pg_max_iter: 200_000,
            barrier_gap: 1e-12,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grid_resolution > 0
            && self.refine_iters > 0
            && self.pg_max_iter > 0
            && self.pg_step > 0.0
            && self.pg_step.is_finite()
            && self.pg_tol > 0.0
            && self.barrier_gap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(OracleError::Config(format!("all fields must be positive: {self:?}")))
        }
    }
}
