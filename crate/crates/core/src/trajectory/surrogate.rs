//! Concave surrogate of the trajectory subproblem.
//!
//! With `u >= dI^2` and `t <= dE^2` as auxiliary bounds, each slot's rate is
//! `ln(1 + c/u) - ln(q_p + t) + ln(q_b + t)` where `c = gamma0 p rho / sigma^2`,
//! `q_p = gamma0 p / sigma^2` and `q_b = gamma0 p (1 - rho) / sigma^2` (all m^2).
//! The first term is linearized from below in `u`, the second from above in
//! `t`, and `dE^2` is replaced by its tangent plane at the previous trajectory.

use crate::error::{Error, Result};
use crate::model::{compute_distances, PowerPlan, Trajectory};
use crate::scenario::Scenario;

/// Surrogate coefficients of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotCoeffs {
    /// Weight of `u` in the objective, `c / (u_f^2 + c u_f)`, 1/m^2.
    pub bob_weight: f64,
    /// Weight of `t` in the objective, `1 / (t_f + q_p)`, 1/m^2.
    pub eve_slope: f64,
    /// `q_b`, the jamming term inside the retained logarithm, m^2.
    pub jam_offset: f64,
    /// `c = gamma0 p rho / sigma^2`, m^2.
    pub info_gain: f64,
    /// `q_p = gamma0 p / sigma^2`, m^2.
    pub power_gain: f64,
    /// Linearization point.
    pub lin_x: f64,
    pub lin_y: f64,
    pub u_f: f64,
    pub t_f: f64,
}

impl SlotCoeffs {
    /// Slots without information power have an identically zero rate and
    /// contribute nothing to the surrogate.
    pub fn is_active(&self) -> bool {
        self.info_gain > 0.0
    }

    /// Surrogate objective without constant terms.
    pub fn objective(&self, u: f64, t: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        -self.bob_weight * u - self.eve_slope * t + (self.jam_offset + t).ln()
    }

    /// Surrogate objective including the constants; a lower bound on
    /// [`SlotCoeffs::true_value`] that is tight at `(u_f, t_f)`.
    pub fn full_value(&self, u: f64, t: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        (self.info_gain / self.u_f).ln_1p() - self.bob_weight * (u - self.u_f) - (self.power_gain + self.t_f).ln()
            - self.eve_slope * (t - self.t_f)
            + (self.jam_offset + t).ln()
    }

    /// Exact slot rate as a function of the distance bounds `(u, t)`.
    pub fn true_value(&self, u: f64, t: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        (self.info_gain / u).ln_1p() - (self.power_gain + t).ln() + (self.jam_offset + t).ln()
    }

    /// Unconstrained maximizer of the objective over `t`.
    pub fn free_t(&self) -> f64 {
        1.0 / self.eve_slope - self.jam_offset
    }
}

/// Geometry shared by all slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateGeometry {
    pub eve_distance: f64,
    pub altitude: f64,
}

impl SurrogateGeometry {
    /// Tangent-plane lower bound of `(x - L)^2 + y^2 + H^2` at `(xf, yf)`.
    pub fn eve_bound(&self, xf: f64, yf: f64, x: f64, y: f64) -> f64 {
        let l = self.eve_distance;
        -xf * xf + 2.0 * (xf - l) * x + l * l - yf * yf + 2.0 * yf * y + self.altitude * self.altitude
    }

    pub fn bob_dist_sq(&self, x: f64, y: f64) -> f64 {
        x * x + y * y + self.altitude * self.altitude
    }

    pub fn eve_dist_sq(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.eve_distance;
        dx * dx + y * y + self.altitude * self.altitude
    }
}

/// Coefficients of the whole trajectory surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoeffs {
    pub slots: Vec<SlotCoeffs>,
    pub geometry: SurrogateGeometry,
}

impl SurrogateCoeffs {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Sum of slot objectives (constants dropped).
    pub fn objective(&self, u: &[f64], t: &[f64]) -> f64 {
        self.slots
            .iter()
            .zip(u.iter().zip(t))
            .map(|(c, (&u, &t))| c.objective(u, t))
            .sum()
    }

    /// Surrogate value of a trajectory with the bounds eliminated: `u` tight
    /// and `t` at its best value below the tangent plane. Returns `-inf` when
    /// the tangent plane leaves the logarithm's domain.
    pub fn trajectory_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let g = self.geometry;
        self.slots
            .iter()
            .zip(x.iter().zip(y))
            .map(|(c, (&x, &y))| {
                if !c.is_active() {
                    return 0.0;
                }
                let u = g.bob_dist_sq(x, y);
                let t = c.free_t().min(g.eve_bound(c.lin_x, c.lin_y, x, y));
                if c.jam_offset + t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                c.full_value(u, t)
            })
            .sum()
    }

    /// Exact objective `sum R_i(dI^2, dE^2)` of a trajectory, nats (not averaged).
    pub fn true_trajectory_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let g = self.geometry;
        self.slots
            .iter()
            .zip(x.iter().zip(y))
            .map(|(c, (&x, &y))| c.true_value(g.bob_dist_sq(x, y), g.eve_dist_sq(x, y)))
            .sum()
    }
}

/// Builds the surrogate linearized at `traj_f` with bounds `(u_f, t_f)`.
///
/// The natural choice is `u_f = dI^2(traj_f)` and `t_f = dE^2(traj_f)`, see
/// [`build_tight_surrogate`].
pub fn build_surrogate(
    traj_f: &Trajectory,
    u_f: &[f64],
    t_f: &[f64],
    plan: &PowerPlan,
    scen: &Scenario,
) -> Result<SurrogateCoeffs> {
    traj_f.check_len(scen)?;
    plan.check_len(scen)?;
    for (what, v) in [("u_f", u_f), ("t_f", t_f)] {
        if v.len() != scen.slots {
            return Err(Error::Dimension {
                what,
                expected: scen.slots,
                got: v.len(),
            });
        }
    }
    let g = scen.ref_snr();
    let mut slots = Vec::with_capacity(scen.slots);
    for k in 0..scen.slots {
        let (p, rho) = (plan.p[k], plan.rho[k]);
        let info_gain = g * p * rho;
        let power_gain = g * p;
        let jam_offset = g * p * (1.0 - rho);
        let (uf, tf) = (u_f[k], t_f[k]);
        if !(uf > 0.0) {
            return Err(Error::NonFinite("surrogate linearization u_f (must be positive)"));
        }
        if !(tf + power_gain > 0.0) || !(tf + jam_offset > 0.0) {
            return Err(Error::NonFinite("surrogate linearization t_f (log argument)"));
        }
        slots.push(SlotCoeffs {
            bob_weight: info_gain / (uf * uf + info_gain * uf),
            eve_slope: 1.0 / (tf + power_gain),
            jam_offset,
            info_gain,
            power_gain,
            lin_x: traj_f.x[k],
            lin_y: traj_f.y[k],
            u_f: uf,
            t_f: tf,
        });
    }
    Ok(SurrogateCoeffs {
        slots,
        geometry: SurrogateGeometry {
            eve_distance: scen.eve_distance,
            altitude: scen.altitude,
        },
    })
}

/// Surrogate linearized at `traj_f` with `u_f = dI^2` and `t_f = dE^2`.
pub fn build_tight_surrogate(traj_f: &Trajectory, plan: &PowerPlan, scen: &Scenario) -> Result<SurrogateCoeffs> {
    let (u_f, t_f) = compute_distances(traj_f, scen)?;
    build_surrogate(traj_f, &u_f, &t_f, plan, scen)
}
