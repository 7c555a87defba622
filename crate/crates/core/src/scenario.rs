//! Problem constants of one planning instance.
//!
//! Everything is stored in linear SI units. Decibel helpers are provided for
//! ingestion; nothing downstream ever sees a dB value.

use crate::error::{Error, Result};

/// Converts a power ratio in dB to a linear factor.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Noise power in watts for a spectral density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_watts(density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(density_dbm_hz) * bandwidth_hz
}

/// How the per-slot displacement bound is derived from the maximum speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedBound {
    /// Displacement per slot is at most `max_speed * slot_len` meters.
    #[default]
    SpeedTimesSlot,
    /// Displacement per slot is at most `max_speed` meters, i.e. the bound is
    /// applied literally to the per-slot position difference.
    PerSlot,
}

/// Physical, channel and budget constants of one instance.
///
/// Bob sits at the origin and Eve at `(eve_distance, 0)`; the UAV flies at a
/// fixed altitude between fixed start and end points.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Ground distance between Bob and Eve, meters.
    pub eve_distance: f64,
    /// Flight altitude, meters.
    pub altitude: f64,
    /// Initial horizontal position, meters.
    pub start: (f64, f64),
    /// Final horizontal position, meters.
    pub end: (f64, f64),
    /// Number of time slots.
    pub slots: usize,
    /// Slot length, seconds.
    pub slot_len: f64,
    /// Maximum speed, meters per second.
    pub max_speed: f64,
    pub speed_bound: SpeedBound,
    /// UAV mass including payload, kilograms.
    pub mass: f64,
    /// Mobility energy budget, joules.
    pub energy_budget: f64,
    /// Channel power gain at the 1 m reference distance (linear).
    pub ref_gain: f64,
    /// Receiver noise power, watts.
    pub noise_power: f64,
    /// Average transmit power budget, watts.
    pub avg_power: f64,
    /// Peak transmit power, watts.
    pub peak_power: f64,
}

impl Scenario {
    /// The nominal instance: L = H = 100 m, 125 s flight at 0.5 s slots,
    /// 12 m/s, 4 kg, 19.40 kJ, gamma0 = -36 dB, N0 = -169 dBm/Hz over 20 MHz,
    /// P_bar = 0 dBm and P_max = 4 P_bar.
    pub fn nominal() -> Self {
        let avg_power = dbm_to_watts(0.0);
        Scenario {
            eve_distance: 100.0,
            altitude: 100.0,
            start: (-200.0, -150.0),
            end: (1000.0, -150.0),
            slots: 250,
            slot_len: 0.5,
            max_speed: 12.0,
            speed_bound: SpeedBound::SpeedTimesSlot,
            mass: 4.0,
            energy_budget: 19.40e3,
            ref_gain: db_to_linear(-36.0),
            noise_power: noise_power_watts(-169.0, 20e6),
            avg_power,
            peak_power: 4.0 * avg_power,
        }
    }

    /// Checks every scenario invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let finite = [
            ("eve_distance", self.eve_distance),
            ("altitude", self.altitude),
            ("start.x", self.start.0),
            ("start.y", self.start.1),
            ("end.x", self.end.0),
            ("end.y", self.end.1),
            ("slot_len", self.slot_len),
            ("max_speed", self.max_speed),
            ("mass", self.mass),
            ("energy_budget", self.energy_budget),
            ("ref_gain", self.ref_gain),
            ("noise_power", self.noise_power),
            ("avg_power", self.avg_power),
            ("peak_power", self.peak_power),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if self.slots < 2 {
            return bad(format!("need at least 2 slots, got {}", self.slots));
        }
        if self.slot_len <= 0.0 {
            return bad("slot length must be positive".into());
        }
        if self.altitude <= 0.0 {
            return bad("altitude must be positive".into());
        }
        if self.max_speed <= 0.0 {
            return bad("maximum speed must be positive".into());
        }
        if self.mass <= 0.0 {
            return bad("mass must be positive".into());
        }
        if self.energy_budget <= 0.0 {
            return bad("mobility energy budget must be positive".into());
        }
        if self.ref_gain <= 0.0 || self.noise_power <= 0.0 {
            return bad("reference gain and noise power must be positive".into());
        }
        if self.avg_power < 0.0 {
            return bad("average power must be non-negative".into());
        }
        if self.peak_power < self.avg_power {
            return bad(format!(
                "peak power {} W is below average power {} W",
                self.peak_power, self.avg_power
            ));
        }
        Ok(())
    }

    /// Flight duration `T * delta_t`, seconds.
    pub fn duration(&self) -> f64 {
        self.slots as f64 * self.slot_len
    }

    /// Energy coefficient `0.5 * M * delta_t`.
    pub fn kappa(&self) -> f64 {
        0.5 * self.mass * self.slot_len
    }

    /// Total power available over the flight, `T * P_bar`.
    pub fn total_power(&self) -> f64 {
        self.slots as f64 * self.avg_power
    }

    /// Maximum displacement between consecutive slots, meters.
    pub fn step_limit(&self) -> f64 {
        match self.speed_bound {
            SpeedBound::SpeedTimesSlot => self.max_speed * self.slot_len,
            SpeedBound::PerSlot => self.max_speed,
        }
    }

    /// Budget on the sum of squared per-slot displacements, `E_tr / kappa`.
    pub fn displacement_budget(&self) -> f64 {
        self.energy_budget / self.kappa()
    }

    /// Reference SNR factor `gamma0 / sigma^2` (per watt at 1 m).
    pub fn ref_snr(&self) -> f64 {
        self.ref_gain / self.noise_power
    }

    /// Horizontal position of Eve.
    pub fn eve_position(&self) -> (f64, f64) {
        (self.eve_distance, 0.0)
    }
}
