//! Exhaustive search for the per-slot power problem.

use crate::config::OracleConfig;

/// One slot of the power surrogate. Powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotInstance {
    /// `sigma^2 dI^2 / gamma0`.
    pub noise_bob: f64,
    /// `sigma^2 dE^2 / gamma0`.
    pub noise_eve: f64,
    /// Information power at the linearization point.
    pub a_f: f64,
    /// Jamming power at the linearization point.
    pub b_f: f64,
}

impl SlotInstance {
    /// Secrecy rate in nats with information power `a` and jamming power `b`.
    pub fn rate(&self, a: f64, b: f64) -> f64 {
        (1.0 + a / self.noise_bob).ln() - (1.0 + a / (b + self.noise_eve)).ln()
    }

    /// The rate with `ln(a + b + noise_eve)` replaced by its tangent at the linearization point.
    pub fn surrogate(&self, a: f64, b: f64) -> f64 {
        let s_f = self.a_f + self.b_f + self.noise_eve;
        (1.0 + a / self.noise_bob).ln() + (b + self.noise_eve).ln() - s_f.ln() - (a + b + self.noise_eve - s_f) / s_f
    }

    pub fn lagrangian(&self, a: f64, b: f64, lambda: f64) -> f64 {
        self.surrogate(a, b) - lambda * (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOptimum {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

/// Argmax of a concave `f` on `[lo, hi]`, endpoints included.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> f64 {
    if !(hi > lo) {
        return lo;
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [lo, hi, mid]
        .into_iter()
        .map(|x| (x, f(x)))
        .fold((mid, f64::NEG_INFINITY), |best, (x, v)| if v > best.1 { (x, v) } else { best })
        .0
}

/// Maximizes a concave `f` over `{a, b >= 0, a + b <= peak}`: a uniform grid
/// pass followed by nested golden-section search over the whole triangle.
pub fn grid_maximize_triangle(f: impl Fn(f64, f64) -> f64, peak: f64, cfg: &OracleConfig) -> SlotOptimum {
    let mut best = SlotOptimum {
        a: 0.0,
        b: 0.0,
        value: f(0.0, 0.0),
    };
    if !(peak > 0.0) {
        return best;
    }
    let mut consider = |a: f64, b: f64| {
        let v = f(a, b);
        if v > best.value {
            best = SlotOptimum { a, b, value: v };
        }
    };
    let n = cfg.grid_resolution.max(1);
    let h = peak / n as f64;
    for i in 0..=n {
        for j in 0..=n - i {
            consider(i as f64 * h, j as f64 * h);
        }
    }
    let iters = cfg.refine_iters;
    let inner = |a: f64| golden_max(|b| f(a, b), 0.0, (peak - a).max(0.0), iters);
    let a = golden_max(|a| f(a, inner(a)), 0.0, peak, iters);
    consider(a, inner(a));
    best
}

/// Maximizer of `surrogate(a, b) - lambda (a + b)` over `{a, b >= 0, a + b <= peak}`.
pub fn grid_slot_oracle(inst: &SlotInstance, lambda: f64, peak: f64, cfg: &OracleConfig) -> SlotOptimum {
    grid_maximize_triangle(|a, b| inst.lagrangian(a, b, lambda), peak, cfg)
}

/// Same problem restricted to `a = rho p`, `b = (1 - rho) p` with `p in [0, peak]`.
pub fn grid_fixed_split_oracle(inst: &SlotInstance, lambda: f64, peak: f64, rho: f64, cfg: &OracleConfig) -> SlotOptimum {
    let f = |p: f64| inst.lagrangian(rho * p, (1.0 - rho) * p, lambda);
    let mut best = (0.0, f(0.0));
    if peak > 0.0 {
        let n = cfg.grid_resolution.max(1) * cfg.grid_resolution.max(1);
        for i in 0..=n {
            let p = peak * i as f64 / n as f64;
            let v = f(p);
            if v > best.1 {
                best = (p, v);
            }
        }
        let p = golden_max(f, 0.0, peak, cfg.refine_iters);
        if f(p) > best.1 {
            best = (p, f(p));
        }
    }
    SlotOptimum {
        a: rho * best.0,
        b: (1.0 - rho) * best.0,
        value: best.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OracleConfig {
        OracleConfig {
            grid_resolution: 64,
            ..Default::default()
        }
    }

    #[test]
    fn zero_peak_returns_origin() {
        let inst = SlotInstance {
            noise_bob: 1e-5,
            noise_eve: 2e-5,
            a_f: 1e-3,
            b_f: 1e-3,
        };
        let s = grid_slot_oracle(&inst, 0.0, 0.0, &cfg());
        assert_eq!((s.a, s.b), (0.0, 0.0));
    }

    #[test]
    fn planted_quadratic_is_recovered() {
        let f = |a: f64, b: f64| -(a - 0.3).powi(2) - 2.0 * (b - 0.45).powi(2) - 0.5 * (a - 0.3) * (b - 0.45);
        let s = grid_maximize_triangle(f, 1.0, &cfg());
        assert!((s.a - 0.3).abs() < 1e-6 && (s.b - 0.45).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn planted_optimum_outside_triangle_lands_on_the_edge() {
        // maximizer (1, 1) projects to (0.5, 0.5) on a + b = 1
        let f = |a: f64, b: f64| -(a - 1.0).powi(2) - (b - 1.0).powi(2);
        let s = grid_maximize_triangle(f, 1.0, &cfg());
        assert!((s.a - 0.5).abs() < 1e-6 && (s.b - 0.5).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn surrogate_is_tight_and_below_the_rate() {
        let inst = SlotInstance {
            noise_bob: 1e-5,
            noise_eve: 3e-5,
            a_f: 1e-3,
            b_f: 5e-4,
        };
        assert!((inst.surrogate(1e-3, 5e-4) - inst.rate(1e-3, 5e-4)).abs() < 1e-12);
        for (a, b) in [(0.0, 0.0), (2e-3, 1e-3), (1e-4, 3e-3)] {
            assert!(inst.surrogate(a, b) <= inst.rate(a, b) + 1e-12);
        }
    }

    #[test]
    fn fixed_split_respects_ratio() {
        let inst = SlotInstance {
            noise_bob: 1e-5,
            noise_eve: 3e-5,
            a_f: 1e-3,
            b_f: 1e-3,
        };
        let s = grid_fixed_split_oracle(&inst, 100.0, 4e-3, 0.5, &cfg());
        assert!((s.a - s.b).abs() < 1e-15);
    }
}
