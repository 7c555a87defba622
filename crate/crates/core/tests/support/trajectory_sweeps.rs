//! Trajectory blocks and the whole trajectory surrogate against references.
use rand::Rng;
use super::*;
use uavsec_core::model::Trajectory;
use uavsec_core::trajectory::blocks::{distance_block, energy_block, speed_pair, EnergyBlock};
use uavsec_core::trajectory::{admm_run, build_tight_surrogate, AdmmConfig, SlotCoeffs, SurrogateCoeffs, SurrogateGeometry};
use uavsec_oracle::energy::{dense_energy_oracle, EnergyProblem};
use uavsec_oracle::kkt::{kkt_residual, EnergyCandidate};
use uavsec_oracle::qcqp::{distance_oracle, pair_oracle, DistanceCandidate, DistanceProblem, PairCandidate, PairProblem};
use uavsec_oracle::surrogate::{trajectory_surrogate_oracle, TrajectorySlot, TrajectorySurrogateProblem};
use uavsec_oracle::OracleConfig;

fn point(r: &mut impl Rng, half: f64) -> (f64, f64) {
    (r.gen_range(-half..half), r.gen_range(-half..half))
}

pub fn speed_pair_matches_projected_gradient_and_kkt() {
    let mut r = rng(21);
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let radius = log_uniform(&mut r, 0.5, 20.0);
        let m = point(&mut r, 30.0);
        let d = point(&mut r, 30.0);
        let delta = log_uniform(&mut r, 1e-6, 1e-1);
        let w = if r.gen_bool(0.5) {
            (3.0 * delta, delta)
        } else {
            (delta * r.gen_range(0.2..5.0), delta * r.gen_range(0.2..5.0))
        };
        let head_pin = r.gen_bool(0.15).then(|| point(&mut r, 30.0));
        let tail_pin = r.gen_bool(0.15).then(|| point(&mut r, 30.0));
        let problem = PairProblem {
            m,
            d,
            r: radius,
            w_head: w.0,
            w_tail: w.1,
            head_pin,
            tail_pin,
        };
        if head_pin.is_some() && tail_pin.is_some() {
            continue;
        }
        let sol = speed_pair(m, d, radius, w, head_pin, tail_pin);
        let gap = (sol.head.0 - sol.tail.0).hypot(sol.head.1 - sol.tail.1);
        assert!(gap <= radius, "case {i}: gap {gap} > {radius}");
        let got = problem.cost(sol.head, sol.tail);
        let (_, _, best) = pair_oracle(&problem, &cfg).unwrap();
        let tol = 1e-7 * best.abs() + 1e-12 * w.0.max(w.1) * radius * radius;
        assert!((got - best).abs() <= tol, "case {i}: solver {got} oracle {best}");
        let kkt = kkt_residual(
            &problem,
            &PairCandidate {
                head: sol.head,
                tail: sol.tail,
                multiplier: sol.multiplier,
            },
        );
        worst = worst.max(kkt);
        assert!(kkt <= 1e-8, "case {i}: KKT residual {kkt}, {sol:?}");
    }
    eprintln!("worst speed-pair KKT residual {worst:.3e}");
}

struct DistanceCase {
    coeffs: SlotCoeffs,
    geometry: SurrogateGeometry,
    target: (f64, f64),
    delta: f64,
    pin: Option<(f64, f64)>,
}

fn random_distance_case(r: &mut impl Rng) -> DistanceCase {
    let g = nominal_ref_snr();
    let geometry = SurrogateGeometry {
        eve_distance: r.gen_range(50.0..300.0),
        altitude: r.gen_range(60.0..140.0),
    };
    let lin = (r.gen_range(-400.0..1000.0), r.gen_range(-300.0..300.0));
    let p = log_uniform(r, 1e-5, 4e-3);
    let rho = r.gen_range(0.01..=1.0);
    let info_gain = g * p * rho;
    let power_gain = g * p;
    let jam_offset = g * p * (1.0 - rho);
    let u_f = geometry.bob_dist_sq(lin.0, lin.1);
    let t_f = geometry.eve_dist_sq(lin.0, lin.1);
    let coeffs = SlotCoeffs {
        bob_weight: info_gain / (u_f * u_f + info_gain * u_f),
        eve_slope: 1.0 / (t_f + power_gain),
        jam_offset,
        info_gain,
        power_gain,
        lin_x: lin.0,
        lin_y: lin.1,
        u_f,
        t_f,
    };
    let off = point(r, 40.0);
    DistanceCase {
        coeffs,
        geometry,
        target: (lin.0 + off.0, lin.1 + off.1),
        delta: 2.0 * coeffs.bob_weight * log_uniform(r, 1e-2, 1e3),
        pin: r.gen_bool(0.1).then(|| (lin.0 + off.1, lin.1 - off.0)),
    }
}

fn oracle_distance_problem(c: &DistanceCase) -> DistanceProblem {
    DistanceProblem {
        bob_weight: c.coeffs.bob_weight,
        eve_slope: c.coeffs.eve_slope,
        jam_offset: c.coeffs.jam_offset,
        altitude: c.geometry.altitude,
        eve_distance: c.geometry.eve_distance,
        lin: (c.coeffs.lin_x, c.coeffs.lin_y),
        target: c.target,
        delta: c.delta,
        pin: c.pin,
    }
}

pub fn distance_block_matches_projected_gradient_and_kkt() {
    let mut r = rng(22);
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let c = random_distance_case(&mut r);
        let sol = distance_block(&c.coeffs, &c.geometry, c.target, c.delta, c.pin, i).unwrap();
        let problem = oracle_distance_problem(&c);
        // the bound on u is tight
        assert_eq!(sol.u, c.geometry.bob_dist_sq(sol.x, sol.y));
        let cap = problem.tangent(sol.x, sol.y);
        assert!(sol.t <= cap + 1e-12 * cap.abs(), "case {i}: t {} above plane {cap}", sol.t);
        let got = problem.value(sol.x, sol.y, sol.t);
        let (_, _, _, best) = distance_oracle(&problem, &cfg).unwrap();
        assert!(
            (got - best).abs() <= 1e-7 * (1.0 + best.abs()),
            "case {i}: solver {got} oracle {best}"
        );
        let kkt = kkt_residual(
            &problem,
            &DistanceCandidate {
                x: sol.x,
                y: sol.y,
                t: sol.t,
                multiplier: sol.multiplier,
            },
        );
        worst = worst.max(kkt);
        assert!(kkt <= 1e-7, "case {i}: KKT residual {kkt}, {sol:?}");
    }
    eprintln!("worst distance KKT residual {worst:.3e}");
}

pub fn energy_block_matches_dense_solve_and_kkt() {
    let mut r = rng(23);
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = 8;
        let delta = log_uniform(&mut r, 1e-6, 1e-1);
        let weights: Vec<f64> = (0..n).map(|_| delta * if r.gen_bool(0.5) { 1.0 } else { 0.5 }).collect();
        let start = point(&mut r, 100.0);
        let end = (start.0 + r.gen_range(10.0..60.0), start.1 + r.gen_range(-20.0..20.0));
        let mut target_x = Vec::with_capacity(n);
        let mut target_y = Vec::with_capacity(n);
        for k in 0..n {
            let s = k as f64 / (n - 1) as f64;
            target_x.push(start.0 + s * (end.0 - start.0) + r.gen_range(-25.0..25.0));
            target_y.push(start.1 + s * (end.1 - start.1) + r.gen_range(-25.0..25.0));
        }
        let line = ((end.0 - start.0).powi(2) + (end.1 - start.1).powi(2)) / (n - 1) as f64;
        let budget = line * r.gen_range(1.001..4.0);
        let sol = energy_block(
            &EnergyBlock {
                weights: &weights,
                target_x: &target_x,
                target_y: &target_y,
                start,
                end,
                budget,
                tol: 1e-12,
            },
            0.0,
        )
        .unwrap();
        assert!(sol.energy <= budget, "case {i}");
        let problem = EnergyProblem {
            weights,
            target_x,
            target_y,
            start,
            end,
            budget,
        };
        let got = problem.cost(&sol.x, &sol.y);
        let best = dense_energy_oracle(&problem, &cfg).unwrap();
        assert!(
            (got - best.cost).abs() <= 1e-7 * best.cost.abs() + 1e-12 * delta * budget,
            "case {i}: solver {got} oracle {}",
            best.cost
        );
        let kkt = kkt_residual(
            &problem,
            &EnergyCandidate {
                x: sol.x.clone(),
                y: sol.y.clone(),
                multiplier: sol.multiplier,
            },
        );
        worst = worst.max(kkt);
        assert!(kkt <= 1e-7, "case {i}: KKT residual {kkt}");
    }
    eprintln!("worst energy KKT residual {worst:.3e}");
}

fn random_surrogate(r: &mut impl Rng, slots: usize) -> (uavsec_core::Scenario, Trajectory, SurrogateCoeffs) {
    let s = random_scenario(r, slots);
    let t = random_feasible_trajectory(r, &s);
    let plan = random_plan(r, &s);
    let c = build_tight_surrogate(&t, &plan, &s).unwrap();
    (s, t, c)
}

pub fn surrogate_slope_matches_the_true_objective_at_its_point() {
    let mut r = rng(24);
    let h = 1e-3;
    for i in 0..200 {
        let (_, t, c) = random_surrogate(&mut r, 16);
        let n = t.len();
        let dir: Vec<(f64, f64)> = (0..n).map(|_| point(&mut r, 1.0)).collect();
        let moved = |s: f64| {
            let x: Vec<f64> = (0..n).map(|k| t.x[k] + s * dir[k].0).collect();
            let y: Vec<f64> = (0..n).map(|k| t.y[k] + s * dir[k].1).collect();
            (x, y)
        };
        let (xp, yp) = moved(h);
        let (xm, ym) = moved(-h);
        let slope_s = (c.trajectory_value(&xp, &yp) - c.trajectory_value(&xm, &ym)) / (2.0 * h);
        let slope_t = (c.true_trajectory_value(&xp, &yp) - c.true_trajectory_value(&xm, &ym)) / (2.0 * h);
        assert!(
            (slope_s - slope_t).abs() <= 1e-4 * slope_t.abs().max(1e-6),
            "case {i}: surrogate slope {slope_s}, true slope {slope_t}"
        );
        let at = c.trajectory_value(&t.x, &t.y);
        let truth = c.true_trajectory_value(&t.x, &t.y);
        assert!((at - truth).abs() <= 1e-12 * (1.0 + truth.abs()));
    }
}

pub fn surrogate_stays_below_the_true_objective() {
    let mut r = rng(25);
    for _ in 0..200 {
        let (_, _, c) = random_surrogate(&mut r, 16);
        for s in c.slots.iter().filter(|s| s.is_active()) {
            for _ in 0..20 {
                let u = s.u_f * log_uniform(&mut r, 0.05, 20.0);
                let t = s.t_f * log_uniform(&mut r, 0.05, 20.0);
                assert!(s.full_value(u, t) <= s.true_value(u, t) + 1e-12 * (1.0 + s.true_value(u, t).abs()));
            }
        }
        for _ in 0..20 {
            let (x, y): (Vec<f64>, Vec<f64>) = c
                .slots
                .iter()
                .map(|s| (s.lin_x + r.gen_range(-80.0..80.0), s.lin_y + r.gen_range(-80.0..80.0)))
                .unzip();
            let lower = c.trajectory_value(&x, &y);
            assert!(lower <= c.true_trajectory_value(&x, &y) + 1e-12);
        }
    }
}

fn oracle_trajectory_problem(s: &uavsec_core::Scenario, c: &SurrogateCoeffs) -> TrajectorySurrogateProblem {
    TrajectorySurrogateProblem {
        slots: c
            .slots
            .iter()
            .map(|k| TrajectorySlot {
                active: k.is_active(),
                bob_weight: k.bob_weight,
                eve_slope: k.eve_slope,
                jam_offset: k.jam_offset,
                lin: (k.lin_x, k.lin_y),
                constant: (k.info_gain / k.u_f).ln_1p() + k.bob_weight * k.u_f - (k.power_gain + k.t_f).ln()
                    + k.eve_slope * k.t_f,
            })
            .collect(),
        eve_distance: s.eve_distance,
        altitude: s.altitude,
        start: s.start,
        end: s.end,
        step: s.step_limit(),
        budget: s.displacement_budget(),
    }
}

pub fn eight_slot_trajectory_surrogate_matches_interior_point() {
    let mut r = rng(26);
    let admm = AdmmConfig {
        eps: Some(1e-9),
        max_iter: 500_000,
        ..AdmmConfig::default()
    };
    for i in 0..20 {
        let s = random_scenario(&mut r, 8);
        let line = Trajectory::straight_line(&s);
        let plan = random_plan(&mut r, &s);
        let c = build_tight_surrogate(&line, &plan, &s).unwrap();
        let out = admm_run(&c, &line, &s, &admm).unwrap();
        let got = c.trajectory_value(&out.trajectory.x, &out.trajectory.y);
        let o = trajectory_surrogate_oracle(&oracle_trajectory_problem(&s, &c), (&line.x, &line.y), &OracleConfig::default())
            .unwrap();
        assert!(
            (got - o.value).abs() <= 1e-4 * o.value.abs().max(1e-3),
            "case {i}: ADMM {got} ({} iterations) oracle {}",
            out.iterations,
            o.value
        );
    }
}
