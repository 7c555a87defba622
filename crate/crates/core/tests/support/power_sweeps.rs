//! The power step against exhaustive and interior-point references.
use rand::Rng;
use super::*;
use uavsec_core::model::{objective, SplitPower};
use uavsec_core::power::{power_step, PowerConfig, PowerProblem, SlotGeometry, SlotSurrogate, SplitMode, SurrogatePoint};
use uavsec_oracle::kkt::{kkt_residual, SlotCandidate, SlotProblem};
use uavsec_oracle::slot::{grid_fixed_split_oracle, grid_slot_oracle, SlotInstance};
use uavsec_oracle::surrogate::{power_surrogate_oracle, PowerSurrogateProblem};
use uavsec_oracle::OracleConfig;

struct Case {
    core: SlotSurrogate,
    oracle: SlotInstance,
    lambda: f64,
    peak: f64,
}

fn random_case(r: &mut impl Rng) -> Case {
    let g = nominal_ref_snr();
    let (db, de) = random_distances(r);
    let peak = 4e-3 * r.gen_range(0.25..2.0);
    let (a_f, b_f) = random_split(r, peak);
    let core = SlotSurrogate::new(
        SlotGeometry {
            dist_bob_sq: db,
            dist_eve_sq: de,
        },
        SurrogatePoint { a: a_f, b: b_f },
        g,
    );
    let (noise_bob, noise_eve) = core.noise_floors();
    Case {
        core,
        oracle: SlotInstance {
            noise_bob,
            noise_eve,
            a_f,
            b_f,
        },
        lambda: random_lambda(r),
        peak,
    }
}

pub fn slot_solver_matches_grid_search_and_kkt() {
    let mut r = rng(11);
    let cfg = OracleConfig::default();
    let mut worst_kkt: f64 = 0.0;
    for i in 0..1000 {
        let c = random_case(&mut r);
        let (a, b) = c.core.solve(c.lambda, c.peak);
        assert!(a >= 0.0 && b >= 0.0 && a + b <= c.peak, "case {i}: infeasible ({a}, {b}), sum {:e}, peak {:e}", a + b, c.peak);
        let got = c.oracle.lagrangian(a, b, c.lambda);
        let best = grid_slot_oracle(&c.oracle, c.lambda, c.peak, &cfg);
        assert!(
            got >= best.value - 1e-6 * (1.0 + best.value.abs()),
            "case {i}: solver {got} at ({a}, {b}), grid {} at ({}, {})",
            best.value,
            best.a,
            best.b
        );
        let kkt = kkt_residual(
            &SlotProblem {
                slot: c.oracle,
                lambda: c.lambda,
                peak: c.peak,
            },
            &SlotCandidate { a, b },
        );
        worst_kkt = worst_kkt.max(kkt);
        assert!(kkt <= 1e-7, "case {i}: KKT residual {kkt} at ({a}, {b})");
    }
    eprintln!("worst slot KKT residual {worst_kkt:.3e}");
}

pub fn fixed_split_solver_matches_line_search() {
    let mut r = rng(12);
    let cfg = OracleConfig::default();
    for i in 0..1000 {
        let c = random_case(&mut r);
        let rho = match r.gen_range(0..4) {
            0 => 1.0,
            1 => 0.5,
            _ => r.gen_range(0.0..=1.0),
        };
        let p = c.core.solve_fixed_split(c.lambda, c.peak, rho);
        assert!((0.0..=c.peak).contains(&p), "case {i}: p = {p}");
        let got = c.oracle.lagrangian(rho * p, (1.0 - rho) * p, c.lambda);
        let best = grid_fixed_split_oracle(&c.oracle, c.lambda, c.peak, rho, &cfg);
        assert!(
            got >= best.value - 1e-6 * (1.0 + best.value.abs()),
            "case {i}: solver {got} at p = {p}, grid {}",
            best.value
        );
    }
}

pub fn surrogate_is_a_minorant_tight_at_its_point() {
    let mut r = rng(13);
    for _ in 0..10_000 {
        let c = random_case(&mut r);
        let (a, b) = random_split(&mut r, c.peak);
        assert!(c.core.value(a, b) <= c.core.true_value(a, b) + 1e-12);
        let f = c.core.point();
        assert!((c.core.value(f.a, f.b) - c.core.true_value(f.a, f.b)).abs() <= 1e-12);
    }
}

pub fn inner_jamming_power_is_the_best_response() {
    let mut r = rng(14);
    for i in 0..100 {
        let c = random_case(&mut r);
        let a = r.gen_range(0.0..c.peak);
        let b = c.core.inner_b(a, c.lambda, c.peak);
        let hi = c.peak - a;
        let n = 1_000_000;
        let mut best = f64::NEG_INFINITY;
        for j in 0..=n {
            best = best.max(c.core.objective(a, hi * j as f64 / n as f64, c.lambda));
        }
        let got = c.core.objective(a, b, c.lambda);
        // the grid is at most half a cell from the optimum
        assert!(got >= best - 1e-12 * (1.0 + best.abs()), "case {i}: {got} < {best}");
    }
}

fn random_power_problem(r: &mut impl Rng, slots: usize, mode: SplitMode) -> (PowerProblem, uavsec_core::Scenario, uavsec_core::Trajectory, SplitPower) {
    let s = random_scenario(r, slots);
    let t = random_feasible_trajectory(r, &s);
    let point = random_plan(r, &s).to_split();
    let point = match mode {
        SplitMode::Free => point,
        SplitMode::Fixed(rho) => {
            let plan = uavsec_core::PowerPlan {
                p: point.a.iter().zip(&point.b).map(|(a, b)| a + b).collect(),
                rho: vec![rho; slots],
            };
            plan.to_split()
        }
    };
    (PowerProblem::new(&t, &point, &s, mode).unwrap(), s, t, point)
}

pub fn dual_function_is_convex_in_the_multiplier() {
    let mut r = rng(15);
    for _ in 0..50 {
        let (p, ..) = random_power_problem(&mut r, 16, SplitMode::Free);
        let grid: Vec<f64> = (0..=60).map(|i| 10f64.powf(-1.0 + 6.0 * i as f64 / 60.0)).collect();
        for w in grid.windows(2) {
            let (l0, l1) = (w[0], w[1]);
            let mid = 0.5 * (l0 + l1);
            let (d0, d1, dm) = (p.eval_dual(l0).value, p.eval_dual(l1).value, p.eval_dual(mid).value);
            assert!(dm <= 0.5 * (d0 + d1) + 1e-9 * (1.0 + dm.abs()), "d({mid}) = {dm} above chord");
        }
    }
}

pub fn power_step_certifies_complementary_slackness() {
    let mut r = rng(16);
    let cfg = PowerConfig::default();
    for i in 0..200 {
        let (p, ..) = random_power_problem(&mut r, 16, SplitMode::Free);
        let step = p.solve(&cfg).unwrap();
        let total = step.split.total();
        assert!(total <= p.total_power * (1.0 + 1e-12), "case {i}: total {total}");
        for (a, b) in step.split.a.iter().zip(&step.split.b) {
            assert!(*a >= 0.0 && *b >= 0.0 && a + b <= p.peak * (1.0 + 1e-12));
        }
        if !step.kept_point {
            let slack = step.lambda * (p.total_power - total);
            assert!(slack <= cfg.power_tol * step.lambda * p.total_power * (1.0 + 1e-9), "case {i}: slack {slack}");
        }
    }
}

pub fn zero_multiplier_is_taken_when_the_budget_is_loose() {
    let mut r = rng(17);
    let ocfg = OracleConfig::default();
    let mut hits = 0;
    for _ in 0..200 {
        let (mut p, ..) = random_power_problem(&mut r, 8, SplitMode::Free);
        p.total_power = p.peak * 8.0 * 2.0;
        let step = p.solve(&PowerConfig::default()).unwrap();
        if step.kept_point {
            continue;
        }
        hits += 1;
        assert_eq!(step.lambda, 0.0);
        for (k, s) in p.slots.iter().enumerate() {
            let (noise_bob, noise_eve) = s.noise_floors();
            let f = s.point();
            let inst = SlotInstance {
                noise_bob,
                noise_eve,
                a_f: f.a,
                b_f: f.b,
            };
            let best = grid_slot_oracle(&inst, 0.0, p.peak, &ocfg);
            let got = inst.lagrangian(step.split.a[k], step.split.b[k], 0.0);
            assert!(got >= best.value - 1e-6 * (1.0 + best.value.abs()));
        }
    }
    assert!(hits > 100);
}

pub fn power_step_never_lowers_the_true_objective() {
    let mut r = rng(18);
    for mode in [SplitMode::Free, SplitMode::Fixed(0.5), SplitMode::Fixed(1.0)] {
        for _ in 0..200 {
            let (_, s, t, point) = random_power_problem(&mut r, 16, mode);
            let before = objective(&t, &point.to_plan(), &s).unwrap();
            let step = power_step(&t, &point, &s, mode, &PowerConfig::default()).unwrap();
            let after = objective(&t, &step.split.to_plan(), &s).unwrap();
            assert!(after >= before - 1e-9, "{mode:?}: {after} < {before}");
        }
    }
}

fn oracle_problem(p: &PowerProblem) -> PowerSurrogateProblem {
    PowerSurrogateProblem {
        slots: p
            .slots
            .iter()
            .map(|s| {
                let (noise_bob, noise_eve) = s.noise_floors();
                let f = s.point();
                SlotInstance {
                    noise_bob,
                    noise_eve,
                    a_f: f.a,
                    b_f: f.b,
                }
            })
            .collect(),
        peak: p.peak,
        total: p.total_power,
    }
}

fn compare_with_interior_point(slots: usize, tol: f64, seed: u64) {
    let mut r = rng(seed);
    let cfg = PowerConfig {
        power_tol: 1e-10,
        ..PowerConfig::default()
    };
    for i in 0..20 {
        let (p, ..) = random_power_problem(&mut r, slots, SplitMode::Free);
        let step = p.solve(&cfg).unwrap();
        let o = power_surrogate_oracle(&oracle_problem(&p), &OracleConfig::default()).unwrap();
        let scale = o.value.abs().max(1e-3);
        assert!(
            (step.surrogate - o.value).abs() <= tol * scale,
            "case {i}: solver {} oracle {}",
            step.surrogate,
            o.value
        );
    }
}

pub fn four_slot_power_surrogate_matches_interior_point() {
    compare_with_interior_point(4, 1e-5, 19);
}

pub fn eight_slot_power_surrogate_matches_interior_point() {
    compare_with_interior_point(8, 1e-4, 20);
}
