use goldilocks::calibrate::{optimize, GaConfig};
use goldilocks::econ::{self, HedonicSchedule, ModelParams};
use goldilocks::io::table::Table;
use goldilocks::meanfield::{evolve, EvolveOptions, Landscape, SkillDensity, SkillGrid};
use goldilocks::policy;
use goldilocks::static_eq;
use proptest::prelude::*;

fn params(beta: f64) -> ModelParams {
    ModelParams { beta, ..ModelParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penalty_is_zero_increasing_concave(beta in 0.01f64..5.0, eta in 0.1f64..1e4, d in 0.0f64..0.99, h in 1e-4f64..0.005) {
        prop_assert_eq!(econ::penalty(beta, eta, 0.0), 0.0);
        let (a, b, c) = (econ::penalty(beta, eta, d), econ::penalty(beta, eta, d + h), econ::penalty(beta, eta, d + 2.0 * h));
        prop_assert!(b > a);
        prop_assert!(c - 2.0 * b + a <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn preference_for_better_good_is_an_upper_interval(
        q1 in 0.05f64..1.0, dq in 0.01f64..1.0, p1 in 0.0f64..5.0, p2 in 0.0f64..5.0, d in 0.0f64..1.0,
    ) {
        let p = params(2.0);
        let q2 = q1 + dq;
        let prefers: Vec<bool> = (0..=200)
            .map(|k| {
                let theta = p.theta_bar * k as f64 / 200.0;
                econ::consumer_utility(theta, q2, p2, d, &p).unwrap() > econ::consumer_utility(theta, q1, p1, d, &p).unwrap()
            })
            .collect();
        let first = prefers.iter().position(|&x| x).unwrap_or(prefers.len());
        prop_assert!(prefers[first..].iter().all(|&x| x));
    }

    #[test]
    fn pollution_moves_only_the_participation_margin(d1 in 0.0f64..1.0, d2 in 0.0f64..1.0, pa in 0.1f64..2.0, ph in 2.0f64..20.0) {
        let p = params(2.0);
        let a = econ::sorting_thresholds(pa, ph, 0.5, 0.9, d1, &p).unwrap();
        let b = econ::sorting_thresholds(pa, ph, 0.5, 0.9, d2, &p).unwrap();
        prop_assert_eq!(a.theta_ah, b.theta_ah);
        if d1 < d2 {
            prop_assert!(a.theta_out <= b.theta_out);
        }
    }

    #[test]
    fn envelope_is_the_lower_cost(q in 0.0f64..1.5, gamma in 0.1f64..3.0, c_a in 0.0f64..1.0, kappa in 0.0f64..0.5) {
        let p = ModelParams { gamma, c_a, kappa, ..ModelParams::default() };
        let (env, _) = econ::envelope_cost(q, &p);
        let h = econ::human_cost(q, &p);
        prop_assert!(env <= h);
        match econ::ai_cost(q, &p).value() {
            Some(a) => {
                prop_assert!(env <= a);
                prop_assert!(env == a || env == h);
            }
            None => prop_assert_eq!(env, h),
        }
    }

    #[test]
    fn human_minus_ai_profit_crosses_once(linear in 0.0f64..3.0, convex in 0.0f64..3.0, pi_a in -1.0f64..2.0) {
        let p = ModelParams::default();
        let sched = HedonicSchedule { linear, convex };
        let gaps: Vec<f64> = (0..=400)
            .map(|k| {
                let s = p.skill_min + (p.skill_max - p.skill_min) * k as f64 / 400.0;
                econ::profit_human(s, &sched, &p).unwrap() - pi_a
            })
            .filter(|g| *g != 0.0)
            .collect();
        let changes = gaps.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        prop_assert!(changes <= 1, "{changes} sign changes");
    }

    #[test]
    fn equilibrium_welfare_decomposes(beta in 0.0f64..3.0) {
        let p = params(beta);
        for eq in [static_eq::solve_duopoly_equilibrium(&p).unwrap(), static_eq::solve_monopoly_benchmark(&p).unwrap()] {
            prop_assert_eq!(eq.welfare, eq.cs + eq.ps);
            prop_assert!(eq.d_a >= 0.0 && eq.d_h >= 0.0 && eq.d_a + eq.d_h <= 1.0 + 1e-12);
            prop_assert!(eq.degenerate || (eq.theta_out <= eq.theta_ah && eq.theta_ah <= p.theta_bar));
        }
    }

    #[test]
    fn hhi_is_a_concentration_index(shares in prop::collection::vec(0.0f64..1.0, 1..20)) {
        let total: f64 = shares.iter().sum();
        prop_assume!(total > 0.0);
        let h = static_eq::hhi_of_revenues(&shares).unwrap();
        prop_assert!(h >= 1.0 / shares.len() as f64 - 1e-12 && h <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn planner_never_loses_to_the_market(beta in 0.0f64..3.0) {
        let p = params(beta);
        let planner = policy::planner_optimum(&p).unwrap();
        let market = static_eq::solve_duopoly_equilibrium(&p).unwrap();
        prop_assert!(planner.welfare >= market.welfare - 1e-9, "{} < {}", planner.welfare, market.welfare);
    }

    #[test]
    fn flow_conserves_mass_and_dissipates(
        coeffs in prop::collection::vec(-1.0f64..1.0, 4),
        sigma in 0.05f64..0.5,
        mean in 0.2f64..0.8,
        n in prop::sample::select(vec![32usize, 64, 96]),
    ) {
        let grid = SkillGrid::new(0.0, 1.0, n).unwrap();
        let pi: Vec<f64> = grid
            .centers()
            .iter()
            .map(|s| coeffs.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * 3.0 * s).sin()).sum())
            .collect();
        let init = SkillDensity::truncated_gaussian(grid, mean, 0.15).unwrap();
        let ev = evolve(&init, &Landscape::Fixed(pi), sigma, EvolveOptions { t_end: 0.05, record_every: 1, ..EvolveOptions::default() }).unwrap();
        prop_assert!(ev.last.mass.iter().all(|m| *m >= 0.0));
        prop_assert!((ev.last.total() - 1.0).abs() < 1e-12);
        for w in ev.diagnostics.windows(2) {
            prop_assert!(w[1].free_energy <= w[0].free_energy + 1e-9);
        }
    }

    #[test]
    fn ga_stays_in_the_box_and_never_regresses(seed in any::<u64>()) {
        let bounds = vec![(-1.0, 2.0), (0.0, 0.5), (10.0, 11.0)];
        let ga = GaConfig { population_size: 8, generations: 6, ..GaConfig::default() };
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] - 0.1).abs() + (x[2] * 7.0).sin();
        let r = optimize(&bounds, &ga, seed, f);
        prop_assert!(r.best.iter().zip(&bounds).all(|(x, (lo, hi))| x >= lo && x <= hi));
        for w in r.log.windows(2) {
            prop_assert!(w[1].best_ever >= w[0].best_ever);
        }
        let again = optimize(&bounds, &ga, seed, f);
        prop_assert_eq!(again.best, r.best);
    }

    #[test]
    fn csv_tables_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..30)) {
        let mut t = Table::new("prop", &["i", "x"]);
        for (i, x) in values.iter().enumerate() {
            t.push(vec![i.into(), (*x).into()]);
        }
        let back = Table::from_csv(&t.to_csv(), "prop").unwrap();
        prop_assert_eq!(back.column_f64("x").unwrap(), values);
    }
}
