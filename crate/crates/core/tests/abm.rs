use goldilocks::abm::*;
use goldilocks::econ::{QualityVector, SkillVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> SimConfig {
    SimConfig { n_consumers: 200, horizon: 30, ..SimConfig::default() }
}

fn ql(learning_rate: f64, discount: f64) -> QLearning {
    QLearning { learning_rate, discount, ..QLearning::default() }
}

#[test]
fn q_update_examples() {
    let q = QTable { values: [1.0, 2.0, 3.0, 0.0] };
    let up = q_update(&q, Action::Stay, 1.0, &ql(0.5, 0.9));
    assert!((up.values[0] - 2.35).abs() < 1e-15);
    assert_eq!(&up.values[1..], &q.values[1..]);
    assert_eq!(q_update(&q, Action::AdoptAi, 7.0, &ql(0.0, 0.9)), q);
    assert_eq!(q_update(&q, Action::Reskill, -0.25, &ql(1.0, 0.0)).values[1], -0.25);
}

#[test]
fn greedy_selection_and_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = QTable { values: [0.0, 5.0, 1.0, 2.0] };
    assert!((0..1000).all(|_| select_action(&q, 0.0, &mut rng) == Action::Reskill));
    let tied = QTable { values: [1.0, 1.0, 1.0, 1.0] };
    assert_eq!(select_action(&tied, 0.0, &mut rng), Action::Stay);
    let late = QTable { values: [0.0, 2.0, 2.0, 2.0] };
    assert_eq!(select_action(&late, 0.0, &mut rng), Action::Reskill);
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = QTable { values: [9.0, 0.0, 0.0, 0.0] };
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[select_action(&q, 1.0, &mut rng).index()] += 1;
    }
    let (mean, sd) = (n as f64 / 4.0, (n as f64 * 0.25 * 0.75).sqrt());
    for c in counts {
        assert!((c as f64 - mean).abs() < 3.0 * sd, "{counts:?}");
    }
}

fn offer(quality: f64, price: f64, seller: usize) -> Offer {
    Offer { quality, price, seller }
}

#[test]
fn consumer_choice_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let good = [offer(1.0, 0.1, 0)];
    assert!((0..1000).all(|_| consumer_choice(10.0, &good, 0.0, 1e-3, &mut rng) == Some(0)));
    let bad = [offer(0.1, 5.0, 0), offer(0.2, 4.0, 1)];
    assert!((0..1000).all(|_| consumer_choice(1.0, &bad, 0.0, 0.05, &mut rng).is_none()));
    // pollution alone can push every offer below the outside option
    assert!((0..1000).all(|_| consumer_choice(10.0, &good, 20.0, 0.05, &mut rng).is_none()));
}

#[test]
fn equal_offers_split_evenly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // utility 100 dwarfs the outside option at this scale
    let offers = [offer(1.0, 0.0, 0), offer(1.0, 0.0, 1)];
    let n = 100_000;
    let first = (0..n).filter(|_| consumer_choice(100.0, &offers, 0.0, 0.05, &mut rng) == Some(0)).count();
    let sd = (n as f64 * 0.25).sqrt();
    assert!((first as f64 - n as f64 / 2.0).abs() < 3.0 * sd, "{first}");
}

fn ai_agent(q_tech: f64, q_creative: f64) -> AiAgent {
    AiAgent {
        id: 0,
        quality: QualityVector { q_tech, q_creative },
        cap: QualityVector { q_tech: 0.95, q_creative: 0.65 },
        price: 0.0,
    }
}

#[test]
fn ai_capability_examples() {
    let cfg = SimConfig::default();
    let at_cap = ai_agent(0.95, 0.65);
    assert_eq!(ai_capability_step(&at_cap, &cfg).quality, at_cap.quality);
    let half = ai_capability_step(&ai_agent(0.475, 0.325), &cfg);
    assert!((half.quality.q_tech - (0.475 + cfg.lambda_tech * 0.95 / 4.0)).abs() < 1e-15);
    assert!((half.quality.q_creative - (0.325 + cfg.lambda_creative * 0.65 / 4.0)).abs() < 1e-15);
    let frozen = SimConfig { lambda_creative: 0.0, ..cfg };
    assert_eq!(ai_capability_step(&ai_agent(0.3, 0.2), &frozen).quality.q_creative, 0.2);
}

fn agent(liquidity: f64, q: f64, cfg: &SimConfig) -> CreatorAgent {
    let mut a = CreatorAgent::new(0, SkillVector { s_tech: 0.5, s_creative: 0.5 }, 0, cfg);
    a.liquidity = liquidity;
    a.q_table = QTable { values: [q, q, q, 0.0] };
    a
}

#[test]
fn exit_check_examples() {
    let cfg = SimConfig::default();
    assert!(exit_check(&agent(-0.001, 1.0, &cfg), Action::Stay, &cfg));
    assert!(!exit_check(&agent(0.1, 1.0, &cfg), Action::Stay, &cfg));
    assert!(!exit_check(&agent(0.0, 1.0, &cfg), Action::Stay, &cfg));
    assert!(exit_check(&agent(0.1, 1.0, &cfg), Action::Exit, &cfg));
    let v_out = cfg.q_learning.outside_option;
    assert!(exit_check(&agent(0.1, 0.5 * v_out, &cfg), Action::Stay, &cfg));
}

#[test]
fn entry_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let none = SimConfig { entry_rate: 0.0, ..SimConfig::default() };
    assert_eq!(entry_draw(&none, &mut rng), 0);
    let all = SimConfig { entry_rate: 1.0, ..SimConfig::default() };
    assert_eq!(entry_draw(&all, &mut rng), 50);
    let cfg = SimConfig::default();
    let n = 1000;
    let total: usize = (0..n).map(|_| entry_draw(&cfg, &mut rng)).sum();
    let var = 50.0 * 0.05 * 0.95;
    let se = (var / n as f64).sqrt();
    assert!((total as f64 / n as f64 - 2.5).abs() < 3.0 * se, "{total}");
}

#[test]
fn entrants_are_fresh() {
    let cfg = small();
    let mut state = SimState::new(&cfg).unwrap();
    let before = state.creators.len();
    let k = entry_step(&mut state, &SimConfig { entry_rate: 1.0, ..cfg.clone() });
    assert_eq!(k, cfg.n_humans);
    for c in &state.creators[before..] {
        assert_eq!(c.liquidity, cfg.initial_liquidity());
        assert_eq!(c.q_table, QTable::optimistic(cfg.q_learning.outside_option));
        assert!(c.is_active());
    }
}

#[test]
fn no_consumers_means_pure_losses() {
    let cfg = SimConfig { n_consumers: 0, entry_rate: 0.0, warmup_periods: 0, horizon: 5, ..SimConfig::default() };
    let mut state = SimState::new(&cfg).unwrap();
    let mut last: Vec<f64> = state.creators.iter().map(|c| c.liquidity).collect();
    for _ in 0..5 {
        let rec = period_step(&mut state, &cfg);
        assert_eq!(rec.human_share + rec.ai_share, 0.0);
        assert_eq!(rec.outside_share, 1.0);
        for (c, prev) in state.creators.iter().zip(&mut last) {
            if c.exit_period.is_none() || c.exit_period == Some(rec.t) {
                assert!(c.liquidity < *prev || c.exit_period == Some(rec.t));
            }
            *prev = c.liquidity;
        }
    }
}

#[test]
fn zero_horizon_has_only_snapshots() {
    let cfg = SimConfig { horizon: 0, ..small() };
    let ts = run_simulation(&cfg).unwrap();
    assert!(ts.records.is_empty());
    assert_eq!(ts.initial_agents.len(), cfg.n_humans);
    assert!(phase_detector(&ts.active_counts()).is_err());
}

#[test]
fn same_seed_same_series() {
    let cfg = small().with_seed(11);
    assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    assert_ne!(run_simulation(&cfg).unwrap().records, run_simulation(&cfg.with_seed(12)).unwrap().records);
}

#[test]
fn replications_match_single_runs() {
    let cfg = small();
    let runs = run_replications(&cfg, &[3, 1]).unwrap();
    assert_eq!(runs[0], run_simulation(&cfg.with_seed(3)).unwrap());
    assert_eq!(runs[1].seed, 1);
}

#[test]
fn accounting_and_share_identities() {
    let ts = run_simulation(&small().with_seed(7)).unwrap();
    for r in &ts.records {
        assert!((r.consumer_spending - r.seller_revenue).abs() < 1e-12, "t {}", r.t);
        assert!((r.human_share + r.ai_share + r.outside_share - 1.0).abs() < 1e-12);
        for s in [r.human_share, r.ai_share, r.outside_share] {
            assert!((0.0..=1.0).contains(&s));
        }
        assert!((r.welfare - r.cs - r.ps).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&r.hhi));
    }
}

#[test]
fn exited_agents_stay_out() {
    let cfg = small().with_seed(8);
    let mut state = SimState::new(&cfg).unwrap();
    let mut gone: Vec<(usize, SkillVector, f64)> = Vec::new();
    for _ in 0..cfg.horizon {
        period_step(&mut state, &cfg);
        for &(id, skill, liq) in &gone {
            let c = &state.creators[id];
            assert!(!c.is_active());
            assert_eq!((c.skill, c.liquidity), (skill, liq));
        }
        gone = state.creators.iter().filter(|c| !c.is_active()).map(|c| (c.id, c.skill, c.liquidity)).collect();
        let counted = state.creators.iter().filter(|c| c.is_active()).count();
        assert_eq!(counted, state.active_count());
    }
}

#[test]
fn ai_quality_grows_within_caps() {
    let ts = run_simulation(&small().with_seed(9)).unwrap();
    for w in ts.records.windows(2) {
        assert!(w[1].ai_quality >= w[0].ai_quality);
    }
}

#[test]
fn warm_up_sets_pre_shock_hhi() {
    let ts = run_simulation(&small()).unwrap();
    let hhi = ts.pre_shock_hhi.unwrap();
    assert!(hhi > 0.0 && hhi < 0.1);
    assert!(ts.initial_agents.iter().all(|a| a.exit_period.is_none()));
    let cold = run_simulation(&SimConfig { warmup_periods: 0, ..small() }).unwrap();
    assert_eq!(cold.pre_shock_hhi, None);
}

#[test]
fn burn_in_keeps_incumbents() {
    let cfg = SimConfig { n_consumers: 500, ..SimConfig::default() };
    assert!(burn_in_retention(&cfg, 20).unwrap() >= 0.9);
}

#[test]
fn phase_detector_examples() {
    let flat = vec![10; 30];
    assert!(phase_detector(&flat).unwrap().degenerate);
    // 50 down to 5 at t = 50, then back up
    let mut v: Vec<usize> = (0..=50).map(|t| 50 - (45 * t) / 50).collect();
    v.extend((1..=50).map(|k| 5 + k));
    let ph = phase_detector(&v).unwrap();
    assert_eq!((ph.trough_period, ph.trough_population), (50, 5));
    assert!(!ph.degenerate);
    assert_eq!(ph.phase1_end, 40);
    assert_eq!(ph.phase2_end, 51);
    let falling: Vec<usize> = (0..20).rev().collect();
    assert!(phase_detector(&falling).unwrap().degenerate);
}

#[test]
fn spearman_examples() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]), Some(1.0));
    assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
    assert_eq!(spearman(&x, &[1.0, 1.0, 1.0, 1.0]), None);
    assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
}

#[test]
fn spearman_matches_statrs_on_ranks() {
    use statrs::statistics::Statistics;
    let x = [0.3, 1.2, 0.7, 2.2, 1.9, 0.1];
    let y = [1.0, 0.0, 2.0, 3.0, 1.0, 0.0];
    let (rx, ry) = (ranks(&x), ranks(&y));
    let pearson = rx.clone().covariance(ry.clone()) / (rx.std_dev() * ry.std_dev());
    assert!((spearman(&x, &y).unwrap() - pearson).abs() < 1e-12);
}

#[test]
fn moving_average_examples() {
    assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
    assert_eq!(moving_average(&[], 3), Vec::<f64>::new());
}

#[test]
fn survivor_stats_all_survive() {
    let cfg = SimConfig { horizon: 1, exit_threshold: 0.0, ..small() };
    let ts =
        run_simulation(&SimConfig { q_learning: QLearning { epsilon: 0.0, ..cfg.q_learning.clone() }, ..cfg }).unwrap();
    let s = survivor_stats(&ts);
    assert_eq!(s.survival_rate, 1.0);
    assert_eq!(s.ratio_quotient, None);
}

#[test]
fn ensemble_summary_is_consistent() {
    let runs = run_replications(&small(), &[0, 1, 2]).unwrap();
    let e = summarize(&runs).unwrap();
    assert_eq!(e.replications, 3);
    assert_eq!(e.series.len(), 30);
    assert_eq!(e.runs.len(), 3);
    assert!(summarize(&[]).is_err());
}

#[test]
fn invalid_configs_name_their_field() {
    let bad = SimConfig { entry_rate: 1.5, ..SimConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains("entry_rate"));
    let mut m = SimConfig::default();
    m.model.beta = -1.0;
    assert!(m.validate().unwrap_err().to_string().contains("model.beta"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_update_touches_only_the_acted_entry(
        vals in prop::array::uniform4(-5.0f64..5.0),
        a in 0usize..4,
        r in -1.0f64..1.0,
        lr in 0.0f64..=1.0,
        g in 0.0f64..0.99,
    ) {
        let q = QTable { values: vals };
        let up = q_update(&q, Action::ALL[a], r, &ql(lr, g));
        for (i, (new, old)) in up.values.iter().zip(vals).enumerate() {
            if i != a {
                prop_assert_eq!(*new, old);
            }
        }
        prop_assert!(up.values[a].is_finite());
    }

    #[test]
    fn clipped_rewards_keep_q_bounded(rewards in prop::collection::vec(-10.0f64..10.0, 1..300), g in 0.0f64..0.95) {
        let cfg = ql(0.5, g);
        let bound = 1.0 / (1.0 - g);
        let mut q = QTable { values: [0.0; 4] };
        for (k, r) in rewards.iter().enumerate() {
            q = q_update(&q, Action::ALL[k % 4], r.clamp(-1.0, 1.0), &cfg);
            prop_assert!(q.values.iter().all(|v| v.abs() <= bound + 1e-12));
        }
    }

    #[test]
    fn capability_is_monotone_and_capped(qt in 0.01f64..0.95, qc in 0.01f64..0.65, steps in 1usize..100) {
        let cfg = SimConfig::default();
        let mut a = ai_agent(qt, qc);
        for _ in 0..steps {
            let next = ai_capability_step(&a, &cfg);
            prop_assert!(next.quality.q_tech >= a.quality.q_tech && next.quality.q_tech <= 0.95);
            prop_assert!(next.quality.q_creative >= a.quality.q_creative && next.quality.q_creative <= 0.65);
            a = next;
        }
    }

    #[test]
    fn choice_is_an_offer_or_outside(theta in 0.0f64..30.0, qs in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..6), seed in any::<u64>()) {
        let offers: Vec<Offer> = qs.iter().enumerate().map(|(i, &(q, p))| offer(q, p, i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(j) = consumer_choice(theta, &offers, 0.1, 0.05, &mut rng) {
            prop_assert!(j < offers.len());
        }
    }
}
