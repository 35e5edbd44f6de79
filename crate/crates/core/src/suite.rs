//! Acceptance checks and the `reproduce` pipeline that runs them.

use std::path::Path;

use astro_float::{BigFloat, Consts, RoundingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abm::{self, Action, EnsembleSummary, QLearning, QTable};
use crate::calibrate::{self, GaConfig};
use crate::econ::{self, AiCost, HedonicSchedule, ModelParams, Region, Technology};
use crate::io::manifest::{read_tree, RunManifest};
use crate::io::table::json_document;
use crate::io::{OutputFile, RunConfig};
use crate::meanfield::{self, EvolveOptions, Landscape, SkillDensity, SkillGrid};
use crate::policy::{self, CURVE_POINTS};
use crate::runner::{self, execute, CalibrationResult, Invocation, Outputs, StaticResult};
use crate::static_eq::QualityHistogram;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: u8, name: &str, passed: bool, detail: String) -> Self {
        Check { id, name: name.to_string(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("criterion {:>2} {} {}: {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Runs every pipeline, evaluates criteria 1 to 13 and writes the report.
/// Criterion 14 needs the written tree and lives in [`verify_reproduction`].
pub fn reproduce(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let rc = &cfg.reproduce;
    let (st, _) = runner::static_section(cfg, out)?;
    let (hist, _) = runner::hollow_section(cfg, out)?;
    runner::meanfield_section(cfg, out)?;
    let (ens, _) = runner::abm_section(cfg, rc.abm_replications, out)?;
    let ga = GaConfig { population_size: rc.ga_population, generations: rc.ga_generations, ..cfg.ga.clone() };
    let (cal, _) = runner::calibrate_section(cfg, &ga, out)?;
    runner::policy_section(cfg, out)?;
    let checks = vec![
        formula_exactness(cfg.seed),
        middle_class_hollow(&hist, &cfg.model),
        segmentation_oracle(&cfg.model)?,
        static_direction(&st, &ens),
        h_theorem(cfg.seed)?,
        gibbs_stationarity(&cfg.model)?,
        shock_therapy(&ens, cfg.abm.n_humans),
        survival_rate(&ens),
        skill_reconfiguration(&ens),
        hhi_dynamics(&ens),
        inverted_u(&cfg.model)?,
        tax_internalization(&cfg.model)?,
        ga_sanity(cfg.seed, &cal),
    ];
    let text: String = checks.iter().map(|c| c.line() + "\n").collect();
    out.push("report.txt", text.into_bytes());
    out.push("report.json", json_document("acceptance_report", &checks));
    Ok(json!({ "checks": checks, "all_passed": checks.iter().all(|c| c.passed) }))
}

/// Regenerates the tree in `dir` from its manifest and compares bytes.
pub fn verify_reproduction(dir: &Path) -> Result<Check> {
    let manifest = RunManifest::read(dir)?;
    let on_disk = read_tree(dir, &manifest)?;
    let stale = manifest.mismatches(&on_disk);
    let again = execute(&manifest.invocation, &manifest.config)?;
    let regenerated = manifest.mismatches(&again.files);
    let mut regenerated_files = again.files.clone();
    regenerated_files.sort_by(|a, b| a.path.cmp(&b.path));
    let identical = on_disk == regenerated_files;
    let passed = stale.is_empty() && regenerated.is_empty() && identical;
    Ok(Check::new(
        14,
        "determinism and manifest round-trip",
        passed,
        format!(
            "{} files; checksum mismatches on disk {:?}, after regeneration {:?}; trees identical {identical}",
            manifest.files.len(),
            stale,
            regenerated
        ),
    ))
}

/// Criterion 14 without a directory: serializes a manifest for `files`,
/// parses it back and reruns from it alone.
pub fn verify_rerun(inv: &Invocation, cfg: &RunConfig, files: &[OutputFile]) -> Result<Check> {
    let manifest = RunManifest::from_bytes(&RunManifest::new(*inv, cfg, files).to_bytes())?;
    let again = execute(&manifest.invocation, &manifest.config)?;
    let mismatched = manifest.mismatches(&again.files);
    let identical = files == again.files.as_slice();
    Ok(Check::new(
        14,
        "determinism and manifest round-trip",
        mismatched.is_empty() && identical,
        format!(
            "{} files; checksum mismatches after regeneration {mismatched:?}; trees identical {identical}",
            manifest.files.len()
        ),
    ))
}

/// Reads checks back from a written `report.json`.
pub fn read_report(dir: &Path) -> Result<Vec<Value>> {
    let bytes = std::fs::read(dir.join("report.json"))?;
    let data = crate::io::table::read_json_document(&bytes, "acceptance_report")?;
    data.as_array().cloned().ok_or_else(|| Error::Schema("report is not a list".into()))
}

/// Relative tolerance of criterion 1.
pub const FORMULA_TOL: f64 = 1e-12;
pub const FORMULA_SAMPLES: usize = 1000;

/// High-precision reference evaluations, written from the formulas alone.
pub mod oracle {
    use super::*;

    pub const PREC: usize = 256;
    const RM: RoundingMode = RoundingMode::ToEven;

    pub struct Oracle {
        cc: Consts,
    }

    impl Default for Oracle {
        fn default() -> Self {
            Self::new()
        }
    }

    fn b(x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    impl Oracle {
        pub fn new() -> Self {
            Oracle { cc: Consts::new().expect("constants cache") }
        }

        pub fn penalty(&mut self, beta: f64, eta: f64, d: f64) -> BigFloat {
            let inner = b(1.0).add(&b(eta).mul(&b(d), PREC, RM), PREC, RM);
            b(beta).mul(&inner.ln(PREC, RM, &mut self.cc), PREC, RM)
        }

        pub fn utility(&mut self, theta: f64, q: f64, price: f64, beta: f64, eta: f64, d: f64) -> BigFloat {
            let pen = self.penalty(beta, eta, d);
            b(theta).mul(&b(q), PREC, RM).sub(&b(price), PREC, RM).sub(&pen, PREC, RM)
        }

        pub fn threshold(&mut self, price: f64, q: f64, beta: f64, eta: f64, d: f64) -> BigFloat {
            let pen = self.penalty(beta, eta, d);
            b(price).add(&pen, PREC, RM).div(&b(q), PREC, RM)
        }

        pub fn human_cost(&self, gamma: f64, q: f64) -> BigFloat {
            b(0.5).mul(&b(gamma), PREC, RM).mul(&b(q), PREC, RM).mul(&b(q), PREC, RM)
        }

        pub fn ai_cost(&self, c_a: f64, kappa: f64, q: f64) -> BigFloat {
            b(c_a).mul(&b(q), PREC, RM).add(&b(kappa), PREC, RM)
        }

        pub fn profit_ai(&self, price: f64, c_a: f64, q_bar: f64, kappa: f64) -> BigFloat {
            b(price).sub(&self.ai_cost(c_a, kappa, q_bar), PREC, RM)
        }

        pub fn profit_human(&self, s: f64, alpha: f64, gamma: f64, sched: HedonicSchedule) -> BigFloat {
            let q = b(alpha).mul(&b(s), PREC, RM);
            let price = b(sched.linear).mul(&q, PREC, RM).add(
                &b(0.5).mul(&b(sched.convex), PREC, RM).mul(&q, PREC, RM).mul(&q, PREC, RM),
                PREC,
                RM,
            );
            let cost = b(0.5).mul(&b(gamma), PREC, RM).mul(&q, PREC, RM).mul(&q, PREC, RM);
            price.sub(&cost, PREC, RM)
        }

        pub fn q_update(&self, q_acted: f64, q_max: f64, reward: f64, lr: f64, discount: f64) -> BigFloat {
            let keep = b(1.0).sub(&b(lr), PREC, RM).mul(&b(q_acted), PREC, RM);
            let target = b(reward).add(&b(discount).mul(&b(q_max), PREC, RM), PREC, RM);
            keep.add(&b(lr).mul(&target, PREC, RM), PREC, RM)
        }

        pub fn tax(&self, beta: f64, eta: f64, d: f64) -> BigFloat {
            let den = b(1.0).add(&b(eta).mul(&b(d), PREC, RM), PREC, RM);
            b(beta).mul(&b(eta), PREC, RM).div(&den, PREC, RM)
        }
    }

    /// `|value - exact| / |exact|`, with an exact zero demanding an exact zero.
    pub fn relative_error(value: f64, exact: &BigFloat) -> f64 {
        let diff = b(value).sub(exact, PREC, RM).abs();
        if exact.is_zero() {
            return if value == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let rel = diff.div(&exact.abs(), PREC, RM);
        format!("{rel}").parse::<f64>().unwrap_or(f64::INFINITY)
    }
}

/// Criterion 1: closed forms against the high-precision oracle.
pub fn formula_exactness(seed: u64) -> Check {
    let (worst, failures) = formula_errors(seed, FORMULA_SAMPLES);
    let passed = failures.is_empty();
    let detail = format!(
        "{} draws per formula, worst relative error {}{}",
        FORMULA_SAMPLES,
        worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", "),
        if passed { String::new() } else { format!("; failing: {failures:?}") }
    );
    Check::new(1, "formula exactness", passed, detail)
}

/// Worst relative error per formula, and the formulas over tolerance.
pub fn formula_errors(seed: u64, samples: usize) -> (Vec<(&'static str, f64)>, Vec<&'static str>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf0f0_0001);
    let mut o = oracle::Oracle::new();
    let names = [
        "pollution_penalty",
        "consumer_utility",
        "participation_threshold",
        "human_cost",
        "ai_cost",
        "envelope_cost",
        "profit_ai",
        "profit_human",
        "q_update",
        "pigouvian_tax",
    ];
    let mut worst = [0.0f64; 10];
    for _ in 0..samples {
        let p = ModelParams {
            beta: rng.random_range(0.0..5.0),
            eta: 10f64.powf(rng.random_range(-1.0..4.0)),
            c_a: rng.random_range(0.0..1.0),
            kappa: rng.random_range(0.0..1.0),
            gamma: rng.random_range(0.1..3.0),
            alpha: rng.random_range(0.1..1.0),
            theta_bar: 100.0,
            ..ModelParams::default()
        };
        let d = rng.random_range(0.0..1.0);
        let theta = rng.random_range(0.0..p.theta_bar);
        let q = rng.random_range(0.01..1.5);
        let price = rng.random_range(0.0..50.0);
        let s = rng.random_range(0.0..1.0);
        let mut errs = [0.0; 10];
        errs[0] = oracle::relative_error(econ::pollution_penalty(d, &p).unwrap(), &o.penalty(p.beta, p.eta, d));
        errs[1] = oracle::relative_error(
            econ::consumer_utility(theta, q, price, d, &p).unwrap(),
            &o.utility(theta, q, price, p.beta, p.eta, d),
        );
        errs[2] = oracle::relative_error(
            econ::participation_threshold(price, q, d, &p).unwrap(),
            &o.threshold(price, q, p.beta, p.eta, d),
        );
        errs[3] = oracle::relative_error(econ::human_cost(q, &p), &o.human_cost(p.gamma, q));
        let qa = rng.random_range(0.0..p.q_bar_a);
        errs[4] = match econ::ai_cost(qa, &p) {
            AiCost::Feasible(c) => oracle::relative_error(c, &o.ai_cost(p.c_a, p.kappa, qa)),
            AiCost::Infeasible => f64::INFINITY,
        };
        let (env, tech) = econ::envelope_cost(qa, &p);
        let (h, a) = (o.human_cost(p.gamma, qa), o.ai_cost(p.c_a, p.kappa, qa));
        let exact_min = if a.cmp(&h).is_some_and(|c| c < 0) { (a, Technology::Ai) } else { (h, Technology::Human) };
        errs[5] = if tech == exact_min.1 { oracle::relative_error(env, &exact_min.0) } else { f64::INFINITY };
        let cap_price = rng.random_range(0.0..10.0);
        errs[6] = oracle::relative_error(
            econ::profit_ai(cap_price, &p).unwrap(),
            &o.profit_ai(cap_price, p.c_a, p.q_bar_a, p.kappa),
        );
        let sched = HedonicSchedule { linear: rng.random_range(0.0..3.0), convex: rng.random_range(0.0..3.0) };
        errs[7] = oracle::relative_error(
            econ::profit_human(s, &sched, &p).unwrap(),
            &o.profit_human(s, p.alpha, p.gamma, sched),
        );
        let ql = QLearning {
            learning_rate: rng.random_range(0.0..1.0),
            discount: rng.random_range(0.0..0.99),
            ..QLearning::default()
        };
        let table = QTable { values: std::array::from_fn(|_| rng.random_range(-1.0..1.0)) };
        let action = Action::ALL[rng.random_range(0..4)];
        let reward = rng.random_range(-1.0..1.0);
        let updated = abm::q_update(&table, action, reward, &ql);
        errs[8] = oracle::relative_error(
            updated.get(action),
            &o.q_update(table.get(action), table.max(), reward, ql.learning_rate, ql.discount),
        );
        errs[9] = oracle::relative_error(policy::pigouvian_tax(d, &p), &o.tax(p.beta, p.eta, d));
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let failures = names.iter().zip(&worst).filter(|(_, e)| !(**e <= FORMULA_TOL)).map(|(n, _)| *n).collect();
    (names.into_iter().zip(worst).collect(), failures)
}

/// Criterion 2: no supplied quality just above the AI cap after the shock,
/// no gaps inside the pre-shock support.
pub fn middle_class_hollow(h: &QualityHistogram, p: &ModelParams) -> Check {
    let gap_mass = h.post_mass_in(p.q_bar_a, p.q_bar_a + 0.05);
    let nz: Vec<usize> = h.mass_pre.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(i, _)| i).collect();
    let (lo, hi) = (nz.first().copied().unwrap_or(0), nz.last().copied().unwrap_or(0));
    let holes = (lo + 1..hi).filter(|&i| h.mass_pre[i] <= 0.0).count();
    Check::new(
        2,
        "middle-class hollow",
        gap_mass == 0.0 && holes == 0 && !nz.is_empty(),
        format!(
            "post-shock mass in (q_A, q_A + 0.05] = {gap_mass}; empty interior pre-shock bins {holes} of {}",
            hi.saturating_sub(lo + 1)
        ),
    )
}

pub const SEGMENTATION_GRID: usize = 10_000;

/// Criterion 3: cutoff regions against per-skill brute force.
pub fn segmentation_oracle(p: &ModelParams) -> Result<Check> {
    let seg = econ::segmentation_cutoffs(&p.schedule, p)?;
    let n = SEGMENTATION_GRID;
    let step = (p.skill_max - p.skill_min) / (n - 1) as f64;
    let mut checked = 0;
    let mut wrong = Vec::new();
    for i in 0..n {
        let s = p.skill_min + step * i as f64;
        let near = |c: f64| (s - c).abs() <= step;
        if near(seg.s_l) || near(seg.s_h) {
            continue;
        }
        checked += 1;
        let brute = econ::best_region(s, &p.schedule, seg.pi_a, p)?;
        if brute != seg.region(s) {
            wrong.push(s);
        }
    }
    let regions = |r: Region| (0..n).filter(|&i| seg.region(p.skill_min + step * i as f64) == r).count();
    Ok(Check::new(
        3,
        "segmentation oracle",
        wrong.is_empty(),
        format!(
            "{checked} grid skills checked, {} disagree; s_L = {:.6}, s_H = {:.6}; exit/AI/human cells {}/{}/{}",
            wrong.len(),
            seg.s_l,
            seg.s_h,
            regions(Region::Exit),
            regions(Region::AdoptAi),
            regions(Region::Human)
        ),
    ))
}

/// Criterion 4: duopoly against monopoly, and the pre-shock concentration
/// of the 50-creator agent market.
pub fn static_direction(st: &StaticResult, ens: &EnsembleSummary) -> Check {
    let (m, d) = (&st.monopoly, &st.duopoly);
    let price_falls = d.average_price() < m.average_price();
    let coverage = d.coverage() / m.coverage();
    let cs_rises = d.cs > m.cs;
    let hhi = ens.pre_shock_hhi.unwrap_or(f64::NAN);
    let hhi_ok = (hhi - 0.02).abs() <= 0.005;
    Check::new(
        4,
        "static directional reproduction",
        price_falls && coverage >= 2.0 && cs_rises && hhi_ok,
        format!(
            "average price {:.4} -> {:.4}; coverage x{coverage:.3}; CS {:.4} -> {:.4}; pre-shock HHI {hhi:.4} (target 0.02 +- 0.005)",
            m.average_price(),
            d.average_price(),
            m.cs,
            d.cs
        ),
    )
}

pub const H_LANDSCAPES: usize = 20;
pub const H_RESOLUTIONS: [usize; 3] = [32, 64, 128];

/// Random smooth landscape: a few sine modes on the unit interval.
fn random_landscape<R: Rng>(grid: &SkillGrid, rng: &mut R) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|k| (rng.random_range(-1.0..1.0) / (k + 1) as f64, (k + 1) as f64, rng.random_range(0.0..6.3)))
        .collect();
    let slope = rng.random_range(-1.0..1.0);
    grid.centers()
        .into_iter()
        .map(|s| slope * s + modes.iter().map(|(a, f, ph)| a * (std::f64::consts::PI * f * s + ph).sin()).sum::<f64>())
        .collect()
}

/// Criterion 5: free energy never rises and mass is conserved.
pub fn h_theorem(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf0f0_0005);
    let mut worst_rise: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    let mut steps = 0;
    for _ in 0..H_LANDSCAPES {
        let sigma = rng.random_range(0.05..0.5);
        let (mean, sd) = (rng.random_range(0.2..0.8), rng.random_range(0.05..0.3));
        let shape: Vec<(f64, f64, f64)> = (0..4).map(|_| (rng.random(), rng.random(), rng.random())).collect();
        for &n in &H_RESOLUTIONS {
            let grid = SkillGrid::new(0.0, 1.0, n)?;
            // the same landscape at each resolution
            let mut lr = ChaCha8Rng::seed_from_u64((shape[0].0 * 1e9) as u64);
            let pi = random_landscape(&grid, &mut lr);
            let init = SkillDensity::truncated_gaussian(grid, mean, sd)?;
            let ev = meanfield::evolve(
                &init,
                &Landscape::Fixed(pi),
                sigma,
                EvolveOptions { t_end: 0.2, record_every: 1, ..EvolveOptions::default() },
            )?;
            steps += ev.steps;
            for w in ev.diagnostics.windows(2) {
                worst_rise = worst_rise.max(w[1].free_energy - w[0].free_energy);
            }
            worst_mass = ev.diagnostics.iter().map(|d| d.mass_error).fold(worst_mass, f64::max);
        }
    }
    Ok(Check::new(
        5,
        "H-theorem",
        worst_rise <= 1e-9 && worst_mass <= 1e-10,
        format!(
            "{H_LANDSCAPES} landscapes x {H_RESOLUTIONS:?} cells, {steps} steps; largest free-energy rise {worst_rise:.2e}, largest mass error {worst_mass:.2e}"
        ),
    ))
}

pub const GIBBS_CELLS: usize = 256;

/// Criterion 6: long-run density against the Gibbs state.
pub fn gibbs_stationarity(p: &ModelParams) -> Result<Check> {
    let grid = SkillGrid::new(0.0, 2.0, GIBBS_CELLS)?;
    let init = SkillDensity::truncated_gaussian(grid, 0.7, 0.2)?;
    let coupled = meanfield::baseline_landscape(&grid, p)?;
    let fixed = Landscape::Fixed(coupled.values(&init));
    let opts = EvolveOptions { t_end: 500.0, record_every: 10_000, stop_rate: 1e-9, ..EvolveOptions::default() };
    let ev_fixed = meanfield::evolve(&init, &fixed, p.sigma, opts)?;
    let g_fixed = meanfield::gibbs_fixed(grid, &fixed.values(&init), p.sigma)?;
    let ev_coupled = meanfield::evolve(&init, &coupled, p.sigma, opts)?;
    let g_coupled = meanfield::gibbs_stationary(grid, &coupled, p.sigma)?;
    let l1_fixed = ev_fixed.last.l1_distance(&g_fixed);
    let l1_coupled = ev_coupled.last.l1_distance(&g_coupled.density);
    Ok(Check::new(
        6,
        "Gibbs stationarity",
        l1_fixed <= 1e-3 && l1_coupled <= 1e-3 && g_coupled.converged,
        format!(
            "L1 to Gibbs: fixed {l1_fixed:.2e} after {} steps, self-consistent {l1_coupled:.2e} after {} steps",
            ev_fixed.steps, ev_coupled.steps
        ),
    ))
}

/// Criterion 7: deep, well-timed trough followed by recovery.
pub fn shock_therapy(e: &EnsembleSummary, n_humans: usize) -> Check {
    let n0 = n_humans as f64;
    let passed = e.replications >= 50
        && (30.0..=90.0).contains(&e.trough_period)
        && e.trough_population < 0.3 * n0
        && e.final_active > e.trough_population;
    Check::new(
        7,
        "shock therapy",
        passed,
        format!(
            "{} seeds; median trough {} humans at T = {}; median final population {}",
            e.replications, e.trough_population, e.trough_period, e.final_active
        ),
    )
}

/// Criterion 8: interior survival of the initial cohort.
pub fn survival_rate(e: &EnsembleSummary) -> Check {
    Check::new(
        8,
        "survival rate",
        e.replications >= 50 && (0.08..=0.30).contains(&e.survival_rate),
        format!("median survival {:.3} over {} seeds (band [0.08, 0.30])", e.survival_rate, e.replications),
    )
}

/// Criterion 9: survivors move from technical to creative skill.
pub fn skill_reconfiguration(e: &EnsembleSummary) -> Check {
    let rq = e.ratio_quotient.unwrap_or(f64::NAN);
    Check::new(
        9,
        "skill reconfiguration",
        e.survivor_d_tech < 0.0 && e.survivor_d_creative > 0.0 && rq > 1.5,
        format!(
            "median survivor d_tech {:.4}, d_creative {:.4}; creative/tech ratio quotient {rq:.3}",
            e.survivor_d_tech, e.survivor_d_creative
        ),
    )
}

/// Criterion 10: concentration rises and keeps rising through Phase II.
pub fn hhi_dynamics(e: &EnsembleSummary) -> Check {
    let initial = e.pre_shock_hhi.unwrap_or(e.initial_hhi);
    let ph = e.median_phases;
    Check::new(
        10,
        "HHI dynamics",
        e.final_hhi > 3.0 * initial && e.hhi_ma_decreases == 0,
        format!(
            "median HHI {initial:.4} -> {:.4} (x{:.2}); Phase II = [{}, {}], 20-period average falls in {} periods",
            e.final_hhi,
            e.final_hhi / initial,
            ph.phase1_end,
            ph.phase2_end,
            e.hhi_ma_decreases
        ),
    )
}

/// Criterion 11: welfare shape at low and high pollution sensitivity, and
/// where duopoly welfare falls below monopoly welfare.
pub fn inverted_u(p: &ModelParams) -> Result<Check> {
    let rows = policy::beta_scan_on(p, &[0.5, 2.5], CURVE_POINTS)?;
    let low = rows[0].monotone;
    let high = rows[1].interior;
    let beta_star = policy::unraveling_threshold(p, 0.5, 3.0, 0.01);
    let star_ok = beta_star.is_some_and(|b| b > 0.5 && b < 3.0);
    Ok(Check::new(
        11,
        "inverted-U welfare",
        low && high && star_ok,
        format!(
            "beta 0.5 monotone {low}; beta 2.5 interior maximum {high}; welfare sign change at beta* = {}",
            beta_star.map_or("none".into(), |b| format!("{b:.3}"))
        ),
    ))
}

/// Criterion 12: the marginal-damage tax decentralizes the planner volume.
pub fn tax_internalization(p: &ModelParams) -> Result<Check> {
    let rows = policy::beta_scan(p, &policy::BETA_SCAN)?;
    let worst = rows.iter().map(|r| r.internalization_residual).fold(0.0, f64::max);
    let welfare_ok = rows.iter().filter(|r| r.beta >= 1.0).all(|r| r.welfare_taxed >= r.welfare_duopoly);
    Ok(Check::new(
        12,
        "tax internalization",
        worst <= policy::INTERNALIZATION_TOL && welfare_ok,
        format!(
            "largest |D_A(tau*) - D_A*| {worst:.4} over beta {:?}; taxed welfare >= untaxed for beta >= 1: {welfare_ok}",
            policy::BETA_SCAN
        ),
    ))
}

/// Criterion 13: sphere self-test, then interior survival of the search
/// result on fresh seeds.
pub fn ga_sanity(seed: u64, cal: &CalibrationResult) -> Check {
    let (sphere_ok, sphere_err) = sphere_self_test(seed);
    let v = &cal.validation_survival;
    let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
    let interior = !v.is_empty() && mean > 0.0 && mean < 1.0;
    Check::new(
        13,
        "GA sanity",
        sphere_ok && interior,
        format!(
            "sphere worst error {sphere_err:.4} of box width in 30 generations; best candidate {:?} survives {mean:.3} on {} fresh seeds (range {:.3}..{:.3})",
            cal.ga.best,
            v.len(),
            v.iter().copied().fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        ),
    )
}

/// Sphere centred inside the calibration box; returns pass flag and the
/// worst coordinate error as a fraction of box width.
pub fn sphere_self_test(seed: u64) -> (bool, f64) {
    let bounds = calibrate::SearchSpace::default().bounds();
    let x0: Vec<f64> = bounds.iter().map(|(lo, hi)| lo + 0.37 * (hi - lo)).collect();
    let ga = GaConfig { generations: 30, ..GaConfig::default() };
    let r = calibrate::optimize(&bounds, &ga, seed, |x| {
        -x.iter().zip(&x0).zip(&bounds).map(|((a, b), (lo, hi))| ((a - b) / (hi - lo)).powi(2)).sum::<f64>()
    });
    let err =
        r.best.iter().zip(&x0).zip(&bounds).map(|((a, b), (lo, hi))| (a - b).abs() / (hi - lo)).fold(0.0, f64::max);
    (err <= 0.01, err)
}
