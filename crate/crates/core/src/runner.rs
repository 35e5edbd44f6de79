//! Command pipelines. Each command turns a resolved config into an in-memory
//! output tree plus a JSON summary; writing to disk happens elsewhere, so
//! every pipeline is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abm::{self, EnsembleSummary, TimeSeries};
use crate::calibrate::{self, GaResult, PARAM_NAMES};
use crate::econ::SegmentationOutcome;
use crate::io::plot;
use crate::io::table::{json_document, Cell, Table};
use crate::io::{Format, OutputFile, RunConfig};
use crate::meanfield::{self, EvolveOptions, Landscape, SkillDensity, SkillGrid};
use crate::policy::{self, BetaScanRow};
use crate::static_eq::{self, MarketEquilibrium, QualityHistogram};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    Static,
    Hollow,
    Meanfield,
    Abm { replications: usize },
    Calibrate,
    Policy,
    Reproduce,
}

/// A command together with the output options that shape its files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: Command,
    pub format: Format,
    pub plots: bool,
}

impl Invocation {
    pub fn new(command: Command) -> Self {
        Invocation { command, format: Format::Csv, plots: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// Printed by the CLI; also written as `summary.json`.
    pub summary: Value,
}

/// Runs `inv` against `cfg`.
pub fn execute(inv: &Invocation, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = Outputs::new(inv.format, inv.plots);
    let summary = match inv.command {
        Command::Static => static_section(cfg, &mut out)?.1,
        Command::Hollow => hollow_section(cfg, &mut out)?.1,
        Command::Meanfield => meanfield_section(cfg, &mut out)?.1,
        Command::Abm { replications } => abm_section(cfg, replications, &mut out)?.1,
        Command::Calibrate => calibrate_section(cfg, &cfg.ga, &mut out)?.1,
        Command::Policy => policy_section(cfg, &mut out)?.1,
        Command::Reproduce => crate::suite::reproduce(cfg, &mut out)?,
    };
    out.push("summary.json", json_document("summary", &summary));
    Ok(RunOutput { files: out.files, summary })
}

/// Accumulates the files of one run.
#[derive(Debug)]
pub struct Outputs {
    pub format: Format,
    pub plots: bool,
    pub files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(format: Format, plots: bool) -> Self {
        Outputs { format, plots, files: Vec::new() }
    }

    pub fn push(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.push(OutputFile::new(path, bytes));
    }

    /// Writes `table` as `<stem>.<ext>` in the chosen format.
    pub fn table(&mut self, stem: &str, table: &Table) {
        let path = format!("{stem}.{}", self.format.extension());
        let bytes = self.format.encode(table);
        self.push(path, bytes);
    }

    /// Writes one record: a JSON document, or a one-row CSV table.
    pub fn record<T: Serialize>(&mut self, stem: &str, schema: &str, value: &T) -> Result<()> {
        match self.format {
            Format::Json => {
                let bytes = json_document(schema, value);
                self.push(format!("{stem}.json"), bytes);
            }
            Format::Csv => self.table(stem, &records_table(schema, std::slice::from_ref(value))?),
        }
        Ok(())
    }

    pub fn svg(&mut self, name: &str, svg: Result<String>) -> Result<()> {
        if self.plots {
            self.push(format!("plots/{name}.svg"), svg?.into_bytes());
        }
        Ok(())
    }
}

/// Table with one row per record; nested fields become dotted columns and
/// arrays are kept as JSON text.
pub fn records_table<T: Serialize>(schema: &str, records: &[T]) -> Result<Table> {
    let mut columns: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(String, Cell)>> = Vec::new();
    for r in records {
        let mut flat = Vec::new();
        flatten("", &serde_json::to_value(r)?, &mut flat);
        if columns.is_empty() {
            columns = flat.iter().map(|(k, _)| k.clone()).collect();
        }
        rows.push(flat);
    }
    let names: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new(schema, &names);
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Schema(format!("records for {schema} do not share one shape")));
        }
        t.push(row.into_iter().map(|(_, c)| c).collect());
    }
    Ok(t)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Cell)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), Cell::Num(f64::NAN))),
        Value::Bool(b) => out.push((prefix.to_string(), Cell::Bool(*b))),
        Value::Number(n) => out.push((
            prefix.to_string(),
            match n.as_i64() {
                Some(i) => Cell::Int(i),
                None => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
        )),
        Value::String(s) => out.push((prefix.to_string(), Cell::Text(s.clone()))),
        Value::Array(_) => out.push((prefix.to_string(), Cell::Text(v.to_string()))),
    }
}

pub struct StaticResult {
    pub monopoly: MarketEquilibrium,
    pub duopoly: MarketEquilibrium,
}

pub fn static_section(cfg: &RunConfig, out: &mut Outputs) -> Result<(StaticResult, Value)> {
    let monopoly = static_eq::solve_monopoly_benchmark(&cfg.model)?;
    let duopoly = static_eq::solve_duopoly_equilibrium(&cfg.model)?;
    out.record("static/equilibrium", "market_equilibrium", &duopoly)?;
    out.record("static/monopoly", "market_equilibrium", &monopoly)?;
    out.table("static/comparison", &records_table("comparison", &static_eq::comparison_table(&monopoly, &duopoly))?);
    let summary = json!({
        "duopoly": duopoly,
        "monopoly": monopoly,
        "average_price_falls": duopoly.average_price() < monopoly.average_price(),
        "coverage_ratio": duopoly.coverage() / monopoly.coverage(),
        "cs_rises": duopoly.cs > monopoly.cs,
    });
    Ok((StaticResult { monopoly, duopoly }, summary))
}

/// Skill points sampled for the quality histograms.
pub const HOLLOW_SAMPLE: usize = 20_000;

pub fn hollow_section(cfg: &RunConfig, out: &mut Outputs) -> Result<(QualityHistogram, Value)> {
    let h = static_eq::quality_distribution_histogram(&cfg.model, HOLLOW_SAMPLE)?;
    let mut t = Table::new("quality_histogram", &["bin_left", "bin_right", "mass_pre", "mass_post"]);
    for i in 0..h.bin_left.len() {
        t.push(vec![h.bin_left[i].into(), h.bin_right[i].into(), h.mass_pre[i].into(), h.mass_post[i].into()]);
    }
    out.table("hollow/histogram", &t);
    out.svg("quality", plot::quality_figure(&t))?;
    let cap = cfg.model.q_bar_a;
    let summary = json!({
        "segmentation": h.segmentation,
        "interior": h.segmentation.outcome == SegmentationOutcome::Interior,
        "q_bar_a": cap,
        "post_mass_above_cap": h.post_mass_in(cap, cap + 0.05),
    });
    out.push("hollow/segmentation.json", json_document("segmentation", &h.segmentation));
    Ok((h, summary))
}

pub struct MeanfieldResult {
    pub initial: SkillDensity,
    pub evolution: meanfield::Evolution,
    pub gibbs: SkillDensity,
    pub gibbs_converged: bool,
}

pub fn meanfield_section(cfg: &RunConfig, out: &mut Outputs) -> Result<(MeanfieldResult, Value)> {
    let mf = &cfg.meanfield;
    let grid = SkillGrid::new(mf.lower, mf.upper, mf.n_cells)?;
    let initial = SkillDensity::truncated_gaussian(grid, mf.initial_mean, mf.initial_sd)?;
    let coupled = meanfield::baseline_landscape(&grid, &cfg.model)?;
    let landscape = if mf.coupled { coupled } else { Landscape::Fixed(coupled.values(&initial)) };
    let sigma = cfg.model.sigma;
    let opts =
        EvolveOptions { t_end: mf.t_end, record_every: mf.record_every, safety: mf.safety, ..EvolveOptions::default() };
    let evolution = meanfield::evolve(&initial, &landscape, sigma, opts)?;
    let g = meanfield::gibbs_stationary(grid, &landscape, sigma)?;
    out.table("meanfield/diagnostics", &records_table("meanfield_diagnostics", &evolution.diagnostics)?);
    let mut d = Table::new("meanfield_density", &["s", "initial", "final", "gibbs"]);
    for (i, s) in grid.centers().into_iter().enumerate() {
        d.push(vec![s.into(), initial.mass[i].into(), evolution.last.mass[i].into(), g.density.mass[i].into()]);
    }
    out.table("meanfield/density", &d);
    let diag = &evolution.diagnostics;
    let monotone = diag.windows(2).all(|w| w[1].free_energy <= w[0].free_energy + 1e-9);
    let summary = json!({
        "steps": evolution.steps,
        "final_time": diag.last().map(|x| x.time),
        "stopped_early": evolution.stopped_early,
        "free_energy_non_increasing": monotone,
        "max_mass_error": diag.iter().map(|x| x.mass_error).fold(0.0, f64::max),
        "l1_to_gibbs": evolution.last.l1_distance(&g.density),
        "gibbs_converged": g.converged,
        "final_mean": evolution.last.mean(),
        "final_variance": evolution.last.variance(),
    });
    out.svg(
        "meanfield",
        Ok(plot::line_chart(
            "Skill density",
            "skill",
            "mass",
            &[
                density_series("initial", &initial),
                density_series("final", &evolution.last),
                density_series("Gibbs", &g.density),
            ],
        )),
    )?;
    Ok((MeanfieldResult { initial, evolution, gibbs: g.density, gibbs_converged: g.converged }, summary))
}

fn density_series(name: &str, d: &SkillDensity) -> plot::Series {
    plot::Series { name: name.into(), points: d.grid.centers().into_iter().zip(d.mass.iter().copied()).collect() }
}

/// Seeds of an ABM ensemble: consecutive from the master seed.
pub fn abm_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| seed.wrapping_add(i)).collect()
}

pub fn abm_section(cfg: &RunConfig, replications: usize, out: &mut Outputs) -> Result<(EnsembleSummary, Value)> {
    if replications == 0 {
        return Err(Error::invalid("replications", "must be >= 1"));
    }
    let runs = abm::run_replications(&cfg.sim(), &abm_seeds(cfg.seed, replications))?;
    let summary = abm::summarize(&runs)?;
    write_abm(&runs, &summary, out)?;
    let mut value = serde_json::to_value(&summary)?;
    if let Value::Object(m) = &mut value {
        m.remove("series");
        m.remove("runs");
    }
    Ok((summary, value))
}

fn write_abm(runs: &[TimeSeries], summary: &EnsembleSummary, out: &mut Outputs) -> Result<()> {
    out.table("abm/runs", &records_table("abm_runs", &summary.runs)?);
    let series = records_table("abm_series", &summary.series)?;
    out.table("abm/series", &series);
    if runs.len() == 1 {
        out.table("abm/records", &records_table("abm_records", &runs[0].records)?);
    }
    let mut agents = Table::new(
        "abm_agents",
        &["id", "initial_s_tech", "initial_s_creative", "final_s_tech", "final_s_creative", "survived"],
    );
    for a in runs[0].agents.iter().filter(|a| a.entry_period == 0) {
        agents.push(vec![
            a.id.into(),
            a.initial_s_tech.into(),
            a.initial_s_creative.into(),
            a.final_s_tech.into(),
            a.final_s_creative.into(),
            a.survived().into(),
        ]);
    }
    out.table("abm/agents", &agents);
    out.svg("population", plot::population_figure(&series))?;
    out.svg("skills", plot::skills_figure(&agents))?;
    let hhi: Vec<plot::Series> = vec![
        plot::Series {
            name: "median HHI".into(),
            points: summary.series.iter().map(|p| (p.t as f64, p.hhi)).collect(),
        },
        plot::Series {
            name: "20-period average".into(),
            points: summary.series.iter().map(|p| (p.t as f64, p.hhi_ma)).collect(),
        },
    ];
    out.svg("hhi", Ok(plot::line_chart("Concentration", "period", "HHI", &hhi)))
}

pub struct CalibrationResult {
    pub ga: GaResult,
    /// Survival of the best candidate on each validation seed.
    pub validation_survival: Vec<f64>,
}

pub fn calibrate_section(
    cfg: &RunConfig,
    ga: &calibrate::GaConfig,
    out: &mut Outputs,
) -> Result<(CalibrationResult, Value)> {
    let base = cfg.sim();
    let result = calibrate::ga_search(&cfg.search, ga, &base, cfg.seed)?;
    let seeds = calibrate::validation_seeds(cfg.seed, cfg.reproduce.ga_validation_seeds);
    let best_cfg = cfg.search.apply(&result.best, &base);
    let runs = abm::run_replications(&best_cfg, &seeds)?;
    let validation_survival: Vec<f64> = runs.iter().map(|r| abm::survivor_stats(r).survival_rate).collect();
    out.table("calibrate/generations", &records_table("ga_generations", &result.log)?);
    let fragment: serde_json::Map<String, Value> =
        PARAM_NAMES.iter().zip(&result.best).map(|(k, v)| (k.to_string(), json!(v))).collect();
    let best = json!({ "abm": fragment, "score": result.best_score });
    out.push("calibrate/best.json", json_document("ga_best", &best));
    let mut v = Table::new("ga_validation", &["seed", "survival_rate"]);
    for (s, r) in seeds.iter().zip(&validation_survival) {
        v.push(vec![(*s).into(), (*r).into()]);
    }
    out.table("calibrate/validation", &v);
    let mean = validation_survival.iter().sum::<f64>() / validation_survival.len().max(1) as f64;
    let summary = json!({
        "best": best,
        "evaluations": result.evaluations,
        "validation_mean_survival": mean,
        "validation_interior": mean > 0.0 && mean < 1.0,
    });
    Ok((CalibrationResult { ga: result, validation_survival }, summary))
}

pub struct PolicyOutcome {
    pub rows: Vec<BetaScanRow>,
    pub beta_star: Option<f64>,
}

pub fn policy_section(cfg: &RunConfig, out: &mut Outputs) -> Result<(PolicyOutcome, Value)> {
    let pc = &cfg.policy;
    let rows = policy::beta_scan_on(&cfg.model, &pc.betas, pc.grid_points)?;
    let beta_star = policy::unraveling_threshold(&cfg.model, pc.bisect_lower, pc.bisect_upper, pc.bisect_tol);
    let points: Vec<policy::CurvePoint> = rows.iter().flat_map(|r| r.curve.iter().copied()).collect();
    let curves = records_table("welfare_curves", &points)?;
    out.table("policy/curves", &curves);
    let scan: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
            if let Value::Object(m) = &mut v {
                m.remove("curve");
            }
            v
        })
        .collect();
    out.table("policy/scan", &records_table("beta_scan", &scan)?);
    let verification = policy::verification_counterfactual(&cfg.model, pc.beta_verified.min(cfg.model.beta))?;
    out.push("policy/verification.json", json_document("verification", &verification));
    out.svg("welfare", plot::welfare_figure(&curves))?;
    let summary = json!({
        "beta_star": beta_star,
        "first_interior_beta": policy::first_interior_beta(&rows),
        "scan": scan,
        "verification": {
            "welfare_delta": verification.welfare_delta,
            "human_share_delta": verification.human_share_delta,
        },
    });
    Ok((PolicyOutcome { rows, beta_star }, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Inner {
        a: f64,
        b: Option<f64>,
    }

    #[derive(Serialize)]
    struct Outer {
        n: usize,
        inner: Inner,
        tags: Vec<u8>,
    }

    #[test]
    fn records_flatten_to_dotted_columns() {
        let t = records_table("x", &[Outer { n: 1, inner: Inner { a: 0.5, b: None }, tags: vec![1, 2] }]).unwrap();
        assert_eq!(t.columns, vec!["inner.a", "inner.b", "n", "tags"]);
        assert_eq!(t.rows[0][3], Cell::Text("[1,2]".into()));
        assert!(matches!(t.rows[0][1], Cell::Num(x) if x.is_nan()));
    }

    #[test]
    fn static_json_is_one_equilibrium_record() {
        let inv = Invocation { command: Command::Static, format: Format::Json, plots: false };
        let out = execute(&inv, &RunConfig::default()).unwrap();
        let f = out.files.iter().find(|f| f.path == "static/equilibrium.json").unwrap();
        let doc = crate::io::table::read_json_document(&f.bytes, "market_equilibrium").unwrap();
        assert!(doc.get("p_h").is_some() && doc.get("d_a").is_some());
    }

    #[test]
    fn abm_rejects_zero_replications() {
        let inv = Invocation::new(Command::Abm { replications: 0 });
        assert!(execute(&inv, &RunConfig::default()).is_err());
    }
}
