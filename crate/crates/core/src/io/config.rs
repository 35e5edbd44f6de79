//! Run configuration: one TOML document layered over the built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};

use crate::abm::SimConfig;
use crate::calibrate::{GaConfig, SearchSpace};
use crate::econ::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldConfig {
    pub n_cells: usize,
    pub lower: f64,
    pub upper: f64,
    pub initial_mean: f64,
    pub initial_sd: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Fraction of the stability bound used as the time step.
    pub safety: f64,
    /// Couple the landscape to the AI volume through the pollution term.
    pub coupled: bool,
}

impl Default for MeanfieldConfig {
    fn default() -> Self {
        MeanfieldConfig {
            n_cells: 256,
            lower: 0.0,
            upper: 2.0,
            initial_mean: 0.7,
            initial_sd: 0.2,
            t_end: 2.0,
            record_every: 50,
            safety: 0.9,
            coupled: true,
        }
    }
}

impl MeanfieldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::invalid("n_cells", "must be >= 2"));
        }
        if !(self.lower < self.upper) {
            return Err(Error::invalid("upper", "must exceed lower"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "must be finite and >= 0"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::invalid("safety", "must lie in (0, 1]"));
        }
        if !(self.initial_sd.is_finite() && self.initial_sd > 0.0) {
            return Err(Error::invalid("initial_sd", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub betas: Vec<f64>,
    pub grid_points: usize,
    /// Pollution sensitivity faced by buyers of verified human goods.
    pub beta_verified: f64,
    /// Bracket and tolerance for the welfare sign-change bisection.
    pub bisect_lower: f64,
    pub bisect_upper: f64,
    pub bisect_tol: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            betas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            grid_points: 50,
            beta_verified: 0.0,
            bisect_lower: 0.5,
            bisect_upper: 3.0,
            bisect_tol: 0.01,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(Error::invalid("grid_points", "must be >= 3"));
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::invalid("betas", "must be finite and >= 0"));
        }
        if !(self.beta_verified.is_finite() && self.beta_verified >= 0.0) {
            return Err(Error::invalid("beta_verified", "must be >= 0"));
        }
        if !(self.bisect_lower < self.bisect_upper && self.bisect_tol > 0.0) {
            return Err(Error::invalid("bisect_upper", "bracket must satisfy lower < upper with tol > 0"));
        }
        Ok(())
    }
}

/// Sizes used by `reproduce`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    pub abm_replications: usize,
    pub ga_population: usize,
    pub ga_generations: usize,
    pub ga_validation_seeds: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig { abm_replications: 64, ga_population: 12, ga_generations: 4, ga_validation_seeds: 10 }
    }
}

impl ReproduceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.abm_replications < 1 || self.ga_validation_seeds < 1 {
            return Err(Error::invalid("abm_replications", "replication counts must be >= 1"));
        }
        Ok(())
    }
}

/// Everything a run needs. Every field has a default, so an empty document
/// is the baseline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; replaces `abm.seed` for every run.
    pub seed: u64,
    pub model: ModelParams,
    pub meanfield: MeanfieldConfig,
    pub abm: SimConfig,
    pub search: SearchSpace,
    pub ga: GaConfig,
    pub policy: PolicyConfig,
    pub reproduce: ReproduceConfig,
}

impl RunConfig {
    /// Validates every section; errors name the dotted field path.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("model", self.model.validate()),
            ("meanfield", self.meanfield.validate()),
            ("abm", self.abm.validate()),
            ("search", self.search.validate()),
            ("ga", self.ga.validate()),
            ("policy", self.policy.validate()),
            ("reproduce", self.reproduce.validate()),
        ];
        for (section, r) in checks {
            r.map_err(|e| e.within(section))?;
        }
        Ok(())
    }

    /// The ABM configuration carrying the master seed.
    pub fn sim(&self) -> SimConfig {
        self.abm.with_seed(self.seed)
    }
}

/// Reads and resolves a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        line: None,
        message: e.to_string(),
    })?;
    parse_config(&src, &path.display().to_string())
}

/// Parses a TOML document over the defaults. `origin` labels errors.
pub fn parse_config(src: &str, origin: &str) -> Result<RunConfig> {
    let fail = |line: Option<usize>, message: String| Error::Config { path: origin.to_string(), line, message };
    let doc =
        DeTable::parse(src).map_err(|e| fail(e.span().map(|s| line_of(src, s.start)), e.message().to_string()))?;
    let reference = serde_json::to_value(RunConfig::default())?;
    let serde_json::Value::Object(reference) = reference else { unreachable!("config serializes to a map") };
    check_keys(doc.get_ref(), &reference, "", src).map_err(|(line, m)| fail(Some(line), m))?;
    let cfg: RunConfig =
        toml::from_str(src).map_err(|e| fail(e.span().map(|s| line_of(src, s.start)), e.message().to_string()))?;
    cfg.validate().map_err(|e| match e {
        Error::InvalidParam { field, reason } => {
            let line = key_line(doc.get_ref(), &field, src);
            fail(line, format!("invalid `{field}`: {reason}"))
        }
        e => fail(None, e.to_string()),
    })?;
    Ok(cfg)
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn check_keys(
    table: &DeTable,
    reference: &serde_json::Map<String, serde_json::Value>,
    prefix: &str,
    src: &str,
) -> std::result::Result<(), (usize, String)> {
    for (k, v) in table.iter() {
        let key: &str = k.get_ref();
        let full = join(prefix, key);
        match reference.get(key) {
            None => {
                let hint = nearest_key(key, reference.keys().map(String::as_str))
                    .map(|s| format!("; did you mean `{}`?", join(prefix, s)))
                    .unwrap_or_default();
                return Err((line_of(src, k.span().start), format!("unknown key `{full}`{hint}")));
            }
            Some(serde_json::Value::Object(sub)) => {
                if let DeValue::Table(t) = v.get_ref() {
                    check_keys(t, sub, &full, src)?;
                }
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Closest candidate by edit distance, if it is close enough to be a typo.
pub fn nearest_key<'a>(key: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    let limit = (key.chars().count() / 3).max(2);
    candidates.map(|c| (strsim::levenshtein(key, c), c)).filter(|(d, _)| *d <= limit).min().map(|(_, c)| c)
}

fn key_line(table: &DeTable, dotted: &str, src: &str) -> Option<usize> {
    let mut parts = dotted.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        let (k, v) = current.iter().find(|(k, _)| {
            let name: &str = k.get_ref();
            name == part
        })?;
        if parts.peek().is_none() {
            return Some(line_of(src, k.span().start));
        }
        match v.get_ref() {
            DeValue::Table(t) => current = t,
            _ => return Some(line_of(src, k.span().start)),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_baseline() {
        assert_eq!(parse_config("", "t").unwrap(), RunConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let c = parse_config("seed = 9\n[model]\nbeta = 0.5\n[abm.q_learning]\nepsilon = 0.2\n", "t").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.model.beta, 0.5);
        assert_eq!(c.abm.q_learning.epsilon, 0.2);
        assert_eq!(c.model.eta, ModelParams::default().eta);
        assert_eq!(c.sim().seed, 9);
    }

    #[test]
    fn negative_beta_names_the_field_and_line() {
        let e = parse_config("\n[model]\nbeta = -1.0\n", "cfg.toml").unwrap_err();
        let Error::Config { path, line, message } = e else { panic!("{e}") };
        assert_eq!(path, "cfg.toml");
        assert_eq!(line, Some(3));
        assert!(message.contains("model.beta"), "{message}");
    }

    #[test]
    fn typo_gets_a_suggestion() {
        let e = parse_config("[model]\nbetta = 1.0\n", "t").unwrap_err();
        let Error::Config { line, message, .. } = e else { panic!("{e}") };
        assert_eq!(line, Some(2));
        assert!(message.contains("unknown key `model.betta`"), "{message}");
        assert!(message.contains("did you mean `model.beta`"), "{message}");
    }

    #[test]
    fn nested_abm_errors_keep_their_path() {
        let e = parse_config("[abm.model]\nc_h = -2.0\n", "t").unwrap_err();
        assert!(e.to_string().contains("abm.model.c_h"), "{e}");
        let e = parse_config("[abm]\nentry_rate = 2.0\n", "t").unwrap_err();
        assert!(e.to_string().contains("abm.entry_rate"), "{e}");
    }

    #[test]
    fn syntax_and_type_errors_carry_lines() {
        let Error::Config { line, .. } = parse_config("seed = 1\n[model\n", "t").unwrap_err() else { panic!() };
        assert_eq!(line, Some(2));
        let Error::Config { line, .. } = parse_config("seed = 1\n\nseed2 = 3", "t").unwrap_err() else { panic!() };
        assert_eq!(line, Some(3));
        let Error::Config { line, .. } = parse_config("[model]\n\nbeta = \"x\"\n", "t").unwrap_err() else { panic!() };
        assert_eq!(line, Some(3));
    }

    #[test]
    fn unrelated_keys_get_no_suggestion() {
        let e = parse_config("zzzzzzzz = 1\n", "t").unwrap_err();
        assert!(!e.to_string().contains("did you mean"), "{e}");
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse_config(&text, "t").unwrap(), c);
    }
}
