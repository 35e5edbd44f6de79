use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("quality must be positive for a participation threshold")]
    DegenerateGood,

    #[error("goods are not sortable: q_H = {q_h} must exceed q_A = {q_a}")]
    NonSortable { q_h: f64, q_a: f64 },

    #[error("price schedule undefined at quality {0}")]
    ScheduleDomain(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("time step {dt} exceeds stability bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("config error at {path}{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { path: String, line: Option<usize>, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam { field: field.into(), reason: reason.into() }
    }

    /// Prepends `prefix.` to the field of a parameter error.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::InvalidParam { field, reason } => Error::InvalidParam { field: format!("{prefix}.{field}"), reason },
            e => e,
        }
    }

    /// Short machine-readable kind, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::DegenerateGood => "degenerate_good",
            Error::NonSortable { .. } => "non_sortable",
            Error::ScheduleDomain(_) => "schedule_domain",
            Error::InvalidParam { .. } => "invalid_param",
            Error::StepSize { .. } => "step_size",
            Error::Solver(_) => "solver",
            Error::Config { .. } => "config",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
