//! Configuration, tables, manifests and plots.

pub mod config;
pub mod manifest;
pub mod plot;
pub mod table;

use serde::{Deserialize, Serialize};

pub use config::{load_config, parse_config, RunConfig};
pub use manifest::{sha256_hex, RunManifest};
pub use table::{Cell, Table, SCHEMA_VERSION};

/// Encoding for tabular outputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn encode(self, table: &Table) -> Vec<u8> {
        match self {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        }
    }
}

/// One file of a run's output tree, as a path relative to the output root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn new(path: impl Into<String>, bytes: Vec<u8>) -> Self {
        OutputFile { path: path.into(), bytes }
    }
}
