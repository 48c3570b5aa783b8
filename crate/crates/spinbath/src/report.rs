use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::files::{sha256_file, write_text};

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(path: &Path) -> CliResult<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// JSON artifact of one command. Wall time is deliberately absent so that
/// identical inputs give byte-identical reports; it goes to stderr instead.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub toolkit_version: String,
    pub inputs: Vec<InputFile>,
    pub master_seed: Option<u64>,
    pub parameters: Value,
    pub results: Value,
}

impl Report {
    pub fn new(command: &str, inputs: Vec<InputFile>, master_seed: Option<u64>, parameters: Value, results: Value) -> Self {
        Self {
            command: command.to_string(),
            toolkit_version: spinbath_core::VERSION.to_string(),
            inputs,
            master_seed,
            parameters,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: Option<&Path>) -> CliResult<()> {
        write_text(path, &self.to_json())
    }
}

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::validation("report", e))
}
