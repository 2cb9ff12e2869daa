//! Versioned TOML experiment files.
//!
//! ```toml
//! version = 1
//!
//! [experiment]
//! approach = "marline_with_source"
//! runs = 30
//! evaluation = "prequential_reset"
//! window_fraction = 0.1
//! interleave = "round_robin"
//!
//! [model]
//! ensemble_size = 20
//! theta = 0.9
//! sigma = 0.4
//!
//! [dataset]
//! kind = "synthetic"
//! family = "abrupt"
//! similarity = "non_similar"
//! class_size = 50
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use marline::eval::{Approach, DatasetSpec, Evaluation, ExperimentSpec, GridSpec};
use marline::marline::MarlineConfig;
use marline::streams::InterleavePolicy;

pub const VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterleaveKind {
    #[default]
    RoundRobin,
    TargetPaced,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub approach: Approach,
    pub runs: usize,
    pub seed_base: u64,
    pub evaluation: Evaluation,
    pub window_fraction: f64,
    pub interleave: InterleaveKind,
    /// Share of every source delivered up front under `target_paced`.
    pub warmup_fraction: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            approach: Approach::MarlineWithSource,
            runs: 30,
            seed_base: 0,
            evaluation: Evaluation::PrequentialReset,
            window_fraction: 0.1,
            interleave: InterleaveKind::RoundRobin,
            warmup_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    /// Export the interleaved schedule instead of the target alone.
    pub include_sources: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub version: u32,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub model: MarlineConfig,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub generate: GenerateSection,
}

impl FileConfig {
    pub fn experiment_spec(&self) -> ExperimentSpec {
        let e = &self.experiment;
        ExperimentSpec {
            approach: e.approach,
            config: self.model.clone(),
            dataset: self.dataset.clone(),
            interleave: match e.interleave {
                InterleaveKind::RoundRobin => InterleavePolicy::RoundRobin,
                InterleaveKind::TargetPaced => InterleavePolicy::TargetPaced {
                    warmup_fraction: e.warmup_fraction,
                },
            },
            runs: e.runs,
            seed_base: e.seed_base,
            evaluation: e.evaluation,
            window_fraction: e.window_fraction,
        }
    }
}

/// Parses `key=value`; the value is read as a TOML literal, or taken as a
/// bare string when it is not one.
pub fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override {raw:?} is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        return Err(ConfigError(format!("override {raw:?} has an empty key segment")));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_owned()));
    Ok((path, parsed))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = root;
    for key in parents {
        let entry = table
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError(format!("cannot override inside non-table key {key:?}")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

/// Reads, overrides and validates a config file. Relative CSV paths are
/// resolved against the file's directory.
pub fn load(path: &Path, overrides: &[String]) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError(format!("malformed config {}: {}", path.display(), e.message())))?;
    for raw in overrides {
        let (key, value) = parse_override(raw)?;
        apply_override(&mut table, &key, value)?;
    }
    let mut config: FileConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError(format!("invalid config {}: {}", path.display(), e.message())))?;
    if config.version != VERSION {
        return Err(ConfigError(format!(
            "config {} has version {}, this build reads version {VERSION}",
            path.display(),
            config.version
        )));
    }
    if let DatasetSpec::Csv { target, sources } = &mut config.dataset {
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut target.path);
        for s in sources {
            resolve(base, &mut s.path);
        }
    }
    Ok(config)
}
