//! Experiment configuration: defaults, then a TOML or JSON file, then the
//! `REGULA_SEED` environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use regula_core::engine::Manifest;
use regula_core::testgen::Strategy;
use regula_core::SchemaMode;

use crate::plan::{ExperimentPlan, TransportKind};

pub const SEED_ENV: &str = "REGULA_SEED";
pub const DEFAULT_REPETITIONS: usize = 30;
pub const DEFAULT_BUDGET: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {reason}")]
    Syntax { path: String, reason: String },
    #[error("config file {0} must end in .toml or .json")]
    Format(String),
    #[error("{SEED_ENV}=`{0}` is not an unsigned 64-bit integer")]
    SeedEnv(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Plan(#[from] crate::plan::PlanError),
}

/// Every field optional; absent fields fall through to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PlanOverrides {
    pub manifest: Option<PathBuf>,
    pub strategies: Option<Vec<Strategy>>,
    pub versions: Option<Vec<String>>,
    pub modes: Option<Vec<SchemaMode>>,
    pub repetitions: Option<usize>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub transport: Option<TransportKind>,
    pub mutation: Option<bool>,
    pub baseline: Option<PathBuf>,
}

impl PlanOverrides {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        let syntax = |reason: String| ConfigError::Syntax {
            path: shown.clone(),
            reason,
        };
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| syntax(e.to_string())),
            Some("json") => serde_json::from_str(&text).map_err(|e| syntax(e.to_string())),
            _ => Err(ConfigError::Format(shown)),
        }
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(self, other: PlanOverrides) -> PlanOverrides {
        PlanOverrides {
            manifest: other.manifest.or(self.manifest),
            strategies: other.strategies.or(self.strategies),
            versions: other.versions.or(self.versions),
            modes: other.modes.or(self.modes),
            repetitions: other.repetitions.or(self.repetitions),
            budget: other.budget.or(self.budget),
            seed: other.seed.or(self.seed),
            jobs: other.jobs.or(self.jobs),
            transport: other.transport.or(self.transport),
            mutation: other.mutation.or(self.mutation),
            baseline: other.baseline.or(self.baseline),
        }
    }
}

pub fn seed_from_env(value: Option<String>) -> Result<Option<u64>, ConfigError> {
    value
        .map(|v| v.trim().parse().map_err(|_| ConfigError::SeedEnv(v)))
        .transpose()
}

/// Resolves the layers into a validated plan. Versions default to every
/// version of the manifest.
pub fn resolve(
    file: Option<&Path>,
    env_seed: Option<String>,
    flags: PlanOverrides,
) -> Result<ExperimentPlan, ConfigError> {
    let mut layers = match file {
        Some(p) => PlanOverrides::from_file(p)?,
        None => PlanOverrides::default(),
    };
    if let Some(seed) = seed_from_env(env_seed)? {
        layers.seed = Some(seed);
    }
    let o = layers.overlay(flags);
    let manifest = o.manifest.unwrap_or_else(|| PathBuf::from("corpus/manifest.json"));
    let versions = match o.versions {
        Some(v) => v,
        None => Manifest::read(&manifest)
            .map_err(|e| ConfigError::Manifest(e.to_string()))?
            .versions
            .into_iter()
            .map(|v| v.id)
            .collect(),
    };
    let plan = ExperimentPlan {
        manifest,
        strategies: o.strategies.unwrap_or_else(|| Strategy::ALL.to_vec()),
        versions,
        modes: o.modes.unwrap_or_else(|| SchemaMode::ALL.to_vec()),
        repetitions: o.repetitions.unwrap_or(DEFAULT_REPETITIONS),
        budget: o.budget.unwrap_or(DEFAULT_BUDGET),
        seed: o.seed.unwrap_or(DEFAULT_SEED),
        jobs: o
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from)),
        transport: o.transport.unwrap_or_default(),
        mutation: o.mutation.unwrap_or(true),
        baseline: o.baseline,
    };
    plan.validate()?;
    Ok(plan)
}
