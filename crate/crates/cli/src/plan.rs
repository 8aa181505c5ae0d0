//! Experiment plans and their randomized per-repetition ordering.

use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use regula_core::testgen::Strategy;
use regula_core::SchemaMode;

/// How campaigns reach their service instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    /// A fresh HTTP server on an ephemeral loopback port per sub-run.
    #[default]
    Http,
    /// Direct calls into the service, no sockets.
    InProcess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentPlan {
    pub manifest: PathBuf,
    pub strategies: Vec<Strategy>,
    pub versions: Vec<String>,
    pub modes: Vec<SchemaMode>,
    pub repetitions: usize,
    pub budget: u64,
    pub seed: u64,
    pub jobs: usize,
    pub transport: TransportKind,
    /// Run mutation testing on every generated suite.
    pub mutation: bool,
    /// Frequency baseline compared against every run's profile.
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("budget must be at least 1")]
    NoBudget,
    #[error("jobs must be at least 1")]
    NoJobs,
    #[error("the plan lists no {0}")]
    Empty(&'static str),
    #[error("{0} listed twice")]
    Duplicate(String),
}

/// One cell of the (strategy, version, mode) grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunKey {
    pub strategy: Strategy,
    pub version: String,
    pub mode: SchemaMode,
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.strategy.name(), self.version, self.mode.as_str())
    }
}

fn unique<T: PartialEq + fmt::Debug>(items: &[T], what: &'static str) -> Result<(), PlanError> {
    if items.is_empty() {
        return Err(PlanError::Empty(what));
    }
    for (i, x) in items.iter().enumerate() {
        if items[..i].contains(x) {
            return Err(PlanError::Duplicate(format!("{x:?}")));
        }
    }
    Ok(())
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.repetitions == 0 {
            return Err(PlanError::NoRepetitions);
        }
        if self.budget == 0 {
            return Err(PlanError::NoBudget);
        }
        if self.jobs == 0 {
            return Err(PlanError::NoJobs);
        }
        unique(&self.strategies, "strategies")?;
        unique(&self.versions, "versions")?;
        unique(&self.modes, "schema modes")
    }

    /// The full grid in declaration order: strategies, then versions, then modes.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &strategy in &self.strategies {
            for version in &self.versions {
                for &mode in &self.modes {
                    keys.push(RunKey {
                        strategy,
                        version: version.clone(),
                        mode,
                    });
                }
            }
        }
        keys
    }

    /// Campaign seed of one sub-run. Strategies sharing a repetition, version
    /// and mode share a seed, so their sampled request streams coincide.
    pub fn run_seed(&self, repetition: usize, key: &RunKey) -> u64 {
        derive(&[
            b"run",
            &self.seed.to_le_bytes(),
            &(repetition as u64).to_le_bytes(),
            key.version.as_bytes(),
            key.mode.as_str().as_bytes(),
        ])
    }
}

fn derive(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// The grid in a random order fixed by (master seed, repetition).
pub fn plan_order(plan: &ExperimentPlan, repetition: usize) -> Vec<RunKey> {
    let mut keys = plan.keys();
    let seed = derive(&[b"order", &plan.seed.to_le_bytes(), &(repetition as u64).to_le_bytes()]);
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    keys
}
