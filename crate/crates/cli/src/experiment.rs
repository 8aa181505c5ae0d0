//! Runs an experiment plan: every (repetition, strategy, version, mode) cell
//! as an isolated campaign, followed by mutation testing and metrics.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use regula_core::mutation::{generate_mutants, run_mutation_testing};
use regula_core::service::{server, Service};
use regula_core::signature::NamespaceConfig;
use regula_core::stats::{campaign_metrics, frequency_report, FrequencyProfile};
use regula_core::testgen::{
    emit_suite, log_to_jsonl, run_campaign, CampaignConfig, CampaignError, CampaignResult, Http,
    InProcess,
};
use regula_core::Catalog;

use crate::plan::{plan_order, ExperimentPlan, RunKey, TransportKind};

pub const SUMMARY_FILE: &str = "experiment.json";
pub const SUITE_FILE: &str = "suite.json";
pub const LOG_FILE: &str = "log.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const FREQUENCY_FILE: &str = "frequency.json";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("loading the rule catalog: {0}")]
    Catalog(String),
    #[error("plan names version `{0}`, which the manifest lacks")]
    UnknownVersion(String),
    #[error("loading the baseline: {0}")]
    Baseline(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunRecord {
    pub repetition: usize,
    #[serde(flatten)]
    pub key: RunKey,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The top-level record of an experiment; runs appear in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentSummary {
    pub plan: ExperimentPlan,
    pub runs: Vec<RunRecord>,
}

impl ExperimentSummary {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RunStatus::Failed).count()
    }

    pub fn read(dir: &Path) -> Result<Self, ExperimentError> {
        let path = dir.join(SUMMARY_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| io(&path, std::io::Error::other(e)))
    }
}

pub fn run_dir(root: &Path, repetition: usize, key: &RunKey) -> PathBuf {
    root.join("runs").join(repetition.to_string()).join(key.to_string())
}

fn io(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

struct Context<'a> {
    plan: &'a ExperimentPlan,
    catalog: Arc<Catalog>,
    baseline: Option<FrequencyProfile>,
    root: &'a Path,
}

fn campaign(ctx: &Context, config: &CampaignConfig) -> Result<CampaignResult, CampaignError> {
    let service = Arc::new(Service::new(ctx.catalog.clone(), config.mode));
    match ctx.plan.transport {
        TransportKind::InProcess => run_campaign(config, &ctx.catalog.registry, &mut InProcess(service)),
        TransportKind::Http => {
            let handle = server::spawn(service, ([127, 0, 0, 1], 0).into())
                .map_err(|e| CampaignError::Config(format!("starting the service: {e}")))?;
            let result = run_campaign(config, &ctx.catalog.registry, &mut Http::new(handle.base_url()));
            handle.stop();
            result
        }
    }
}

fn sub_run(ctx: &Context, repetition: usize, key: &RunKey) -> Result<(), String> {
    let dir = run_dir(ctx.root, repetition, key);
    std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let version = ctx.catalog.version(&key.version).expect("versions checked up front");
    let config = CampaignConfig::new(
        key.strategy,
        ctx.plan.budget,
        ctx.plan.run_seed(repetition, key),
        key.mode,
        &key.version,
    );
    let result = match campaign(ctx, &config) {
        Ok(r) => r,
        Err(CampaignError::Unreachable { reason, log }) => {
            write(&dir.join(LOG_FILE), &log_to_jsonl(&log))?;
            return Err(format!("service unreachable: {reason}"));
        }
        Err(e) => return Err(e.to_string()),
    };
    let suite = result.suite();
    emit_suite(&suite, dir.join(SUITE_FILE)).map_err(|e| e.to_string())?;
    write(&dir.join(LOG_FILE), &log_to_jsonl(&result.log))?;

    let mut metrics: BTreeMap<String, f64> =
        campaign_metrics(&result.log, version, suite.tests.len(), &NamespaceConfig::default());
    if ctx.plan.mutation {
        let mutants = generate_mutants(version);
        if !mutants.is_empty() {
            let report = run_mutation_testing(&suite, &ctx.catalog, &mutants).map_err(|e| e.to_string())?;
            metrics.insert("mutants".into(), report.m_total as f64);
            metrics.insert("mutants-killed".into(), report.m_killed as f64);
            metrics.insert("ms".into(), report.ms);
            for (name, score) in [
                ("ms-validation", report.ms_validation),
                ("ms-aggregation", report.ms_aggregation),
            ] {
                if let Some(s) = score {
                    metrics.insert(name.into(), s);
                }
            }
        }
    }
    write(&dir.join(METRICS_FILE), &to_pretty_json(&metrics))?;
    let freq = frequency_report(&result.log, version, ctx.baseline.as_ref());
    write(&dir.join(FREQUENCY_FILE), &to_pretty_json(&freq))
}

/// Executes every cell, `plan.jobs` at a time, in the randomized order of each
/// repetition. A failing cell is recorded and the rest continue.
pub fn run_experiment(plan: &ExperimentPlan, root: &Path) -> Result<ExperimentSummary, ExperimentError> {
    let catalog = Arc::new(Catalog::load(&plan.manifest).map_err(|e| ExperimentError::Catalog(e.to_string()))?);
    if let Some(v) = plan.versions.iter().find(|v| catalog.version(v).is_none()) {
        return Err(ExperimentError::UnknownVersion(v.clone()));
    }
    let baseline = match &plan.baseline {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ExperimentError::Baseline(format!("{}: {e}", p.display())))?;
            Some(FrequencyProfile::from_json(&text).map_err(|e| ExperimentError::Baseline(e.to_string()))?)
        }
        None => None,
    };
    std::fs::create_dir_all(root).map_err(|e| io(root, e))?;
    let ctx = Context {
        plan,
        catalog,
        baseline,
        root,
    };
    let cells: Vec<(usize, RunKey)> = (0..plan.repetitions)
        .flat_map(|rep| plan_order(plan, rep).into_iter().map(move |k| (rep, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .expect("thread pool");
    let runs: Vec<RunRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|(rep, key)| {
                let outcome = catch_unwind(AssertUnwindSafe(|| sub_run(&ctx, *rep, key)))
                    .unwrap_or_else(|_| Err("sub-run panicked".into()));
                if let Err(e) = &outcome {
                    tracing::warn!(repetition = rep, run = %key, "run failed: {e}");
                }
                RunRecord {
                    repetition: *rep,
                    key: key.clone(),
                    seed: plan.run_seed(*rep, key),
                    status: if outcome.is_ok() { RunStatus::Ok } else { RunStatus::Failed },
                    error: outcome.err(),
                }
            })
            .collect()
    });
    let summary = ExperimentSummary {
        plan: plan.clone(),
        runs,
    };
    let path = root.join(SUMMARY_FILE);
    std::fs::write(&path, to_pretty_json(&summary)).map_err(|e| io(&path, e))?;
    Ok(summary)
}
