//! Experiment tables: per-metric mean and spread, pairwise strategy
//! comparisons within each version, and strict-versus-default differences.
//!
//! Every Friedman test of a report forms one family for the false discovery
//! rate correction. Two strategies differ in a version when the corrected test
//! rejects, Nemenyi separates them, and the effect size is not negligible.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use regula_core::stats::{adjust, decision, friedman_test, nemenyi_posthoc, Decision, StatConfig};
use regula_core::testgen::Strategy;
use regula_core::SchemaMode;

use crate::experiment::{run_dir, to_pretty_json, ExperimentError, ExperimentSummary, RunStatus, METRICS_FILE};

pub const TOOL_CSV: &str = "tool-comparison.csv";
pub const OAS_CSV: &str = "oas-comparison.csv";
pub const TESTS_CSV: &str = "tests.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{path}: {reason}")]
    Metrics { path: String, reason: String },
    #[error("writing {path}: {reason}")]
    Write { path: String, reason: String },
}

/// Counts of a strategy being smaller, equal or larger than its comparands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub lt: usize,
    pub eq: usize,
    pub gt: usize,
}

impl Counts {
    fn add(&mut self, d: Decision) {
        match d {
            Decision::Worse => self.lt += 1,
            Decision::Same => self.eq += 1,
            Decision::Better => self.gt += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRow {
    pub metric: String,
    pub mode: SchemaMode,
    pub strategy: Strategy,
    pub mean: f64,
    pub sd: Option<f64>,
    pub mean_sd: String,
    pub lt: usize,
    pub eq: usize,
    pub gt: usize,
}

/// `diff` = strict minus default, paired by version and repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OasRow {
    pub metric: String,
    pub strategy: Strategy,
    pub diff_mean: Option<f64>,
    pub diff_sd: Option<f64>,
    pub diff_mean_sd: String,
    pub lt: usize,
    pub eq: usize,
    pub gt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    /// `tool` (strategy-version pairs in one mode) or `oas` (modes of one cell).
    pub family: String,
    pub metric: String,
    pub mode: Option<SchemaMode>,
    pub strategy: Option<Strategy>,
    pub version: Option<String>,
    pub subjects: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub stats: StatConfig,
    pub tool: Vec<ToolRow>,
    pub oas: Vec<OasRow>,
    pub tests: Vec<TestRow>,
}

fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let mean = values.mean();
    let sd = (values.len() >= 2).then(|| values.std_dev());
    (mean, sd)
}

fn show(mean: f64, sd: Option<f64>) -> String {
    match sd {
        Some(sd) => format!("{mean:.2}±{sd:.2}"),
        None => format!("{mean:.2}"),
    }
}

type Cell = (Strategy, String, SchemaMode);

/// metric -> cell -> repetition -> value, over successful runs only.
type Observations = BTreeMap<String, BTreeMap<Cell, BTreeMap<usize, f64>>>;

fn load(dir: &Path, summary: &ExperimentSummary) -> Result<Observations, ReportError> {
    let mut obs = Observations::new();
    for run in summary.runs.iter().filter(|r| r.status == RunStatus::Ok) {
        let path = run_dir(dir, run.repetition, &run.key).join(METRICS_FILE);
        let bad = |reason: String| ReportError::Metrics {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| bad(e.to_string()))?;
        let metrics: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let cell = (run.key.strategy, run.key.version.clone(), run.key.mode);
        for (name, value) in metrics {
            obs.entry(name)
                .or_default()
                .entry(cell.clone())
                .or_default()
                .insert(run.repetition, value);
        }
    }
    Ok(obs)
}

/// Rows are the repetitions where every column has a value.
fn complete_matrix(columns: &[Option<&BTreeMap<usize, f64>>], reps: usize) -> Vec<Vec<f64>> {
    (0..reps)
        .filter_map(|r| columns.iter().map(|c| c.and_then(|c| c.get(&r).copied())).collect())
        .collect()
}

struct Pending {
    row: TestRow,
    /// Nemenyi separation between columns, when the test ran.
    separated: Option<Vec<Vec<bool>>>,
    columns: Vec<Vec<f64>>,
}

fn run_test(
    family: &str,
    metric: &str,
    mode: Option<SchemaMode>,
    strategy: Option<Strategy>,
    version: Option<String>,
    matrix: Vec<Vec<f64>>,
    stats: &StatConfig,
) -> Pending {
    let k = matrix.first().map_or(0, Vec::len);
    let columns: Vec<Vec<f64>> = (0..k).map(|j| matrix.iter().map(|row| row[j]).collect()).collect();
    let (statistic, p_value, exact, separated) = match friedman_test(&matrix, stats.exact_cap) {
        Ok(f) => {
            let sep = nemenyi_posthoc(&matrix, stats.alpha).ok().map(|n| n.separated);
            (f.statistic, f.p_value, f.exact, sep)
        }
        // Too few complete repetitions to test: nothing can be separated.
        Err(_) => (0.0, 1.0, false, None),
    };
    Pending {
        row: TestRow {
            family: family.into(),
            metric: metric.into(),
            mode,
            strategy,
            version,
            subjects: matrix.len(),
            statistic,
            p_value,
            p_adjusted: 1.0,
            exact,
        },
        separated,
        columns,
    }
}

pub fn build_report(dir: &Path, stats: &StatConfig) -> Result<Report, ReportError> {
    let summary = ExperimentSummary::read(dir)?;
    let plan = &summary.plan;
    let obs = load(dir, &summary)?;
    let reps = plan.repetitions;
    let mut pending: Vec<Pending> = Vec::new();
    // (metric, mode) -> index into `pending`
    let mut tool_tests = BTreeMap::new();
    // (metric, strategy, version) -> index into `pending`
    let mut oas_tests = BTreeMap::new();
    let both_modes = plan.modes.contains(&SchemaMode::Strict) && plan.modes.contains(&SchemaMode::Default);

    for (metric, cells) in &obs {
        for &mode in &plan.modes {
            let columns: Vec<Option<&BTreeMap<usize, f64>>> = plan
                .strategies
                .iter()
                .flat_map(|&s| plan.versions.iter().map(move |v| (s, v.clone(), mode)))
                .map(|c| cells.get(&c))
                .collect();
            let matrix = complete_matrix(&columns, reps);
            tool_tests.insert((metric.clone(), mode), pending.len());
            pending.push(run_test("tool", metric, Some(mode), None, None, matrix, stats));
        }
        if both_modes {
            for &s in &plan.strategies {
                for v in &plan.versions {
                    let columns = [
                        cells.get(&(s, v.clone(), SchemaMode::Strict)),
                        cells.get(&(s, v.clone(), SchemaMode::Default)),
                    ];
                    let matrix = complete_matrix(&columns, reps);
                    oas_tests.insert((metric.clone(), s, v.clone()), pending.len());
                    pending.push(run_test("oas", metric, None, Some(s), Some(v.clone()), matrix, stats));
                }
            }
        }
    }
    let p: Vec<f64> = pending.iter().map(|t| t.row.p_value).collect();
    for (t, adj) in pending.iter_mut().zip(adjust(&p, stats.correction)) {
        t.row.p_adjusted = adj;
    }
    let separated = |t: &Pending, i: usize, j: usize| {
        t.row.p_adjusted < stats.alpha && t.separated.as_ref().is_some_and(|s| s[i][j])
    };

    let nv = plan.versions.len();
    let mut tool = Vec::new();
    for (metric, cells) in &obs {
        for &mode in &plan.modes {
            let t = &pending[tool_tests[&(metric.clone(), mode)]];
            for (si, &s) in plan.strategies.iter().enumerate() {
                let all: Vec<f64> = cells
                    .iter()
                    .filter(|((cs, _, cm), _)| *cs == s && *cm == mode)
                    .flat_map(|(_, reps)| reps.values().copied())
                    .collect();
                if all.is_empty() {
                    continue;
                }
                let mut counts = Counts::default();
                if t.row.subjects > 0 {
                    for vi in 0..nv {
                        for oi in (0..plan.strategies.len()).filter(|&o| o != si) {
                            let (a, b) = (si * nv + vi, oi * nv + vi);
                            let d = decision(&t.columns[a], &t.columns[b], separated(t, a, b))
                                .expect("complete rows are non-empty");
                            counts.add(d);
                        }
                    }
                }
                let (mean, sd) = mean_sd(&all);
                tool.push(ToolRow {
                    metric: metric.clone(),
                    mode,
                    strategy: s,
                    mean,
                    sd,
                    mean_sd: show(mean, sd),
                    lt: counts.lt,
                    eq: counts.eq,
                    gt: counts.gt,
                });
            }
        }
    }

    let mut oas = Vec::new();
    if both_modes {
        for metric in obs.keys() {
            for &s in &plan.strategies {
                let mut diffs = Vec::new();
                let mut counts = Counts::default();
                for v in &plan.versions {
                    let t = &pending[oas_tests[&(metric.clone(), s, v.clone())]];
                    if t.row.subjects == 0 {
                        continue;
                    }
                    diffs.extend(t.columns[0].iter().zip(&t.columns[1]).map(|(a, b)| a - b));
                    let d = decision(&t.columns[0], &t.columns[1], separated(t, 0, 1))
                        .expect("complete rows are non-empty");
                    counts.add(d);
                }
                let (diff_mean, diff_sd) = if diffs.is_empty() {
                    (None, None)
                } else {
                    let (m, sd) = mean_sd(&diffs);
                    (Some(m), sd)
                };
                oas.push(OasRow {
                    metric: metric.clone(),
                    strategy: s,
                    diff_mean,
                    diff_sd,
                    diff_mean_sd: diff_mean.map(|m| show(m, diff_sd)).unwrap_or_default(),
                    lt: counts.lt,
                    eq: counts.eq,
                    gt: counts.gt,
                });
            }
        }
    }

    Ok(Report {
        stats: *stats,
        tool,
        oas,
        tests: pending.into_iter().map(|t| t.row).collect(),
    })
}

fn csv_of<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8"))
}

pub const TOOL_HEADER: [&str; 9] = ["metric", "mode", "strategy", "mean", "sd", "mean_sd", "lt", "eq", "gt"];
pub const OAS_HEADER: [&str; 8] = [
    "metric",
    "strategy",
    "diff_mean",
    "diff_sd",
    "diff_mean_sd",
    "lt",
    "eq",
    "gt",
];
pub const TESTS_HEADER: [&str; 10] = [
    "family",
    "metric",
    "mode",
    "strategy",
    "version",
    "subjects",
    "statistic",
    "p_value",
    "p_adjusted",
    "exact",
];

pub fn write_report(report: &Report, out: &Path) -> Result<(), ReportError> {
    let fail = |path: &Path, reason: String| ReportError::Write {
        path: path.display().to_string(),
        reason,
    };
    std::fs::create_dir_all(out).map_err(|e| fail(out, e.to_string()))?;
    let files = [
        (TOOL_CSV, csv_of(&report.tool, &TOOL_HEADER)),
        (OAS_CSV, csv_of(&report.oas, &OAS_HEADER)),
        (TESTS_CSV, csv_of(&report.tests, &TESTS_HEADER)),
        (REPORT_JSON, Ok(to_pretty_json(report))),
    ];
    for (name, text) in files {
        let path = out.join(name);
        let text = text.map_err(|e| fail(&path, e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| fail(&path, e.to_string()))?;
    }
    Ok(())
}
