use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::RuleKind;
use crate::engine::{RuleResult, RuleSetVersion};
use crate::signature::{classify_error, Category, NamespaceConfig};
use crate::testgen::{LogEntry, StatusClass};

/// Executions per (rule, result), counted from 200 responses only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResultCounts {
    /// Rules of the version in manifest order, with their kind.
    pub rules: Vec<(String, RuleKind)>,
    /// Indexed by [`RuleResult::index`].
    pub counts: BTreeMap<String, [u64; 4]>,
}

impl RuleResultCounts {
    pub fn count(&self, rule: &str, result: RuleResult) -> u64 {
        self.counts.get(rule).map_or(0, |c| c[result.index()])
    }

    pub fn executed(&self, rule: &str, result: RuleResult) -> bool {
        self.count(rule, result) > 0
    }

    pub fn total(&self, rule: &str) -> u64 {
        self.counts.get(rule).map_or(0, |c| c.iter().sum())
    }

    /// Number of distinct rules of `kind` executed at least once with `result`.
    pub fn executed_rules(&self, kind: RuleKind, result: RuleResult) -> usize {
        self.rules
            .iter()
            .filter(|(id, k)| *k == kind && self.executed(id, result))
            .count()
    }

    /// Total executions with `result` over all rules.
    pub fn result_total(&self, result: RuleResult) -> u64 {
        self.counts.values().map(|c| c[result.index()]).sum()
    }
}

pub fn rules_results_report(log: &[LogEntry], version: &RuleSetVersion) -> RuleResultCounts {
    let rules: Vec<(String, RuleKind)> = version
        .rules()
        .iter()
        .map(|r| (r.id().to_string(), r.kind()))
        .collect();
    let mut counts: BTreeMap<String, [u64; 4]> =
        rules.iter().map(|(id, _)| (id.clone(), [0; 4])).collect();
    for entry in log.iter().filter(|e| e.status == Some(200)) {
        for o in &entry.outcomes {
            if let (Some(c), Some(r)) = (counts.get_mut(&o.rule), o.result) {
                c[r.index()] += 1;
            }
        }
    }
    RuleResultCounts { rules, counts }
}

/// Share of each result among a rule's executions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    #[serde(rename = "Pass")]
    pub pass: f64,
    #[serde(rename = "Fail")]
    pub fail: f64,
    #[serde(rename = "Warning")]
    pub warning: f64,
    #[serde(rename = "NotApplied")]
    pub not_applied: f64,
}

impl Fractions {
    pub fn as_array(&self) -> [f64; 4] {
        [self.pass, self.fail, self.warning, self.not_applied]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            pass: a[0],
            fail: a[1],
            warning: a[2],
            not_applied: a[3],
        }
    }
}

/// Per-rule result distribution. Also the baseline file format:
/// `{"rules": {"V01": {"Pass": .., "Fail": .., "Warning": .., "NotApplied": ..}}}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub rules: BTreeMap<String, Fractions>,
}

impl FrequencyProfile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BaselineComparison {
    /// `|profile - baseline|` per rule, in result order.
    pub per_rule: BTreeMap<String, [f64; 4]>,
    /// Mean of `per_rule` over the compared rules, per result.
    pub mean_abs_difference: Fractions,
    /// Profiled rules that the baseline lacks.
    pub missing_in_baseline: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FrequencyReport {
    pub profile: FrequencyProfile,
    /// Rules never executed; they have no distribution.
    pub omitted: Vec<String>,
    pub baseline: Option<BaselineComparison>,
}

pub fn frequency_report(
    log: &[LogEntry],
    version: &RuleSetVersion,
    baseline: Option<&FrequencyProfile>,
) -> FrequencyReport {
    let counts = rules_results_report(log, version);
    let mut profile = FrequencyProfile::default();
    let mut omitted = Vec::new();
    for (id, _) in &counts.rules {
        let total = counts.total(id);
        if total == 0 {
            omitted.push(id.clone());
            continue;
        }
        let c = counts.counts[id];
        profile.rules.insert(
            id.clone(),
            Fractions::from_array(c.map(|n| n as f64 / total as f64)),
        );
    }
    let baseline = baseline.map(|b| {
        let mut per_rule = BTreeMap::new();
        let mut missing = Vec::new();
        for (id, f) in &profile.rules {
            match b.rules.get(id) {
                Some(base) => {
                    let (x, y) = (f.as_array(), base.as_array());
                    per_rule.insert(id.clone(), [0, 1, 2, 3].map(|i| (x[i] - y[i]).abs()));
                }
                None => missing.push(id.clone()),
            }
        }
        let mut mean = [0.0; 4];
        if !per_rule.is_empty() {
            for d in per_rule.values() {
                for i in 0..4 {
                    mean[i] += d[i];
                }
            }
            mean = mean.map(|m| m / per_rule.len() as f64);
        }
        BaselineComparison {
            per_rule,
            mean_abs_difference: Fractions::from_array(mean),
            missing_in_baseline: missing,
        }
    });
    FrequencyReport {
        profile,
        omitted,
        baseline,
    }
}

/// A random but well-formed baseline, for tests and demos only. Aggregation
/// rules never get a `NotApplied` share.
pub fn synthetic_baseline(version: &RuleSetVersion, seed: u64) -> FrequencyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = FrequencyProfile::default();
    for rule in version.rules() {
        let mut w: [f64; 4] = [0, 1, 2, 3].map(|_| rng.random_range(0.0..1.0));
        if rule.kind() == RuleKind::Aggregation {
            w[3] = 0.0;
        }
        let sum: f64 = w.iter().sum();
        profile
            .rules
            .insert(rule.id().to_string(), Fractions::from_array(w.map(|x| x / sum)));
    }
    profile
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ErrorCounts {
    pub occurrences: usize,
    pub unique_errors: usize,
    pub failure_points: usize,
    pub library_failure_points: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    pub all: ErrorCounts,
    pub harness: ErrorCounts,
    pub io: ErrorCounts,
    pub remaining: ErrorCounts,
}

/// Groups the signatures of a log into unique errors and failure points.
pub fn error_report(log: &[LogEntry], namespaces: &NamespaceConfig) -> ErrorReport {
    #[derive(Default)]
    struct Acc {
        n: usize,
        unique: BTreeSet<String>,
        points: BTreeSet<String>,
        library: BTreeSet<String>,
    }
    let mut acc: BTreeMap<Option<Category>, Acc> = BTreeMap::new();
    for sig in log.iter().filter_map(|e| e.signature.as_ref()) {
        let c = classify_error(sig, namespaces);
        for key in [None, Some(c.category)] {
            let a = acc.entry(key).or_default();
            a.n += 1;
            a.unique.insert(c.unique_error.clone());
            a.points.insert(c.failure_point.clone());
            if c.is_library {
                a.library.insert(c.failure_point.clone());
            }
        }
    }
    let counts = |key: Option<Category>| {
        acc.get(&key).map_or_else(ErrorCounts::default, |a| ErrorCounts {
            occurrences: a.n,
            unique_errors: a.unique.len(),
            failure_points: a.points.len(),
            library_failure_points: a.library.len(),
        })
    };
    ErrorReport {
        all: counts(None),
        harness: counts(Some(Category::Harness)),
        io: counts(Some(Category::Io)),
        remaining: counts(Some(Category::Remaining)),
    }
}

/// Flat named metrics of one campaign, the unit the experiment report compares.
pub fn campaign_metrics(
    log: &[LogEntry],
    version: &RuleSetVersion,
    suite_size: usize,
    namespaces: &NamespaceConfig,
) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("requests".to_string(), log.len() as f64);
    for class in StatusClass::ALL {
        let n = log
            .iter()
            .filter(|e| e.status.and_then(StatusClass::of) == Some(class))
            .count();
        m.insert(format!("status-{}", class.label()), n as f64);
    }
    m.insert("suite-size".to_string(), suite_size as f64);
    let errors = error_report(log, namespaces);
    for (cat, c) in [
        ("all", errors.all),
        ("harness", errors.harness),
        ("io", errors.io),
        ("remaining", errors.remaining),
    ] {
        m.insert(format!("errors-{cat}-unique"), c.unique_errors as f64);
        m.insert(format!("errors-{cat}-failure-points"), c.failure_points as f64);
        m.insert(
            format!("errors-{cat}-library-failure-points"),
            c.library_failure_points as f64,
        );
    }
    let counts = rules_results_report(log, version);
    for kind in [RuleKind::Validation, RuleKind::Aggregation] {
        for r in RuleResult::ALL {
            m.insert(
                format!("{kind}-{}", r.as_str().to_ascii_lowercase()),
                counts.executed_rules(kind, r) as f64,
            );
        }
    }
    m
}
