use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_operator, site_count, MutationOperator};
use crate::dsl::{format_rule, parse_rule, validate_references, Rule, RuleKind};
use crate::engine::{Catalog, RuleSetVersion};
use crate::service::Service;
use crate::testgen::{replay_suite, InProcess, TestSuite, Verdict};

/// A rule with exactly one single-site change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub rule_id: String,
    pub operator: MutationOperator,
    pub site: usize,
    pub rule: Rule,
}

impl Mutant {
    pub fn kind(&self) -> RuleKind {
        self.rule.kind()
    }

    pub fn record(&self) -> MutantRecord {
        MutantRecord {
            rule_id: self.rule_id.clone(),
            operator: self.operator,
            site: self.site,
            mutated_source: format_rule(&self.rule),
        }
    }
}

/// One entry of the mutant corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MutantRecord {
    pub rule_id: String,
    pub operator: MutationOperator,
    pub site: usize,
    pub mutated_source: String,
}

/// Every mutant of every rule: rules in manifest order, then operators in
/// table order, then sites in pre-order. Sites whose rewrite cannot be formed
/// (a date shifted off the calendar) are skipped.
pub fn generate_mutants(version: &RuleSetVersion) -> Vec<Mutant> {
    let mut out = Vec::new();
    for rule in version.rules() {
        for op in MutationOperator::ALL {
            for site in 0..site_count(rule, op) {
                if let Ok(mutated) = apply_operator(rule, op, site) {
                    out.push(Mutant {
                        rule_id: rule.id().to_string(),
                        operator: op,
                        site,
                        rule: mutated,
                    });
                }
            }
        }
    }
    out
}

pub fn mutants_to_json(mutants: &[Mutant]) -> String {
    let records: Vec<MutantRecord> = mutants.iter().map(Mutant::record).collect();
    let mut s = serde_json::to_string_pretty(&records).expect("mutants serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("no mutants to run")]
    NoMutants,
    #[error("suite targets version `{0}`, which the catalog lacks")]
    UnknownVersion(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MutantOutcome {
    pub rule_id: String,
    pub kind: RuleKind,
    pub operator: MutationOperator,
    pub site: usize,
    pub killed: bool,
    /// The mutated rule did not survive a print/parse/reference reload.
    pub killed_by_construction: bool,
    /// Indices of the tests whose verdict was not `pass`.
    pub killing_tests: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub total: usize,
    pub killed: usize,
}

impl Tally {
    /// `None` when there is nothing to score.
    pub fn score(&self) -> Option<f64> {
        (self.total > 0).then(|| self.killed as f64 / self.total as f64)
    }

    fn add(&mut self, killed: bool) {
        self.total += 1;
        self.killed += usize::from(killed);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MutationReport {
    pub tests: usize,
    pub m_total: usize,
    pub m_killed: usize,
    pub killed_by_construction: usize,
    pub ms: f64,
    pub ms_validation: Option<f64>,
    pub ms_aggregation: Option<f64>,
    pub validation: Tally,
    pub aggregation: Tally,
    pub by_operator: BTreeMap<MutationOperator, Tally>,
    pub mutants: Vec<MutantOutcome>,
}

impl MutationReport {
    /// Row `m`, column `t`: whether test `t` kills mutant `m`.
    pub fn kill_matrix(&self) -> Vec<Vec<bool>> {
        self.mutants
            .iter()
            .map(|m| {
                let mut row = vec![false; self.tests];
                for &t in &m.killing_tests {
                    row[t] = true;
                }
                row
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Per-operator breakdown followed by the partition and overall rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["group", "total", "killed", "score"]).expect("in-memory write");
        let fmt = |s: Option<f64>| s.map(|v| format!("{v:.4}")).unwrap_or_default();
        let mut row = |name: &str, t: &Tally| {
            w.write_record([name, &t.total.to_string(), &t.killed.to_string(), &fmt(t.score())])
                .expect("in-memory write");
        };
        for op in MutationOperator::ALL {
            row(op.id(), &self.by_operator.get(&op).copied().unwrap_or_default());
        }
        row("validation", &self.validation);
        row("aggregation", &self.aggregation);
        row(
            "all",
            &Tally {
                total: self.m_total,
                killed: self.m_killed,
            },
        );
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}

fn reloads(rule: &Rule, catalog: &Catalog) -> bool {
    match parse_rule(&format_rule(rule)) {
        Ok(back) => back == *rule && validate_references(&back, &catalog.registry).is_empty(),
        Err(_) => false,
    }
}

/// Replays `suite` against each mutant in-process. A mutant is killed when any
/// test's verdict is not `pass`. Mutants run in parallel; results keep input
/// order.
pub fn run_mutation_testing(
    suite: &TestSuite,
    catalog: &Catalog,
    mutants: &[Mutant],
) -> Result<MutationReport, MutationError> {
    if mutants.is_empty() {
        return Err(MutationError::NoMutants);
    }
    let version = catalog
        .version(&suite.meta.version)
        .ok_or_else(|| MutationError::UnknownVersion(suite.meta.version.clone()))?;
    let mode = suite.meta.schema_mode;
    let outcomes: Vec<MutantOutcome> = mutants
        .par_iter()
        .map(|m| {
            let mut outcome = MutantOutcome {
                rule_id: m.rule_id.clone(),
                kind: m.kind(),
                operator: m.operator,
                site: m.site,
                killed: true,
                killed_by_construction: false,
                killing_tests: Vec::new(),
            };
            if !reloads(&m.rule, catalog) {
                outcome.killed_by_construction = true;
                return outcome;
            }
            let mutated = catalog.single(version.with_rule_replaced(m.rule.clone()));
            let mut transport = InProcess(Arc::new(Service::new(Arc::new(mutated), mode)));
            outcome.killing_tests = replay_suite(suite, &mut transport)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != Verdict::Pass)
                .map(|(i, _)| i)
                .collect();
            outcome.killed = !outcome.killing_tests.is_empty();
            outcome
        })
        .collect();

    let mut validation = Tally::default();
    let mut aggregation = Tally::default();
    let mut by_operator: BTreeMap<MutationOperator, Tally> = BTreeMap::new();
    for o in &outcomes {
        match o.kind {
            RuleKind::Validation => validation.add(o.killed),
            RuleKind::Aggregation => aggregation.add(o.killed),
        }
        by_operator.entry(o.operator).or_default().add(o.killed);
    }
    let m_total = outcomes.len();
    let m_killed = validation.killed + aggregation.killed;
    Ok(MutationReport {
        tests: suite.tests.len(),
        m_total,
        m_killed,
        killed_by_construction: outcomes.iter().filter(|o| o.killed_by_construction).count(),
        ms: m_killed as f64 / m_total as f64,
        ms_validation: validation.score(),
        ms_aggregation: aggregation.score(),
        validation,
        aggregation,
        by_operator,
        mutants: outcomes,
    })
}
