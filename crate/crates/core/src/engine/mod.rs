//! Rule evaluation: four-valued results per rule, outcome vectors per record.

mod eval;
mod version;

pub use eval::{eval_aggregation, eval_expr, eval_validation, EvalError, RuleResult};
pub use version::{
    load_ruleset_version, Catalog, DeclaredCounts, LoadError, Manifest, RuleSetVersion, VersionEntry,
};

use crate::dsl::{Literal, Rule, RuleKind};
use crate::record::Record;
use crate::signature::{ErrorSignature, Frame, ENGINE_COMPONENT};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Outcome {
    Validated(RuleResult),
    Aggregated {
        output: Option<Literal>,
        result: RuleResult,
    },
    Error(ErrorSignature),
}

impl Outcome {
    pub fn result(&self) -> Option<RuleResult> {
        match self {
            Outcome::Validated(r) | Outcome::Aggregated { result: r, .. } => Some(*r),
            Outcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleOutcome {
    pub rule: String,
    pub outcome: Outcome,
}

/// One entry per rule of `kind`, in manifest order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeVector {
    pub version: String,
    pub kind: RuleKind,
    pub entries: Vec<RuleOutcome>,
}

impl OutcomeVector {
    pub fn first_error(&self) -> Option<&ErrorSignature> {
        self.entries.iter().find_map(|e| match &e.outcome {
            Outcome::Error(sig) => Some(sig),
            _ => None,
        })
    }
}

fn evaluate(rule: &Rule, record: &Record) -> Outcome {
    match rule {
        Rule::Validation(v) => match eval_validation(v, record) {
            Ok(r) => Outcome::Validated(r),
            Err(e) => Outcome::Error(
                e.signature("eval_validation", &v.id)
                    .push(Frame::new(ENGINE_COMPONENT, "run_all", "validation")),
            ),
        },
        Rule::Aggregation(a) => match eval_aggregation(a, record) {
            Ok((output, result)) => Outcome::Aggregated { output, result },
            Err(e) => Outcome::Error(
                e.signature("eval_aggregation", &a.id)
                    .push(Frame::new(ENGINE_COMPONENT, "run_all", "aggregation")),
            ),
        },
    }
}

/// Evaluates every rule of `kind` against `record`. Per-rule evaluation errors
/// are embedded as signatures, never raised.
pub fn run_all(version: &RuleSetVersion, record: &Record, kind: RuleKind) -> OutcomeVector {
    let entries = version
        .rules()
        .iter()
        .filter(|r| r.kind() == kind)
        .map(|r| RuleOutcome {
            rule: r.id().to_string(),
            outcome: evaluate(r, record),
        })
        .collect();
    OutcomeVector {
        version: version.id.clone(),
        kind,
        entries,
    }
}
