//! Core of the rule-service testing toolkit.
//!
//! * [`dsl`]: rule language parser and printer
//! * [`engine`]: four-valued rule evaluation over versioned rule sets
//! * [`schema`]: variable registry, default/strict schemas and record sampling
//! * [`service`]: the validate/aggregate HTTP facade
//! * [`testgen`]: black-box generators, archives, suites and replay
//! * [`mutation`]: rule mutation operators and mutation-score runner
//! * [`stats`]: campaign metrics and nonparametric comparison statistics

pub mod dsl;
pub mod engine;
pub mod mutation;
pub mod record;
pub mod schema;
pub mod service;
pub mod testgen;
pub mod signature;
pub mod stats;

pub use dsl::{format_rule, parse_rule, Rule, RuleKind};
pub use engine::{run_all, Catalog, OutcomeVector, RuleResult, RuleSetVersion};
pub use record::{Record, Value};
pub use schema::{SchemaMode, VariableRegistry};
