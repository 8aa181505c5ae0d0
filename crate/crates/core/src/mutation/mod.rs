//! Rule mutation: the eight operators, exhaustive single-site enumeration, and
//! a runner that replays a suite against every mutant.

mod operators;
mod runner;

pub use operators::{
    apply_operator, enumerate_sites, site_count, ApplyError, DateShift, MutationOperator, DATE_SHIFTS,
};
pub use runner::{
    generate_mutants, mutants_to_json, run_mutation_testing, Mutant, MutantOutcome, MutantRecord,
    MutationError, MutationReport, Tally,
};
