//! Black-box test generation against the rules service.
//!
//! Three strategies share one request loop: RANDOM_BB keeps tests that reach a
//! new endpoint-status pair, EVOGURI additionally keeps tests that reach a new
//! rule-result pair, and MIO_LITE mutates tests kept in per-target populations.

mod archive;
mod campaign;
mod suite;
mod target;
mod transport;

pub use archive::{Archive, ArchivedTest};
pub use campaign::{
    log_from_jsonl, log_to_jsonl, run_campaign, CampaignConfig, CampaignError, CampaignResult, LogEntry,
    MioConfig, Strategy,
};
pub use suite::{
    emit_suite, judge, load_suite, replay_suite, Oracle, SuiteError, SuiteMeta, TestCase, TestSuite, Verdict,
};
pub use target::{extract_targets, observe, targets_of, ExtractError, Observation, StatusClass, Target};
pub use transport::{Http, InProcess, Transport, TransportError};
