use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{observe, targets_of, Strategy, Target, Transport};
use crate::schema::SchemaMode;
use crate::service::{Endpoint, WireOutcome};
use std::collections::BTreeSet;

/// The recorded (status, outcome vector) of a test against the unmutated engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oracle {
    pub status: u16,
    pub outcomes: Vec<WireOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub endpoint: Endpoint,
    pub body: serde_json::Value,
    pub oracle: Oracle,
}

impl TestCase {
    /// Every target this test covers, derived from its oracle.
    pub fn targets(&self) -> BTreeSet<Target> {
        targets_of(self.endpoint, self.oracle.status, &self.oracle.outcomes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SuiteMeta {
    pub strategy: Strategy,
    pub seed: u64,
    pub budget: u64,
    pub version: String,
    pub schema_mode: SchemaMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub meta: SuiteMeta,
    pub tests: Vec<TestCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("suite file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed suite: {0}")]
    Json(#[from] serde_json::Error),
}

impl TestSuite {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("suite serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn covered(&self) -> BTreeSet<Target> {
        self.tests.iter().flat_map(TestCase::targets).collect()
    }
}

pub fn emit_suite(suite: &TestSuite, path: impl AsRef<Path>) -> Result<(), SuiteError> {
    let path = path.as_ref();
    std::fs::write(path, suite.to_json()).map_err(|source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<TestSuite, SuiteError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TestSuite::from_json(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The request could not be completed; distinct from a failing test.
    Error(String),
}

/// Compares one reply with its oracle.
pub fn judge(test: &TestCase, status: u16, body: &str) -> Verdict {
    if status != test.oracle.status {
        return Verdict::Fail;
    }
    let reply = crate::service::Reply {
        status,
        body: body.to_string(),
    };
    match observe(&reply) {
        Ok(obs) if obs.outcomes == test.oracle.outcomes => Verdict::Pass,
        _ => Verdict::Fail,
    }
}

/// Re-sends every test and compares status and outcome vector with the oracle.
pub fn replay_suite(suite: &TestSuite, transport: &mut dyn Transport) -> Vec<Verdict> {
    suite
        .tests
        .iter()
        .map(|t| {
            let body = serde_json::to_string(&t.body).expect("body serializes");
            match transport.send(t.endpoint, &suite.meta.version, &body) {
                Ok(reply) => judge(t, reply.status, &reply.body),
                Err(e) => Verdict::Error(e.0),
            }
        })
        .collect()
}
