//! The rules service: `validate` and `aggregate` endpoints per rule-set
//! version, schema emission, and optional fault injection.
//!
//! [`Service::handle`] is transport-agnostic; [`server`] exposes it over HTTP.

mod inject;
pub mod server;
mod wire;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use inject::{FaultKind, FaultProfile};
pub use wire::{literal_json, ErrorDocument, Frames, OutcomeBody, RejectDocument, WireOutcome};

use crate::dsl::RuleKind;
use crate::engine::{run_all, Catalog};
use crate::schema::{conform, SchemaDocument, SchemaMode};
use crate::signature::{Frame, SERVICE_COMPONENT};

/// The two tested endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Validate,
    Aggregate,
}

impl Endpoint {
    pub const ALL: [Endpoint; 2] = [Endpoint::Validate, Endpoint::Aggregate];

    pub fn name(self) -> &'static str {
        match self {
            Endpoint::Validate => "validate",
            Endpoint::Aggregate => "aggregate",
        }
    }

    pub fn kind(self) -> RuleKind {
        match self {
            Endpoint::Validate => RuleKind::Validation,
            Endpoint::Aggregate => RuleKind::Aggregation,
        }
    }

    pub fn path(self, version: &str) -> String {
        match self {
            Endpoint::Validate => format!("/api/v{version}/messages/validate"),
            Endpoint::Aggregate => format!("/api/v{version}/cases/aggregate"),
        }
    }

    fn operation(self) -> &'static str {
        match self {
            Endpoint::Validate => "validate_message",
            Endpoint::Aggregate => "aggregate_case",
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Endpoint::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown endpoint `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

/// A raw response: status plus a JSON body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    fn json<T: Serialize>(status: u16, body: &T) -> Self {
        Self {
            status,
            body: serde_json::to_string(body).expect("response serializes"),
        }
    }

    fn reject(status: u16, error: impl Into<String>) -> Self {
        Reply::json(
            status,
            &RejectDocument {
                error: error.into(),
                violations: Vec::new(),
            },
        )
    }
}

enum Route<'a> {
    Rules(&'a str, Endpoint),
    Schema(&'a str),
}

fn route(path: &str) -> Option<Route<'_>> {
    let rest = path.strip_prefix("/api/v")?;
    let (version, tail) = rest.split_once('/')?;
    match tail {
        "messages/validate" => Some(Route::Rules(version, Endpoint::Validate)),
        "cases/aggregate" => Some(Route::Rules(version, Endpoint::Aggregate)),
        "schema" => Some(Route::Schema(version)),
        _ => None,
    }
}

fn query_param<'a>(query: &'a str, key: &str) -> Option<&'a str> {
    query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

/// Stateless apart from the request counter that seeds fault injection.
#[derive(Debug)]
pub struct Service {
    catalog: Arc<Catalog>,
    mode: SchemaMode,
    injection: Option<(FaultProfile, u64)>,
    counter: AtomicU64,
}

impl Service {
    /// `mode` is the schema that request bodies are checked against.
    pub fn new(catalog: Arc<Catalog>, mode: SchemaMode) -> Self {
        Self {
            catalog,
            mode,
            injection: None,
            counter: AtomicU64::new(0),
        }
    }

    pub fn with_injection(mut self, profile: FaultProfile, seed: u64) -> Self {
        self.injection = Some((profile, seed));
        self
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn mode(&self) -> SchemaMode {
        self.mode
    }

    /// Routes and answers one request. `path` excludes the query string.
    pub fn handle(&self, method: Method, path: &str, query: &str, body: &[u8]) -> Reply {
        match (method, route(path)) {
            (Method::Post, Some(Route::Rules(version, endpoint))) => {
                self.rules(version, endpoint, body)
            }
            (Method::Get, Some(Route::Schema(version))) => self.schema(version, query),
            (_, Some(_)) => Reply::reject(405, "method not allowed"),
            (_, None) => Reply::reject(404, format!("no route for {path}")),
        }
    }

    /// Shorthand for a POST to one of the rule endpoints.
    pub fn post(&self, endpoint: Endpoint, version: &str, body: &[u8]) -> Reply {
        self.rules(version, endpoint, body)
    }

    fn rules(&self, version_id: &str, endpoint: Endpoint, body: &[u8]) -> Reply {
        let Some(version) = self.catalog.version(version_id) else {
            return Reply::reject(404, format!("unknown version `{version_id}`"));
        };
        let json: serde_json::Value = match serde_json::from_slice(body) {
            Ok(j) => j,
            Err(e) => return Reply::reject(400, format!("malformed JSON: {e}")),
        };
        let record = match conform(&json, &self.catalog.registry, self.mode) {
            Ok(r) => r,
            Err(violations) => {
                return Reply::json(
                    400,
                    &RejectDocument {
                        error: "schema violation".into(),
                        violations,
                    },
                )
            }
        };
        let service_frame = Frame::new(SERVICE_COMPONENT, endpoint.operation(), version_id);
        if let Some((profile, seed)) = &self.injection {
            let n = self.counter.fetch_add(1, Ordering::Relaxed);
            if let Some(sig) = profile.fire(*seed, n, &record) {
                return Reply::json(500, &ErrorDocument::from(&sig.push(service_frame)));
            }
        }
        let outcomes = run_all(version, &record, endpoint.kind());
        if let Some(sig) = outcomes.first_error() {
            let sig = sig.clone().push(service_frame);
            return Reply::json(500, &ErrorDocument::from(&sig));
        }
        Reply::json(200, &OutcomeBody::from(&outcomes))
    }

    fn schema(&self, version_id: &str, query: &str) -> Reply {
        if self.catalog.version(version_id).is_none() {
            return Reply::reject(404, format!("unknown version `{version_id}`"));
        }
        let mode = match query_param(query, "mode").unwrap_or("default").parse::<SchemaMode>() {
            Ok(m) => m,
            Err(e) => return Reply::reject(400, e),
        };
        Reply {
            status: 200,
            body: SchemaDocument::build(&self.catalog.registry, version_id, mode).to_json(),
        }
    }
}
