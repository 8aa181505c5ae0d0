use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::RuleResult;
use crate::service::{Endpoint, ErrorDocument, OutcomeBody, Reply, WireOutcome};
use crate::signature::{Category, ErrorSignature, Frame, HARNESS_COMPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatusClass {
    Success,
    ClientError,
    ServerError,
}

impl StatusClass {
    pub const ALL: [StatusClass; 3] = [
        StatusClass::Success,
        StatusClass::ClientError,
        StatusClass::ServerError,
    ];

    pub fn of(status: u16) -> Option<StatusClass> {
        match status {
            200..=299 => Some(StatusClass::Success),
            400..=499 => Some(StatusClass::ClientError),
            500..=599 => Some(StatusClass::ServerError),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StatusClass::Success => "2xx",
            StatusClass::ClientError => "4xx",
            StatusClass::ServerError => "5xx",
        }
    }
}

/// A coverable unit. Textual form: `endpoint:validate:2xx`, `rule:V01:Pass`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    EndpointStatus(Endpoint, StatusClass),
    RuleResultPair(String, RuleResult),
}

impl Target {
    pub fn is_endpoint(&self) -> bool {
        matches!(self, Target::EndpointStatus(..))
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::EndpointStatus(e, c) => write!(f, "endpoint:{}:{}", e.name(), c.label()),
            Target::RuleResultPair(r, res) => write!(f, "rule:{r}:{res}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed target `{s}`");
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = rest.rsplit_once(':').ok_or_else(bad)?;
        match head {
            "endpoint" => {
                let class = StatusClass::ALL
                    .into_iter()
                    .find(|c| c.label() == b)
                    .ok_or_else(bad)?;
                Ok(Target::EndpointStatus(a.parse()?, class))
            }
            "rule" => Ok(Target::RuleResultPair(a.to_string(), b.parse()?)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What a generator learns from one response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub status: u16,
    pub outcomes: Vec<WireOutcome>,
    pub signature: Option<ErrorSignature>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed {status} response body: {reason}")]
pub struct ExtractError {
    pub status: u16,
    pub reason: String,
}

impl ExtractError {
    pub fn signature(&self) -> ErrorSignature {
        ErrorSignature::new(
            Frame::new(HARNESS_COMPONENT, "extract_targets", format!("status {}", self.status)),
            Category::Harness,
        )
    }
}

/// Parses a reply. Bodies of 200 and 500 responses must follow the wire
/// format; other bodies are not inspected.
pub fn observe(reply: &Reply) -> Result<Observation, ExtractError> {
    let err = |reason: String| ExtractError {
        status: reply.status,
        reason,
    };
    match reply.status {
        200 => {
            let body: OutcomeBody = serde_json::from_str(&reply.body).map_err(|e| err(e.to_string()))?;
            if body.outcomes.iter().any(|o| o.result.is_none()) {
                return Err(err("outcome without a result".into()));
            }
            Ok(Observation {
                status: 200,
                outcomes: body.outcomes,
                signature: None,
            })
        }
        500 => {
            let doc: ErrorDocument = serde_json::from_str(&reply.body).map_err(|e| err(e.to_string()))?;
            Ok(Observation {
                status: 500,
                outcomes: Vec::new(),
                signature: Some(doc.into_signature()),
            })
        }
        s if StatusClass::of(s).is_none() => Err(err("unexpected status".into())),
        s => Ok(Observation {
            status: s,
            outcomes: Vec::new(),
            signature: None,
        }),
    }
}

/// The endpoint-status target plus, for 200, one rule-result pair per entry.
pub fn targets_of(endpoint: Endpoint, status: u16, outcomes: &[WireOutcome]) -> BTreeSet<Target> {
    let mut set = BTreeSet::new();
    if let Some(c) = StatusClass::of(status) {
        set.insert(Target::EndpointStatus(endpoint, c));
    }
    if status == 200 {
        for o in outcomes {
            if let Some(r) = o.result {
                set.insert(Target::RuleResultPair(o.rule.clone(), r));
            }
        }
    }
    set
}

pub fn extract_targets(reply: &Reply, endpoint: Endpoint) -> Result<BTreeSet<Target>, ExtractError> {
    let obs = observe(reply)?;
    Ok(targets_of(endpoint, obs.status, &obs.outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_round_trips() {
        for t in [
            Target::EndpointStatus(Endpoint::Aggregate, StatusClass::ServerError),
            Target::RuleResultPair("V-EX".into(), RuleResult::NotApplied),
        ] {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert_eq!(
            Target::RuleResultPair("V01".into(), RuleResult::Pass).to_string(),
            "rule:V01:Pass"
        );
    }

    #[test]
    fn rejected_requests_cover_only_the_endpoint() {
        let reply = Reply {
            status: 400,
            body: r#"{"error":"x"}"#.into(),
        };
        assert_eq!(
            extract_targets(&reply, Endpoint::Validate).unwrap(),
            BTreeSet::from([Target::EndpointStatus(Endpoint::Validate, StatusClass::ClientError)])
        );
        let broken = Reply {
            status: 200,
            body: "{".into(),
        };
        assert_eq!(
            extract_targets(&broken, Endpoint::Validate).unwrap_err().signature().category,
            Category::Harness
        );
    }
}
