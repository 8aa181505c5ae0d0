//! JSON bodies exchanged with the service.

use serde::{Deserialize, Deserializer, Serialize};

use crate::dsl::{Literal, RuleKind};
use crate::engine::{Outcome, OutcomeVector, RuleResult};
use crate::record::format_date;
use crate::schema::Violation;
use crate::signature::{Category, ErrorSignature, Frame};

/// Keeps an explicit JSON `null` as `Some(Null)` so that aggregation entries
/// round-trip with their output key present.
fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<serde_json::Value>, D::Error> {
    serde_json::Value::deserialize(d).map(Some)
}

pub fn literal_json(literal: &Option<Literal>) -> serde_json::Value {
    match literal {
        None => serde_json::Value::Null,
        Some(Literal::Code(s)) => s.clone().into(),
        Some(Literal::Int(n)) => (*n).into(),
        Some(Literal::Date(d)) => format_date(*d).into(),
    }
}

/// One rule's entry. Aggregation entries always carry `output`, possibly null;
/// validation entries never do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireOutcome {
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RuleResult>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    pub output: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorSignature>,
}

/// Body of a 200 response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeBody {
    pub version: String,
    pub kind: RuleKind,
    pub outcomes: Vec<WireOutcome>,
}

impl From<&OutcomeVector> for OutcomeBody {
    fn from(v: &OutcomeVector) -> Self {
        let outcomes = v
            .entries
            .iter()
            .map(|e| match &e.outcome {
                Outcome::Validated(r) => WireOutcome {
                    rule: e.rule.clone(),
                    result: Some(*r),
                    output: None,
                    error: None,
                },
                Outcome::Aggregated { output, result } => WireOutcome {
                    rule: e.rule.clone(),
                    result: Some(*result),
                    output: Some(literal_json(output)),
                    error: None,
                },
                Outcome::Error(sig) => WireOutcome {
                    rule: e.rule.clone(),
                    result: None,
                    output: None,
                    error: Some(sig.clone()),
                },
            })
            .collect();
        Self {
            version: v.version.clone(),
            kind: v.kind,
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frames {
    pub frames: Vec<Frame>,
}

/// Body of a 500 response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDocument {
    pub signature: Frames,
    pub category: Category,
}

impl ErrorDocument {
    pub fn into_signature(self) -> ErrorSignature {
        ErrorSignature {
            frames: self.signature.frames,
            category: self.category,
        }
    }
}

impl From<&ErrorSignature> for ErrorDocument {
    fn from(sig: &ErrorSignature) -> Self {
        Self {
            signature: Frames {
                frames: sig.frames.clone(),
            },
            category: sig.category,
        }
    }
}

/// Body of a 400 or 404 response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectDocument {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_output_survives_a_round_trip() {
        let w = WireOutcome {
            rule: "A01".into(),
            result: Some(RuleResult::Pass),
            output: Some(serde_json::Value::Null),
            error: None,
        };
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(text, r#"{"rule":"A01","result":"Pass","output":null}"#);
        assert_eq!(serde_json::from_str::<WireOutcome>(&text).unwrap(), w);
        let v: WireOutcome = serde_json::from_str(r#"{"rule":"V01","result":"NotApplied"}"#).unwrap();
        assert_eq!(v.output, None);
    }
}
