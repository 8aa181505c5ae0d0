//! Variable registry, default/strict schema documents, body conformance and
//! schema-driven sampling.

mod pattern;
mod registry;
mod sampler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use pattern::PatternGenerator;
pub use registry::{Constraint, Kind, RegistryError, VariableConstraint, VariableRegistry};
pub use sampler::{
    sample_record, ProbabilityError, Sampler, SamplerConfig, DEFAULT_ABSENT_PROBABILITY,
    DEFAULT_INVALID_PROBABILITY,
};

use crate::record::{format_date, parse_date, Record, Value};

/// `default` describes kinds only; `strict` adds the registry's value constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaMode {
    Default,
    Strict,
}

impl SchemaMode {
    pub const ALL: [SchemaMode; 2] = [SchemaMode::Default, SchemaMode::Strict];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaMode::Default => "default",
            SchemaMode::Strict => "strict",
        }
    }
}

impl fmt::Display for SchemaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(SchemaMode::Default),
            "strict" => Ok(SchemaMode::Strict),
            other => Err(format!("unknown schema mode `{other}` (expected default|strict)")),
        }
    }
}

/// One field of a schema document. Keys serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSchema {
    pub name: String,
    pub kind: Kind,
    #[serde(rename = "enum", skip_serializing_if = "Option::is_none", default)]
    pub enumeration: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub minimum: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub maximum: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub earliest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pattern: Option<String>,
}

impl FieldSchema {
    /// The same field with every value constraint removed.
    pub fn unconstrained(&self) -> FieldSchema {
        FieldSchema {
            name: self.name.clone(),
            kind: self.kind,
            enumeration: None,
            minimum: None,
            maximum: None,
            format: None,
            earliest: None,
            latest: None,
            pattern: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub version: String,
    pub mode: SchemaMode,
    pub fields: Vec<FieldSchema>,
}

impl SchemaDocument {
    pub fn build(registry: &VariableRegistry, version: &str, mode: SchemaMode) -> Self {
        let fields = registry
            .variables()
            .iter()
            .map(|v| {
                let mut f = FieldSchema {
                    name: v.name.clone(),
                    kind: v.kind,
                    enumeration: None,
                    minimum: None,
                    maximum: None,
                    format: None,
                    earliest: None,
                    latest: None,
                    pattern: None,
                };
                if mode == SchemaMode::Strict {
                    if v.kind == Kind::Date {
                        f.format = Some("date".into());
                    }
                    match &v.constraint {
                        Constraint::Enum(codes) => f.enumeration = Some(codes.clone()),
                        Constraint::Range { lo, hi } => {
                            f.minimum = Some(*lo);
                            f.maximum = Some(*hi);
                        }
                        Constraint::DateWindow { earliest, latest } => {
                            f.earliest = Some(format_date(*earliest));
                            f.latest = Some(format_date(*latest));
                        }
                        Constraint::Pattern(p) => f.pattern = Some(p.clone()),
                        Constraint::None => {}
                    }
                }
                f
            })
            .collect();
        SchemaDocument {
            version: version.to_string(),
            mode,
            fields,
        }
    }

    /// Compact JSON, the exact bytes served by the schema endpoint.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schema document serializes")
    }
}

/// A reason a request body is rejected with 400.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

/// Checks a JSON body against the registry under `mode` and converts it to a
/// [`Record`]. JSON `null` means absent.
///
/// Both modes reject non-object bodies, unknown fields and wrong JSON kinds.
/// Strict mode additionally enforces value constraints and calendar-valid date
/// text. Under default mode a date field accepts any string; text that is not a
/// calendar date is kept as a code value and fails later, inside the engine.
pub fn conform(
    body: &serde_json::Value,
    registry: &VariableRegistry,
    mode: SchemaMode,
) -> Result<Record, Vec<Violation>> {
    let Some(obj) = body.as_object() else {
        return Err(vec![Violation {
            field: String::new(),
            reason: "body must be a JSON object".into(),
        }]);
    };
    let mut record = Record::new();
    let mut violations = Vec::new();
    for (name, json) in obj {
        let mut bad = |reason: String| {
            violations.push(Violation {
                field: name.clone(),
                reason,
            })
        };
        let Some(var) = registry.get(name) else {
            bad("unknown field".into());
            continue;
        };
        if json.is_null() {
            continue;
        }
        let value = match (var.kind, json) {
            (Kind::Integer, serde_json::Value::Number(n)) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => {
                    bad("expected an integer".into());
                    continue;
                }
            },
            (Kind::Integer, _) => {
                bad("expected an integer".into());
                continue;
            }
            (Kind::Date, serde_json::Value::String(s)) => match parse_date(s) {
                Some(d) => Value::Date(d),
                None if mode == SchemaMode::Strict => {
                    bad("expected a date in YYYY-MM-DD form".into());
                    continue;
                }
                None => Value::Code(s.clone()),
            },
            (Kind::Code | Kind::Text, serde_json::Value::String(s)) => Value::Code(s.clone()),
            (kind, _) => {
                bad(format!("expected a {kind} string"));
                continue;
            }
        };
        if mode == SchemaMode::Strict {
            if let Some(reason) = constraint_violation(registry, var, &value) {
                bad(reason);
                continue;
            }
        }
        record.insert(name, value);
    }
    if violations.is_empty() {
        Ok(record)
    } else {
        Err(violations)
    }
}

fn constraint_violation(
    registry: &VariableRegistry,
    var: &VariableConstraint,
    value: &Value,
) -> Option<String> {
    match (&var.constraint, value) {
        (Constraint::Enum(codes), Value::Code(s)) if !codes.contains(s) => {
            Some(format!("'{s}' is not an allowed code"))
        }
        (Constraint::Range { lo, hi }, Value::Int(n)) if n < lo || n > hi => {
            Some(format!("{n} outside [{lo}, {hi}]"))
        }
        (Constraint::DateWindow { earliest, latest }, Value::Date(d)) if d < earliest || d > latest => {
            Some(format!("{d} outside [{earliest}, {latest}]"))
        }
        (Constraint::Pattern(p), Value::Code(s)) => {
            let re = registry.pattern(&var.name).expect("compiled pattern");
            (!re.is_match(s)).then(|| format!("'{s}' does not match {p}"))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use serde_json::json;

    fn registry() -> VariableRegistry {
        VariableRegistry::new(vec![
            VariableConstraint::new(
                "basis",
                Kind::Code,
                Constraint::Enum(vec!["22".into(), "32".into()]),
            ),
            VariableConstraint::new("age", Kind::Integer, Constraint::Range { lo: 0, hi: 120 }),
            VariableConstraint::new(
                "dx",
                Kind::Date,
                Constraint::DateWindow {
                    earliest: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
                    latest: NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
                },
            ),
        ])
        .unwrap()
    }

    #[test]
    fn strict_document_carries_enum_and_default_only_kind() {
        let reg = registry();
        let strict = SchemaDocument::build(&reg, "s1", SchemaMode::Strict);
        let default = SchemaDocument::build(&reg, "s1", SchemaMode::Default);
        assert_eq!(
            strict.fields[0].enumeration.as_deref(),
            Some(&["22".to_string(), "32".to_string()][..])
        );
        assert!(!default.to_json().contains("\"enum\""));
        assert_eq!(
            serde_json::to_string(&default.fields[0]).unwrap(),
            r#"{"name":"basis","kind":"code"}"#
        );
        let stripped: Vec<FieldSchema> = strict.fields.iter().map(FieldSchema::unconstrained).collect();
        assert_eq!(stripped, default.fields);
    }

    #[test]
    fn schema_document_bytes_are_stable() {
        let doc = SchemaDocument::build(&registry(), "s1", SchemaMode::Strict);
        assert_eq!(
            doc.to_json(),
            concat!(
                r#"{"version":"s1","mode":"strict","fields":["#,
                r#"{"name":"basis","kind":"code","enum":["22","32"]},"#,
                r#"{"name":"age","kind":"integer","minimum":0,"maximum":120},"#,
                r#"{"name":"dx","kind":"date","format":"date","earliest":"1990-01-01","latest":"2024-12-31"}]}"#
            )
        );
    }

    #[test]
    fn malformed_date_is_rejected_only_in_strict_mode() {
        let reg = registry();
        let body = json!({"dx": "2020-13-45"});
        assert!(conform(&body, &reg, SchemaMode::Strict).is_err());
        let rec = conform(&body, &reg, SchemaMode::Default).unwrap();
        assert_eq!(rec.get("dx"), Some(&Value::Code("2020-13-45".into())));
    }

    #[test]
    fn structural_violations_fail_in_both_modes() {
        let reg = registry();
        for body in [json!({"nope": 1}), json!({"age": "12"}), json!({"basis": 22}), json!([1])] {
            for mode in SchemaMode::ALL {
                assert!(conform(&body, &reg, mode).is_err(), "{body} {mode}");
            }
        }
    }

    #[test]
    fn strict_enforces_constraints_default_does_not() {
        let reg = registry();
        let body = json!({"basis": "99", "age": 500, "dx": "1950-01-01"});
        let errs = conform(&body, &reg, SchemaMode::Strict).unwrap_err();
        assert_eq!(errs.len(), 3);
        assert_eq!(conform(&body, &reg, SchemaMode::Default).unwrap().len(), 3);
    }

    #[test]
    fn null_and_empty_mean_absent() {
        let reg = registry();
        let rec = conform(&json!({"age": null}), &reg, SchemaMode::Strict).unwrap();
        assert!(rec.is_empty());
        assert!(conform(&json!({}), &reg, SchemaMode::Strict).unwrap().is_empty());
    }
}
