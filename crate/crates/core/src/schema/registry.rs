use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Code,
    Integer,
    Date,
    Text,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Code => "code",
            Kind::Integer => "integer",
            Kind::Date => "date",
            Kind::Text => "text",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Enum(Vec<String>),
    Range { lo: i64, hi: i64 },
    DateWindow { earliest: NaiveDate, latest: NaiveDate },
    Pattern(String),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableConstraint {
    pub name: String,
    pub kind: Kind,
    pub constraint: Constraint,
}

impl VariableConstraint {
    pub fn new(name: impl Into<String>, kind: Kind, constraint: Constraint) -> Self {
        Self {
            name: name.into(),
            kind,
            constraint,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("variable `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("duplicate variable `{0}`")]
    Duplicate(String),
    #[error("reading registry {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed registry document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    variables: Vec<VariableConstraint>,
}

/// The set of variables a record may carry, with their value constraints.
#[derive(Debug, Clone)]
pub struct VariableRegistry {
    variables: Vec<VariableConstraint>,
    index: HashMap<String, usize>,
    patterns: Vec<Option<Regex>>,
}

impl PartialEq for VariableRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
    }
}

impl VariableRegistry {
    pub fn new(variables: Vec<VariableConstraint>) -> Result<Self, RegistryError> {
        let mut index = HashMap::new();
        let mut patterns = Vec::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(RegistryError::Duplicate(v.name.clone()));
            }
            patterns.push(check_constraint(v)?);
        }
        Ok(Self {
            variables,
            index,
            patterns,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = serde_json::from_str(text)?;
        Self::new(file.variables)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Pretty JSON in the registry file format.
    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            variables: self.variables.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("registry serializes");
        s.push('\n');
        s
    }

    pub fn variables(&self) -> &[VariableConstraint] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&VariableConstraint> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub(crate) fn pattern(&self, name: &str) -> Option<&Regex> {
        self.index.get(name).and_then(|&i| self.patterns[i].as_ref())
    }
}

fn check_constraint(v: &VariableConstraint) -> Result<Option<Regex>, RegistryError> {
    let invalid = |reason: String| RegistryError::Invalid {
        name: v.name.clone(),
        reason,
    };
    match (&v.constraint, v.kind) {
        (Constraint::None, _) => Ok(None),
        (Constraint::Enum(codes), Kind::Code | Kind::Text) => {
            if codes.is_empty() {
                Err(invalid("enum list is empty".into()))
            } else {
                Ok(None)
            }
        }
        (Constraint::Range { lo, hi }, Kind::Integer) => {
            if lo > hi {
                Err(invalid(format!("range({lo}, {hi}) has lo > hi")))
            } else {
                Ok(None)
            }
        }
        (Constraint::DateWindow { earliest, latest }, Kind::Date) => {
            if earliest > latest {
                Err(invalid(format!("date window {earliest}..{latest} is empty")))
            } else {
                Ok(None)
            }
        }
        (Constraint::Pattern(p), Kind::Code | Kind::Text) => {
            // the sampler must be able to parse the same pattern
            regex_syntax::Parser::new()
                .parse(p)
                .map_err(|e| invalid(format!("bad pattern: {e}")))?;
            Regex::new(&format!("^(?:{p})$"))
                .map(Some)
                .map_err(|e| invalid(format!("bad pattern: {e}")))
        }
        (c, kind) => Err(invalid(format!("constraint {c:?} does not apply to kind {kind}"))),
    }
}
