//! Error signatures: the stack-trace analog attached to 500 responses, and
//! their classification into unique errors and failure points.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENGINE_COMPONENT: &str = "rule-engine";
pub const DSL_COMPONENT: &str = "rule-dsl";
pub const SERVICE_COMPONENT: &str = "rules-service";
pub const HARNESS_COMPONENT: &str = "testgen";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Frame {
    pub component: String,
    pub operation: String,
    pub detail: String,
}

impl Frame {
    pub fn new(component: &str, operation: &str, detail: impl Into<String>) -> Self {
        Self {
            component: component.to_string(),
            operation: operation.to_string(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}({})", self.component, self.operation, self.detail)
    }
}

/// Harness = failures of the test generator itself; IO = transport faults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Harness,
    Io,
    Remaining,
}

/// Innermost frame first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorSignature {
    pub frames: Vec<Frame>,
    pub category: Category,
}

impl ErrorSignature {
    pub fn new(first: Frame, category: Category) -> Self {
        Self {
            frames: vec![first],
            category,
        }
    }

    /// Appends an outer (caller) frame.
    pub fn push(mut self, frame: Frame) -> Self {
        self.frames.push(frame);
        self
    }

    pub fn failure_point(&self) -> &Frame {
        &self.frames[0]
    }
}

/// Components whose frames count as library code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamespaceConfig {
    pub library: BTreeSet<String>,
}

impl Default for NamespaceConfig {
    fn default() -> Self {
        Self {
            library: [ENGINE_COMPONENT, DSL_COMPONENT]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Classification {
    /// Hex SHA-256 over every frame.
    pub unique_error: String,
    /// `component::operation(detail)` of the first frame.
    pub failure_point: String,
    pub is_library: bool,
    pub category: Category,
}

pub fn classify_error(signature: &ErrorSignature, namespaces: &NamespaceConfig) -> Classification {
    let mut hasher = Sha256::new();
    for f in &signature.frames {
        for part in [&f.component, &f.operation, &f.detail] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
    }
    let first = signature.failure_point();
    Classification {
        unique_error: hex::encode(hasher.finalize()),
        failure_point: first.to_string(),
        is_library: namespaces.library.contains(&first.component),
        category: signature.category,
    }
}
