//! Versioned rule sets and the manifest that lists them.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_rules, validate_references, AggregationRule, ParseError, Rule, RuleKind, ValidationRule};
use crate::schema::{RegistryError, VariableRegistry};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: String,
        source: serde_json::Error,
    },
    #[error("unknown version `{0}`")]
    UnknownVersion(String),
    #[error("{file}: {error}")]
    Parse { file: String, error: ParseError },
    #[error("{file}: rule {rule} references unknown variables {names:?}")]
    References {
        file: String,
        rule: String,
        names: Vec<String>,
    },
    #[error("{file}: duplicate rule id {rule}")]
    DuplicateRule { file: String, rule: String },
    #[error("version {version}: manifest declares {declared} {kind} rules, found {actual}")]
    CountMismatch {
        version: String,
        kind: RuleKind,
        declared: usize,
        actual: usize,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredCounts {
    pub validation: usize,
    pub aggregation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub id: String,
    pub date: String,
    pub rules: Vec<String>,
    pub declared: DeclaredCounts,
}

/// JSON manifest; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub registry: String,
    pub versions: Vec<VersionEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, LoadError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|source| LoadError::Manifest {
            path: path.display().to_string(),
            source,
        })
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// An immutable rule set. Rules keep manifest order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSetVersion {
    pub id: String,
    pub date: String,
    rules: Vec<Rule>,
}

impl RuleSetVersion {
    /// Fails on a duplicated rule id, naming it.
    pub fn new(id: impl Into<String>, date: impl Into<String>, rules: Vec<Rule>) -> Result<Self, String> {
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.id().to_string()) {
                return Err(r.id().to_string());
            }
        }
        Ok(Self {
            id: id.into(),
            date: date.into(),
            rules,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id() == id)
    }

    pub fn validation_rules(&self) -> impl Iterator<Item = &ValidationRule> {
        self.rules.iter().filter_map(|r| match r {
            Rule::Validation(v) => Some(v),
            Rule::Aggregation(_) => None,
        })
    }

    pub fn aggregation_rules(&self) -> impl Iterator<Item = &AggregationRule> {
        self.rules.iter().filter_map(|r| match r {
            Rule::Aggregation(a) => Some(a),
            Rule::Validation(_) => None,
        })
    }

    pub fn count(&self, kind: RuleKind) -> usize {
        self.rules.iter().filter(|r| r.kind() == kind).count()
    }

    /// Rule ids of one kind, in order.
    pub fn rule_ids(&self, kind: RuleKind) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| r.kind() == kind)
            .map(|r| r.id())
            .collect()
    }

    /// A copy with the rule of the same id replaced by `rule`.
    pub fn with_rule_replaced(&self, rule: Rule) -> Self {
        let mut rules = self.rules.clone();
        if let Some(slot) = rules.iter_mut().find(|r| r.id() == rule.id()) {
            *slot = rule;
        }
        Self {
            id: self.id.clone(),
            date: self.date.clone(),
            rules,
        }
    }
}

fn load_entry(
    base: &Path,
    entry: &VersionEntry,
    registry: &VariableRegistry,
) -> Result<RuleSetVersion, LoadError> {
    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    for file in &entry.rules {
        let path = base.join(file);
        let text = read(&path)?;
        let parsed = parse_rules(&text).map_err(|error| LoadError::Parse {
            file: file.clone(),
            error,
        })?;
        for rule in parsed {
            let unknown = validate_references(&rule, registry);
            if !unknown.is_empty() {
                return Err(LoadError::References {
                    file: file.clone(),
                    rule: rule.id().to_string(),
                    names: unknown,
                });
            }
            if !seen.insert(rule.id().to_string()) {
                return Err(LoadError::DuplicateRule {
                    file: file.clone(),
                    rule: rule.id().to_string(),
                });
            }
            rules.push(rule);
        }
    }
    let version = RuleSetVersion::new(&entry.id, &entry.date, rules).expect("ids checked above");
    for (kind, declared) in [
        (RuleKind::Validation, entry.declared.validation),
        (RuleKind::Aggregation, entry.declared.aggregation),
    ] {
        let actual = version.count(kind);
        if actual != declared {
            return Err(LoadError::CountMismatch {
                version: entry.id.clone(),
                kind,
                declared,
                actual,
            });
        }
    }
    Ok(version)
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

/// Loads one version, with every rule parsed and reference-checked against
/// the manifest's registry.
pub fn load_ruleset_version(manifest_path: impl AsRef<Path>, version_id: &str) -> Result<RuleSetVersion, LoadError> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::read(manifest_path)?;
    let base = base_dir(manifest_path);
    let registry = VariableRegistry::load(base.join(&manifest.registry))?;
    let entry = manifest
        .versions
        .iter()
        .find(|v| v.id == version_id)
        .ok_or_else(|| LoadError::UnknownVersion(version_id.to_string()))?;
    load_entry(&base, entry, &registry)
}

/// Every version of a manifest plus its registry. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub registry: Arc<VariableRegistry>,
    versions: BTreeMap<String, Arc<RuleSetVersion>>,
    order: Vec<String>,
}

impl Catalog {
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self, LoadError> {
        let manifest_path = manifest_path.as_ref();
        let manifest = Manifest::read(manifest_path)?;
        let base = base_dir(manifest_path);
        let registry = VariableRegistry::load(base.join(&manifest.registry))?;
        let mut versions = BTreeMap::new();
        let mut order = Vec::new();
        for entry in &manifest.versions {
            let v = load_entry(&base, entry, &registry)?;
            order.push(v.id.clone());
            versions.insert(v.id.clone(), Arc::new(v));
        }
        Ok(Self {
            registry: Arc::new(registry),
            versions,
            order,
        })
    }

    pub fn from_parts(registry: VariableRegistry, versions: Vec<RuleSetVersion>) -> Self {
        let order = versions.iter().map(|v| v.id.clone()).collect();
        Self {
            registry: Arc::new(registry),
            versions: versions.into_iter().map(|v| (v.id.clone(), Arc::new(v))).collect(),
            order,
        }
    }

    pub fn version(&self, id: &str) -> Option<&Arc<RuleSetVersion>> {
        self.versions.get(id)
    }

    /// Version ids in manifest order.
    pub fn version_ids(&self) -> &[String] {
        &self.order
    }

    /// A catalog serving only `version`, sharing this registry.
    pub fn single(&self, version: RuleSetVersion) -> Catalog {
        Catalog {
            registry: Arc::clone(&self.registry),
            order: vec![version.id.clone()],
            versions: BTreeMap::from([(version.id.clone(), Arc::new(version))]),
        }
    }
}
