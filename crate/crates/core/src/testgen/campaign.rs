use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{observe, targets_of, Archive, Oracle, SuiteMeta, Target, TestCase, TestSuite, Transport};
use crate::engine::RuleResult;
use crate::record::Record;
use crate::schema::{Sampler, SamplerConfig, SchemaMode, VariableRegistry};
use crate::service::{Endpoint, WireOutcome};
use crate::signature::{Category, ErrorSignature, Frame, HARNESS_COMPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "RANDOM_BB")]
    RandomBb,
    #[serde(rename = "EVOGURI")]
    EvoGuri,
    #[serde(rename = "MIO_LITE")]
    MioLite,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::RandomBb, Strategy::EvoGuri, Strategy::MioLite];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RandomBb => "RANDOM_BB",
            Strategy::EvoGuri => "EVOGURI",
            Strategy::MioLite => "MIO_LITE",
        }
    }

    /// Whether the archive keeps tests for new rule-result pairs.
    fn tracks_rules(self) -> bool {
        !matches!(self, Strategy::RandomBb)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| format!("unknown strategy `{s}`; expected RANDOM_BB, EVOGURI or MIO_LITE"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MioConfig {
    pub p_fresh: f64,
    pub population_cap: usize,
}

impl Default for MioConfig {
    fn default() -> Self {
        Self {
            p_fresh: 0.5,
            population_cap: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub strategy: Strategy,
    pub budget: u64,
    pub seed: u64,
    pub mode: SchemaMode,
    pub version: String,
    pub endpoints: Vec<Endpoint>,
    pub mio: MioConfig,
    pub absent_probability: f64,
    pub invalid_probability: f64,
}

impl CampaignConfig {
    pub fn new(strategy: Strategy, budget: u64, seed: u64, mode: SchemaMode, version: impl Into<String>) -> Self {
        Self {
            strategy,
            budget,
            seed,
            mode,
            version: version.into(),
            endpoints: Endpoint::ALL.to_vec(),
            mio: MioConfig::default(),
            absent_probability: 0.2,
            invalid_probability: 0.2,
        }
    }

    pub fn meta(&self) -> SuiteMeta {
        SuiteMeta {
            strategy: self.strategy,
            seed: self.seed,
            budget: self.budget,
            version: self.version.clone(),
            schema_mode: self.mode,
        }
    }
}

/// One line of the campaign log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LogEntry {
    pub index: u64,
    pub endpoint: Endpoint,
    /// Absent when no response arrived.
    pub status: Option<u16>,
    pub targets_new: Vec<Target>,
    pub outcomes: Vec<WireOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<ErrorSignature>,
}

pub fn log_to_jsonl(log: &[LogEntry]) -> String {
    let mut out = String::new();
    for e in log {
        out.push_str(&serde_json::to_string(e).expect("log entry serializes"));
        out.push('\n');
    }
    out
}

pub fn log_from_jsonl(text: &str) -> Result<Vec<LogEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub archive: Archive,
    pub log: Vec<LogEntry>,
    pub meta: SuiteMeta,
    /// Largest MIO_LITE population seen; 0 for the other strategies.
    pub peak_population: usize,
}

impl CampaignResult {
    pub fn suite(&self) -> TestSuite {
        TestSuite {
            meta: self.meta.clone(),
            tests: self.archive.tests().iter().map(|t| t.test.clone()).collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    Config(String),
    #[error("service unreachable after {} requests: {reason}", log.len())]
    Unreachable { reason: String, log: Vec<LogEntry> },
}

/// Consecutive transport failures after which the service counts as gone.
const UNREACHABLE_AFTER: usize = 3;

/// Per-target populations for MIO_LITE. A population holds tests that reached
/// a sibling of its target: the same rule with another applied result (or any
/// result, for a `NotApplied` target), or the same endpoint with another status.
struct Populations {
    cap: usize,
    pools: BTreeMap<Target, VecDeque<(Endpoint, Record)>>,
}

fn siblings(a: &Target, b: &Target) -> bool {
    match (a, b) {
        (Target::RuleResultPair(ra, xa), Target::RuleResultPair(rb, xb)) => {
            ra == rb && xa != xb && (*xa == RuleResult::NotApplied || *xb != RuleResult::NotApplied)
        }
        (Target::EndpointStatus(ea, ca), Target::EndpointStatus(eb, cb)) => ea == eb && ca != cb,
        _ => false,
    }
}

impl Populations {
    fn new(cap: usize, endpoints: &[Endpoint]) -> Self {
        let mut pools = BTreeMap::new();
        for &e in endpoints {
            for c in super::StatusClass::ALL {
                pools.insert(Target::EndpointStatus(e, c), VecDeque::new());
            }
        }
        Self { cap, pools }
    }

    fn update(&mut self, endpoint: Endpoint, record: &Record, reached: &BTreeSet<Target>, archive: &Archive) {
        for t in reached {
            if let Target::RuleResultPair(rule, _) = t {
                for r in RuleResult::ALL {
                    self.pools
                        .entry(Target::RuleResultPair(rule.clone(), r))
                        .or_default();
                }
            }
        }
        self.pools.retain(|t, _| !archive.is_covered(t));
        for (target, pool) in self.pools.iter_mut() {
            if reached.iter().any(|r| siblings(target, r)) {
                if pool.len() == self.cap {
                    pool.pop_front();
                }
                pool.push_back((endpoint, record.clone()));
            }
        }
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> Option<&(Endpoint, Record)> {
        let live: Vec<&VecDeque<_>> = self.pools.values().filter(|p| !p.is_empty()).collect();
        if live.is_empty() {
            return None;
        }
        let pool = live[rng.random_range(0..live.len() as u64) as usize];
        Some(&pool[rng.random_range(0..pool.len() as u64) as usize])
    }

    fn max_len(&self) -> usize {
        self.pools.values().map(VecDeque::len).max().unwrap_or(0)
    }
}

/// Issues exactly `budget` requests and archives tests per the strategy.
///
/// RANDOM_BB and EVOGURI draw the same request stream from the same seed and
/// differ only in what they retain.
pub fn run_campaign(
    config: &CampaignConfig,
    registry: &VariableRegistry,
    transport: &mut dyn Transport,
) -> Result<CampaignResult, CampaignError> {
    if config.budget == 0 {
        return Err(CampaignError::Config("budget must be at least 1".into()));
    }
    if config.endpoints.is_empty() {
        return Err(CampaignError::Config("no endpoints".into()));
    }
    if !(0.0..=1.0).contains(&config.mio.p_fresh) || config.mio.population_cap == 0 {
        return Err(CampaignError::Config("MIO p_fresh must be in [0, 1] and the cap positive".into()));
    }
    let sampler_config = SamplerConfig::new(config.seed, config.mode)
        .with_probabilities(config.absent_probability, config.invalid_probability)
        .map_err(|e| CampaignError::Config(e.to_string()))?;
    let mut sampler = Sampler::new(registry, sampler_config);
    let mut archive = Archive::new();
    let mut pops = Populations::new(config.mio.population_cap, &config.endpoints);
    let mut log = Vec::with_capacity(config.budget.min(1 << 20) as usize);
    let mut failures = 0;
    let mut peak_population = 0;

    for index in 0..config.budget {
        let fresh_endpoint = config.endpoints[(index % config.endpoints.len() as u64) as usize];
        let (endpoint, record) = if config.strategy == Strategy::MioLite
            && !sampler.rng().random_bool(config.mio.p_fresh)
        {
            match pops.pick(sampler.rng()).cloned() {
                Some((e, parent)) => (e, sampler.mutate_record(&parent)),
                None => (fresh_endpoint, sampler.sample_record()),
            }
        } else {
            (fresh_endpoint, sampler.sample_record())
        };
        let body = record.to_json();
        let text = serde_json::to_string(&body).expect("record serializes");

        let reply = match transport.send(endpoint, &config.version, &text) {
            Ok(r) => {
                failures = 0;
                r
            }
            Err(e) => {
                failures += 1;
                log.push(LogEntry {
                    index,
                    endpoint,
                    status: None,
                    targets_new: Vec::new(),
                    outcomes: Vec::new(),
                    signature: Some(ErrorSignature::new(
                        Frame::new(HARNESS_COMPONENT, "send_request", "connection failed"),
                        Category::Io,
                    )),
                });
                if failures >= UNREACHABLE_AFTER {
                    return Err(CampaignError::Unreachable { reason: e.0, log });
                }
                continue;
            }
        };
        let obs = match observe(&reply) {
            Ok(o) => o,
            Err(e) => {
                log.push(LogEntry {
                    index,
                    endpoint,
                    status: Some(reply.status),
                    targets_new: Vec::new(),
                    outcomes: Vec::new(),
                    signature: Some(e.signature()),
                });
                continue;
            }
        };
        let reached = targets_of(endpoint, obs.status, &obs.outcomes);
        let tracked: BTreeSet<Target> = if config.strategy.tracks_rules() {
            reached.clone()
        } else {
            reached.iter().filter(|t| t.is_endpoint()).cloned().collect()
        };
        let test = TestCase {
            endpoint,
            body,
            oracle: Oracle {
                status: obs.status,
                outcomes: obs.outcomes.clone(),
            },
        };
        let new = archive.offer(test, index, tracked);
        if config.strategy == Strategy::MioLite {
            pops.update(endpoint, &record, &reached, &archive);
            peak_population = peak_population.max(pops.max_len());
        }
        log.push(LogEntry {
            index,
            endpoint,
            status: Some(obs.status),
            targets_new: new.into_iter().collect(),
            outcomes: obs.outcomes,
            signature: obs.signature,
        });
    }
    archive.finalize();
    Ok(CampaignResult {
        archive,
        log,
        meta: config.meta(),
        peak_population,
    })
}
