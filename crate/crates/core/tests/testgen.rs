use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use regula_core::dsl::{CompareOp, Expr, Rule};
use regula_core::service::{server, Endpoint, Reply, Service};
use regula_core::testgen::*;
use regula_core::{Catalog, RuleResult, SchemaMode};

fn catalog() -> Arc<Catalog> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.json");
    Arc::new(Catalog::load(path).unwrap())
}

struct Recording<T> {
    inner: T,
    sent: Vec<(Endpoint, String)>,
}

impl<T: Transport> Transport for Recording<T> {
    fn send(&mut self, e: Endpoint, v: &str, body: &str) -> Result<Reply, TransportError> {
        self.sent.push((e, body.to_string()));
        self.inner.send(e, v, body)
    }
}

fn run(cat: &Arc<Catalog>, strategy: Strategy, mode: SchemaMode, budget: u64, seed: u64) -> (CampaignResult, Vec<(Endpoint, String)>) {
    let service = Arc::new(Service::new(cat.clone(), mode));
    let mut t = Recording {
        inner: InProcess(service),
        sent: Vec::new(),
    };
    let config = CampaignConfig::new(strategy, budget, seed, mode, "s2");
    let r = run_campaign(&config, &cat.registry, &mut t).unwrap();
    (r, t.sent)
}

#[test]
fn campaigns_are_deterministic() {
    let cat = catalog();
    for s in Strategy::ALL {
        let (a, _) = run(&cat, s, SchemaMode::Default, 400, 9);
        let (b, _) = run(&cat, s, SchemaMode::Default, 400, 9);
        assert_eq!(log_to_jsonl(&a.log), log_to_jsonl(&b.log));
        assert_eq!(a.suite().to_json(), b.suite().to_json());
        assert_eq!(a.log.len(), 400);
    }
}

#[test]
fn bb_and_evoguri_share_the_stream_and_evoguri_dominates() {
    let cat = catalog();
    for mode in SchemaMode::ALL {
        let (bb, bb_sent) = run(&cat, Strategy::RandomBb, mode, 1500, 4);
        let (evo, evo_sent) = run(&cat, Strategy::EvoGuri, mode, 1500, 4);
        assert_eq!(bb_sent, evo_sent);
        let ends = |c: &BTreeSet<Target>| c.iter().filter(|t| t.is_endpoint()).cloned().collect::<BTreeSet<_>>();
        assert_eq!(ends(bb.archive.covered()), ends(evo.archive.covered()));
        let pairs = |s: &TestSuite| s.covered().into_iter().filter(|t| !t.is_endpoint()).collect::<BTreeSet<_>>();
        assert!(pairs(&evo.suite()).is_superset(&pairs(&bb.suite())));
        assert!(evo.archive.len() > bb.archive.len());
    }
}

#[test]
fn archive_invariants() {
    let cat = catalog();
    for s in Strategy::ALL {
        let (r, _) = run(&cat, s, SchemaMode::Strict, 1000, 2);
        // New targets are announced once and together make up the covered set.
        let mut seen = BTreeSet::new();
        for e in &r.log {
            for t in &e.targets_new {
                assert!(seen.insert(t.clone()), "{t} announced twice");
            }
        }
        assert_eq!(&seen, r.archive.covered());
        // Every retained test covers something no other retained test covers.
        let tests = r.archive.tests();
        for (i, t) in tests.iter().enumerate() {
            let others: BTreeSet<&Target> = tests
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, o)| &o.covers)
                .collect();
            assert!(t.covers.iter().any(|c| !others.contains(c)), "{s}: test {i} is redundant");
        }
        // The suite covers every rule-result pair the campaign observed.
        if s != Strategy::RandomBb {
            let observed: BTreeSet<Target> = r
                .log
                .iter()
                .filter(|e| e.status == Some(200))
                .flat_map(|e| targets_of(e.endpoint, 200, &e.outcomes))
                .collect();
            assert!(r.suite().covered().is_superset(&observed));
        }
    }
}

#[test]
fn mio_population_respects_cap() {
    let cat = catalog();
    let service = Arc::new(Service::new(cat.clone(), SchemaMode::Default));
    let mut config = CampaignConfig::new(Strategy::MioLite, 800, 5, SchemaMode::Default, "s2");
    config.mio.population_cap = 3;
    let r = run_campaign(&config, &cat.registry, &mut InProcess(service)).unwrap();
    assert!(r.peak_population > 0 && r.peak_population <= 3);
}

#[test]
fn budget_bounds() {
    let cat = catalog();
    let service = Arc::new(Service::new(cat.clone(), SchemaMode::Default));
    let zero = CampaignConfig::new(Strategy::EvoGuri, 0, 1, SchemaMode::Default, "s2");
    assert!(matches!(
        run_campaign(&zero, &cat.registry, &mut InProcess(service.clone())),
        Err(CampaignError::Config(_))
    ));
    let one = CampaignConfig::new(Strategy::EvoGuri, 1, 1, SchemaMode::Default, "s2");
    let r = run_campaign(&one, &cat.registry, &mut InProcess(service)).unwrap();
    assert!(r.archive.len() <= 1);
    assert_eq!(r.log.len(), 1);
}

#[test]
fn suite_file_round_trip_and_replay() {
    let cat = catalog();
    let (r, _) = run(&cat, Strategy::EvoGuri, SchemaMode::Default, 600, 8);
    let suite = r.suite();
    assert_eq!(suite.tests.len(), r.archive.len());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("suite.json");
    emit_suite(&suite, &path).unwrap();
    let back = load_suite(&path).unwrap();
    assert_eq!(back, suite);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), back.to_json());

    let service = Arc::new(Service::new(cat.clone(), SchemaMode::Default));
    let verdicts = replay_suite(&suite, &mut InProcess(service.clone()));
    assert!(verdicts.iter().all(|v| *v == Verdict::Pass));

    let handle = server::spawn(service, "127.0.0.1:0".parse().unwrap()).unwrap();
    let over_http = replay_suite(&suite, &mut Http::new(handle.base_url()));
    assert_eq!(over_http, verdicts);
    handle.stop();
}

#[test]
fn replay_detects_a_flipped_comparison() {
    let cat = catalog();
    let (r, _) = run(&cat, Strategy::EvoGuri, SchemaMode::Strict, 2000, 3);
    let suite = r.suite();
    assert!(suite.covered().contains(&Target::RuleResultPair("V01".into(), RuleResult::Pass)));
    let version = cat.version("s2").unwrap();
    let Rule::Validation(mut v01) = version.rule("V01").unwrap().clone() else {
        panic!()
    };
    if let Some(Expr::Comparison { op, .. }) = &mut v01.applicability {
        *op = CompareOp::Ne;
    }
    let mutated = cat.single(version.with_rule_replaced(Rule::Validation(v01)));
    let service = Arc::new(Service::new(Arc::new(mutated), SchemaMode::Strict));
    let verdicts = replay_suite(&suite, &mut InProcess(service));
    assert!(verdicts.contains(&Verdict::Fail));
}

#[test]
fn extraction_counts_one_target_per_rule_plus_endpoint() {
    let cat = catalog();
    let service = Service::new(cat.clone(), SchemaMode::Default);
    let reply = service.post(Endpoint::Validate, "s1", b"{}");
    let targets = extract_targets(&reply, Endpoint::Validate).unwrap();
    assert_eq!(targets.len(), 21);
    assert!(targets.contains(&Target::RuleResultPair("V01".into(), RuleResult::NotApplied)));
}

#[test]
fn unreachable_service_aborts_with_partial_log() {
    let cat = catalog();
    // Bind then drop to obtain a port nobody listens on.
    let addr: SocketAddr = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let config = CampaignConfig::new(Strategy::RandomBb, 50, 1, SchemaMode::Default, "s1");
    match run_campaign(&config, &cat.registry, &mut Http::new(format!("http://{addr}"))) {
        Err(CampaignError::Unreachable { log, .. }) => {
            assert_eq!(log.len(), 3);
            assert!(log.iter().all(|e| e.status.is_none()));
        }
        other => panic!("{:?}", other.map(|r| r.log.len())),
    }
    let suite = TestSuite {
        meta: config.meta(),
        tests: vec![TestCase {
            endpoint: Endpoint::Validate,
            body: serde_json::json!({}),
            oracle: Oracle {
                status: 200,
                outcomes: Vec::new(),
            },
        }],
    };
    let v = replay_suite(&suite, &mut Http::new(format!("http://{addr}")));
    assert!(matches!(v[0], Verdict::Error(_)));
}
