use std::path::PathBuf;

use regula_core::dsl::{format_rule, parse_rule};
use regula_core::engine::{load_ruleset_version, LoadError, Outcome};
use regula_core::{run_all, Catalog, Record, RuleKind, RuleResult};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.json")
}

#[test]
fn every_version_loads_with_declared_counts() {
    let catalog = Catalog::load(manifest()).unwrap();
    let counts: Vec<(usize, usize)> = catalog
        .version_ids()
        .iter()
        .map(|id| {
            let v = catalog.version(id).unwrap();
            (v.count(RuleKind::Validation), v.count(RuleKind::Aggregation))
        })
        .collect();
    assert_eq!(counts, vec![(20, 8), (22, 9), (24, 9), (25, 10)]);
}

#[test]
fn corpus_rules_round_trip_through_the_printer() {
    let catalog = Catalog::load(manifest()).unwrap();
    for id in catalog.version_ids() {
        for rule in catalog.version(id).unwrap().rules() {
            let printed = format_rule(rule);
            assert_eq!(&parse_rule(&printed).unwrap(), rule, "{printed}");
        }
    }
}

#[test]
fn all_absent_record_is_not_applied_everywhere() {
    let v = load_ruleset_version(manifest(), "s1").unwrap();
    let out = run_all(&v, &Record::new(), RuleKind::Validation);
    assert_eq!(out.entries.len(), 20);
    for e in &out.entries {
        assert_eq!(e.outcome, Outcome::Validated(RuleResult::NotApplied), "{}", e.rule);
    }
    let agg = run_all(&v, &Record::new(), RuleKind::Aggregation);
    assert!(agg.entries.iter().all(|e| e.outcome.result() != Some(RuleResult::NotApplied)));
}

#[test]
fn unknown_version_and_bad_reference_are_reported() {
    assert!(matches!(
        load_ruleset_version(manifest(), "s99"),
        Err(LoadError::UnknownVersion(v)) if v == "s99"
    ));
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(
        manifest().with_file_name("variables.json"),
        dir.path().join("variables.json"),
    )
    .unwrap();
    std::fs::write(dir.path().join("bad.rule"), "rule VX: check surgerg = 1 severity error\n").unwrap();
    std::fs::write(
        dir.path().join("manifest.json"),
        r#"{"registry":"variables.json","versions":[{"id":"b","date":"2024-01-01","rules":["bad.rule"],"declared":{"validation":1,"aggregation":0}}]}"#,
    )
    .unwrap();
    match load_ruleset_version(dir.path().join("manifest.json"), "b") {
        Err(LoadError::References { file, rule, names }) => {
            assert_eq!((file.as_str(), rule.as_str()), ("bad.rule", "VX"));
            assert_eq!(names, vec!["surgerg".to_string()]);
        }
        other => panic!("{other:?}"),
    }
}
