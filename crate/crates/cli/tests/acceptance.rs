//! Acceptance checks. Prints one PASS/FAIL line per criterion, each with its
//! runtime bound, and exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value as Json;

use regula_cli::experiment::run_experiment;
use regula_cli::plan::{ExperimentPlan, TransportKind};
use regula_cli::report::{build_report, write_report};
use regula_core::dsl::{Literal, Rule};
use regula_core::engine::{eval_aggregation, eval_validation, run_all, Outcome};
use regula_core::mutation::{apply_operator, generate_mutants, run_mutation_testing, site_count, MutationOperator};
use regula_core::schema::{Sampler, SamplerConfig};
use regula_core::service::{Endpoint, Service, WireOutcome};
use regula_core::stats::{a12, bh_adjust, by_adjust, frequency_report, friedman_test, rules_results_report, Magnitude, StatConfig};
use regula_core::testgen::{replay_suite, run_campaign, CampaignConfig, InProcess, LogEntry, Strategy, Verdict};
use regula_core::{Catalog, Record, RuleKind, RuleResult, RuleSetVersion, SchemaMode};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog() -> Arc<Catalog> {
    Arc::new(Catalog::load(manifest()).expect("bundled corpus loads"))
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.json")
}

fn campaign(cat: &Arc<Catalog>, strategy: Strategy, mode: SchemaMode, version: &str, budget: u64, seed: u64) -> regula_core::testgen::CampaignResult {
    let service = Arc::new(Service::new(cat.clone(), mode));
    let config = CampaignConfig::new(strategy, budget, seed, mode, version);
    run_campaign(&config, &cat.registry, &mut InProcess(service)).expect("in-process campaign")
}

fn c1_semantics() -> Check {
    let cat = catalog();
    let s1 = cat.version("s1").unwrap();
    let Some(Rule::Validation(v01)) = s1.rule("V01") else {
        return Err("V01 missing".into());
    };
    let Some(Rule::Aggregation(a01)) = s1.rule("A01") else {
        return Err("A01 missing".into());
    };
    let cases = [
        (Record::new().with("messageType", "K"), RuleResult::NotApplied),
        (Record::new().with("messageType", "M").with("surgery", 96).with("basis", "10"), RuleResult::NotApplied),
        (Record::new().with("messageType", "H").with("surgery", 96).with("basis", "40"), RuleResult::Pass),
        (Record::new().with("messageType", "H").with("surgery", 96).with("basis", "10"), RuleResult::Fail),
        (Record::new().with("messageType", "H").with("surgery", 12).with("basis", "10"), RuleResult::Pass),
    ];
    for (rec, want) in &cases {
        let got = eval_validation(v01, rec).map_err(|e| e.to_string())?;
        ensure(got == *want, || format!("V01 on {rec:?}: {got} != {want}"))?;
    }
    let yes: Vec<&str> = vec!["22", "32", "33", "34", "35", "36", "37", "38", "39", "57", "60", "70", "72", "74", "75", "76", "79"];
    let no: Vec<&str> = vec!["00", "10", "20", "23", "29", "30", "31", "40", "45", "46", "47", "90", "98"];
    let mut n = 0;
    for (codes, out) in [(yes, Some("Yes")), (no, Some("No")), (vec!["99", "01"], None)] {
        for code in codes {
            let got = eval_aggregation(a01, &Record::new().with("basis", code)).map_err(|e| e.to_string())?;
            let want = (out.map(|o| Literal::Code(o.into())), RuleResult::Pass);
            ensure(got == want, || format!("A01 on basis {code}: {got:?}"))?;
            n += 1;
        }
    }
    Ok(format!("{} validation and {n} aggregation cases", cases.len()))
}

fn c2_no_aggregation_not_applied() -> Check {
    let cat = catalog();
    let versions: Vec<Arc<RuleSetVersion>> = cat.version_ids().iter().map(|v| cat.version(v).unwrap().clone()).collect();
    let mut evaluated = 0usize;
    for mode in SchemaMode::ALL {
        let mut sampler = Sampler::new(&cat.registry, SamplerConfig::new(2024, mode));
        for _ in 0..100_000 {
            let rec = sampler.sample_record();
            for v in &versions {
                let out = run_all(v, &rec, RuleKind::Aggregation);
                for e in &out.entries {
                    if let Outcome::Aggregated { result: RuleResult::NotApplied, .. } = e.outcome {
                        return Err(format!("{} NotApplied under {mode:?} on {rec:?}", e.rule));
                    }
                }
                evaluated += out.entries.len();
            }
        }
    }
    Ok(format!("2 x 10^5 records, {evaluated} aggregation evaluations"))
}

/// Site counts from a scan of the serialized tree, independent of the walker.
fn brute_force_sites(rule: &Rule) -> BTreeMap<&'static str, usize> {
    fn walk(j: &Json, c: &mut BTreeMap<&'static str, usize>) {
        match j {
            Json::Object(map) => {
                for (key, inner) in map {
                    let name = match (key.as_str(), inner.get("op").and_then(Json::as_str)) {
                        ("Comparison", Some("Eq" | "Ne")) => Some(("NI", 1)),
                        ("Comparison", Some(_)) => Some(("SComp", 1)),
                        ("Membership", _) => Some(("RI", 1)),
                        ("Connective", _) => Some(("SConn", 1)),
                        ("StringFn", _) => Some(("SSE", 1)),
                        ("Implication", _) => Some(("SSR", 1)),
                        ("Substring", _) => Some(("SSI", 1)),
                        ("Date", _) => Some(("AD", 6)),
                        _ => None,
                    };
                    if let Some((n, w)) = name {
                        *c.entry(n).or_default() += w;
                    }
                    walk(inner, c);
                }
            }
            Json::Array(items) => items.iter().for_each(|i| walk(i, c)),
            _ => {}
        }
    }
    let json = serde_json::to_value(rule).unwrap();
    let mut c = BTreeMap::new();
    walk(&json, &mut c);
    if json["Validation"]["applicability"].is_object() {
        *c.entry("SSR").or_default() += 1;
    }
    c
}

fn c3_mutant_enumeration() -> Check {
    let cat = catalog();
    let mut total = 0;
    for vid in cat.version_ids() {
        let version = cat.version(vid).unwrap();
        let mutants = generate_mutants(version);
        for rule in version.rules() {
            let oracle = brute_force_sites(rule);
            for op in MutationOperator::ALL {
                let want = oracle.get(op.id()).copied().unwrap_or(0);
                let got = mutants.iter().filter(|m| m.rule_id == rule.id() && m.operator == op).count();
                ensure(got == want, || format!("{vid} {} {}: {got} != {want}", rule.id(), op.id()))?;
                ensure(site_count(rule, op) == want, || format!("{vid} {} {} site count", rule.id(), op.id()))?;
            }
        }
        total += mutants.len();
    }
    Ok(format!("{total} mutants over {} versions", cat.version_ids().len()))
}

fn c4_involution() -> Check {
    let cat = catalog();
    let mut checked = 0;
    for vid in cat.version_ids() {
        for rule in cat.version(vid).unwrap().rules() {
            for op in MutationOperator::ALL.into_iter().filter(|o| o.is_involutive()) {
                for site in 0..site_count(rule, op) {
                    let once = apply_operator(rule, op, site).map_err(|e| e.to_string())?;
                    let twice = apply_operator(&once, op, site).map_err(|e| e.to_string())?;
                    ensure(&twice == rule && &once != rule, || format!("{vid} {} {} site {site}", rule.id(), op.id()))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} double applications"))
}

fn c5_dominance() -> Check {
    let cat = catalog();
    let rows: Vec<(String, usize, usize, usize)> = cat
        .version_ids()
        .par_iter()
        .map(|vid| {
            let version = cat.version(vid).unwrap();
            let mutants = generate_mutants(version);
            let kills = |s| {
                let suite = campaign(&cat, s, SchemaMode::Strict, vid, 10_000, 1).suite();
                run_mutation_testing(&suite, &cat, &mutants).unwrap().m_killed
            };
            (vid.clone(), mutants.len(), kills(Strategy::RandomBb), kills(Strategy::EvoGuri))
        })
        .collect();
    let detail: Vec<String> = rows.iter().map(|(v, m, bb, evo)| format!("{v}: {evo} vs {bb} of {m}")).collect();
    for (v, _, bb, evo) in &rows {
        ensure(evo > bb, || format!("{v}: EVOGURI {evo} not above RANDOM_BB {bb}"))?;
    }
    Ok(format!("EVOGURI vs RANDOM_BB kills, {}", detail.join("; ")))
}

fn c6_strict_direction() -> Check {
    let cat = catalog();
    let mut cells = Vec::new();
    for vid in cat.version_ids() {
        for s in Strategy::ALL {
            for mode in SchemaMode::ALL {
                for seed in 1..=10u64 {
                    cells.push((vid.clone(), s, mode, seed));
                }
            }
        }
    }
    let counts: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|(vid, s, mode, seed)| {
            let r = campaign(&cat, *s, *mode, vid, 10_000, *seed);
            let c = rules_results_report(&r.log, cat.version(vid).unwrap());
            (
                c.executed_rules(RuleKind::Validation, RuleResult::Pass) as f64,
                c.executed_rules(RuleKind::Validation, RuleResult::Fail) as f64,
            )
        })
        .collect();
    let mut mean: BTreeMap<(String, Strategy, SchemaMode), (f64, f64)> = BTreeMap::new();
    for ((vid, s, mode, _), (p, f)) in cells.iter().zip(&counts) {
        let e = mean.entry((vid.clone(), *s, *mode)).or_default();
        e.0 += p / 10.0;
        e.1 += f / 10.0;
    }
    let mut lines = Vec::new();
    for vid in cat.version_ids() {
        for s in Strategy::ALL {
            let st = mean[&(vid.clone(), s, SchemaMode::Strict)];
            let de = mean[&(vid.clone(), s, SchemaMode::Default)];
            ensure(st.0 > de.0 && st.1 > de.1, || {
                format!("{vid} {s}: strict pass/fail {:.1}/{:.1} vs default {:.1}/{:.1}", st.0, st.1, de.0, de.1)
            })?;
            if vid == cat.version_ids().last().unwrap() {
                lines.push(format!("{s} {:.1}/{:.1} vs {:.1}/{:.1}", st.0, st.1, de.0, de.1));
            }
        }
    }
    Ok(format!("all versions; latest pass/fail strict vs default: {}", lines.join(", ")))
}

fn hand_friedman(m: &[Vec<f64>]) -> f64 {
    let n = m.len() as f64;
    let k = m[0].len() as f64;
    let mut sums = vec![0.0; m[0].len()];
    for row in m {
        for (j, s) in sums.iter_mut().enumerate() {
            *s += 1.0 + row.iter().filter(|v| **v < row[j]).count() as f64;
        }
    }
    12.0 / (n * k * (k + 1.0)) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n * (k + 1.0)
}

fn c7_statistics() -> Check {
    let x = [1.0, 2.0, 3.0, 4.0];
    ensure(a12(&x, &x).unwrap().a12 == 0.5, || "identity A12".into())?;
    ensure(a12(&[5.0, 6.0], &[1.0, 2.0]).unwrap().a12 == 1.0, || "separation A12".into())?;
    for (scaled, want) in [
        (0.146, Magnitude::Negligible),
        (0.147, Magnitude::Small),
        (0.329, Magnitude::Small),
        (0.33, Magnitude::Medium),
        (0.473, Magnitude::Medium),
        (0.474, Magnitude::Large),
        (-0.474, Magnitude::Large),
    ] {
        ensure(Magnitude::of_scaled(scaled) == want, || format!("magnitude at {scaled}"))?;
    }
    for m in [
        vec![vec![7.0, 9.0, 8.0], vec![6.0, 5.0, 7.0], vec![9.0, 7.0, 6.0], vec![8.0, 5.0, 6.0]],
        vec![vec![1.0, 4.0, 2.0, 3.0], vec![2.0, 3.0, 1.0, 4.0], vec![1.5, 4.5, 3.5, 2.5]],
    ] {
        let got = friedman_test(&m, 12).map_err(|e| e.to_string())?.statistic;
        let want = hand_friedman(&m);
        ensure((got - want).abs() < 1e-9, || format!("Friedman {got} vs {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let len = rng.random_range(1..40);
        let p: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let (by, bh) = (by_adjust(&p), bh_adjust(&p));
        ensure(by.iter().zip(&bh).all(|(a, b)| a >= b), || format!("BY below BH on {p:?}"))?;
    }
    Ok("A12, magnitudes, Friedman fixtures, 1000 BY/BH vectors".into())
}

fn c8_determinism() -> Check {
    let plan = ExperimentPlan {
        manifest: manifest(),
        strategies: vec![Strategy::RandomBb, Strategy::EvoGuri],
        versions: vec!["s1".into(), "s4".into()],
        modes: vec![SchemaMode::Strict],
        repetitions: 2,
        budget: 500,
        seed: 42,
        jobs: 4,
        transport: TransportKind::Http,
        mutation: true,
        baseline: None,
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let summary = run_experiment(&plan, d.path()).map_err(|e| e.to_string())?;
        ensure(summary.failures() == 0, || format!("{} runs failed", summary.failures()))?;
        let report = build_report(d.path(), &StatConfig::default()).map_err(|e| e.to_string())?;
        write_report(&report, &d.path().join("report")).map_err(|e| e.to_string())?;
    }
    let files = |root: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(p) = stack.pop() {
            for e in std::fs::read_dir(&p).unwrap() {
                let path = e.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push((path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
                }
            }
        }
        out.sort();
        out
    };
    let (a, b) = (files(dirs[0].path()), files(dirs[1].path()));
    ensure(a.len() == b.len(), || "different file sets".into())?;
    for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
        ensure(pa == pb && ba == bb, || format!("{} differs", pa.display()))?;
    }
    Ok(format!("{} files byte-identical across reruns", a.len()))
}

fn c9_frequency() -> Check {
    let version = catalog().version("s1").unwrap().clone();
    let ids = version.rule_ids(RuleKind::Validation);
    let entry = |i: usize, r: RuleResult| LogEntry {
        index: i as u64,
        endpoint: Endpoint::Validate,
        status: Some(200),
        targets_new: Vec::new(),
        outcomes: ids
            .iter()
            .enumerate()
            .map(|(j, id)| WireOutcome {
                rule: id.to_string(),
                result: Some(if j == 0 { r } else { RuleResult::ALL[(i + j) % 4] }),
                output: None,
                error: None,
            })
            .collect(),
        signature: None,
    };
    let mut log = Vec::new();
    for (r, n) in [(RuleResult::Pass, 1), (RuleResult::Fail, 5), (RuleResult::NotApplied, 94)] {
        for _ in 0..n {
            log.push(entry(log.len(), r));
        }
    }
    let report = frequency_report(&log, &version, None);
    let got = report.profile.rules[ids[0]].as_array();
    let want = [0.01, 0.05, 0.0, 0.94];
    ensure(got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12), || format!("{got:?}"))?;
    for (id, row) in &report.profile.rules {
        let s: f64 = row.as_array().iter().sum();
        ensure((s - 1.0).abs() < 1e-9, || format!("{id} sums to {s}"))?;
    }
    Ok(format!("{} = {got:?}; {} rows sum to 1", ids[0], report.profile.rules.len()))
}

fn c10_kill_soundness() -> Check {
    let cat = catalog();
    let mut cells = Vec::new();
    for vid in cat.version_ids() {
        for s in Strategy::ALL {
            for mode in SchemaMode::ALL {
                cells.push((vid.clone(), s, mode));
            }
        }
    }
    let tests: Vec<Result<usize, String>> = cells
        .par_iter()
        .map(|(vid, s, mode)| {
            let suite = campaign(&cat, *s, *mode, vid, 2_000, 9).suite();
            let service = Arc::new(Service::new(cat.clone(), *mode));
            let verdicts = replay_suite(&suite, &mut InProcess(service));
            match verdicts.iter().filter(|v| **v != Verdict::Pass).count() {
                0 => Ok(verdicts.len()),
                bad => Err(format!("{vid} {s} {mode:?}: {bad} non-pass verdicts")),
            }
        })
        .collect();
    let mut total = 0;
    for t in tests {
        total += t?;
    }
    Ok(format!("{total} replayed tests over {} suites, all pass", cells.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "semantics golden suite", Duration::from_secs(1), c1_semantics),
        (2, "aggregation never NotApplied", Duration::from_secs(30), c2_no_aggregation_not_applied),
        (3, "mutant enumeration oracle", Duration::from_secs(10), c3_mutant_enumeration),
        (4, "involution", Duration::from_secs(10), c4_involution),
        (5, "EVOGURI kills more than RANDOM_BB", Duration::from_secs(300), c5_dominance),
        (6, "strict beats default on Pass and Fail", Duration::from_secs(600), c6_strict_direction),
        (7, "statistics oracles", Duration::from_secs(10), c7_statistics),
        (8, "end-to-end determinism", Duration::from_secs(300), c8_determinism),
        (9, "frequency normalization", Duration::from_secs(1), c9_frequency),
        (10, "kill soundness", Duration::from_secs(60), c10_kill_soundness),
    ];
    let mut failed = 0;
    for (n, name, bound, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > bound => Err(format!("took {elapsed:.2?}, bound {bound:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {n:>2} {name} [{elapsed:.2?} < {bound:?}]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name} [{elapsed:.2?} < {bound:?}]: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
