//! Schema-driven record sampling and single-slot record mutation.
//!
//! Streams come from [`ChaCha8Rng`], so a `(seed, config)` pair yields the same
//! records on every platform.
//!
//! Value universes:
//!
//! | kind    | strict                        | default                                           |
//! |---------|-------------------------------|---------------------------------------------------|
//! | code    | uniform over the enum/pattern | 1–3 chars from `[0-9A-Z]`                          |
//! | integer | uniform over the range        | uniform over ±1 000 000                            |
//! | date    | uniform day in the window     | malformed text w.p. `invalid`, else 1800–2199      |
//! | text    | pattern, else free text       | 0–8 chars from `[A-Za-z0-9./]`                     |

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::pattern::PatternGenerator;
use super::registry::{Constraint, Kind, VariableConstraint, VariableRegistry};
use super::SchemaMode;
use crate::record::{Record, Value};

pub const DEFAULT_ABSENT_PROBABILITY: f64 = 0.2;
pub const DEFAULT_INVALID_PROBABILITY: f64 = 0.2;

const CODE_ALPHABET: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const TEXT_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789./";
const FREE_INT_BOUND: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub mode: SchemaMode,
    pub absent_probability: f64,
    pub invalid_probability: f64,
}

#[derive(Debug, thiserror::Error)]
#[error("{0} must lie in [0, 1]")]
pub struct ProbabilityError(&'static str);

impl SamplerConfig {
    pub fn new(seed: u64, mode: SchemaMode) -> Self {
        Self {
            seed,
            mode,
            absent_probability: DEFAULT_ABSENT_PROBABILITY,
            invalid_probability: match mode {
                SchemaMode::Default => DEFAULT_INVALID_PROBABILITY,
                SchemaMode::Strict => 0.0,
            },
        }
    }

    pub fn with_probabilities(mut self, absent: f64, invalid: f64) -> Result<Self, ProbabilityError> {
        if !(0.0..=1.0).contains(&absent) {
            return Err(ProbabilityError("absent-probability"));
        }
        if !(0.0..=1.0).contains(&invalid) {
            return Err(ProbabilityError("invalid-probability"));
        }
        self.absent_probability = absent;
        self.invalid_probability = invalid;
        Ok(self)
    }

    /// Strict mode never produces malformed values.
    pub fn effective_invalid_probability(&self) -> f64 {
        match self.mode {
            SchemaMode::Strict => 0.0,
            SchemaMode::Default => self.invalid_probability,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Samples records and mutants from one registry, owning its RNG.
pub struct Sampler<'a> {
    registry: &'a VariableRegistry,
    config: SamplerConfig,
    generators: Vec<Option<PatternGenerator>>,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn new(registry: &'a VariableRegistry, config: SamplerConfig) -> Self {
        let generators = registry
            .variables()
            .iter()
            .map(|v| match &v.constraint {
                Constraint::Pattern(p) => {
                    Some(PatternGenerator::new(p).expect("registry validated the pattern"))
                }
                _ => None,
            })
            .collect();
        Self {
            registry,
            config,
            generators,
            rng: config.rng(),
        }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn sample_record(&mut self) -> Record {
        let mut record = Record::new();
        for i in 0..self.registry.len() {
            if self.rng.random_bool(self.config.absent_probability) {
                continue;
            }
            let value = self.draw(i);
            record.insert(&self.registry.variables()[i].name, value);
        }
        record
    }

    /// Applies exactly one of: resample a present variable, drop a present
    /// variable, add an absent variable. The choice is uniform over the
    /// operations applicable to `record`.
    pub fn mutate_record(&mut self, record: &Record) -> Record {
        let vars = self.registry.variables();
        let present: Vec<usize> = (0..vars.len()).filter(|&i| record.contains(&vars[i].name)).collect();
        let absent: Vec<usize> = (0..vars.len()).filter(|&i| !record.contains(&vars[i].name)).collect();
        let mut ops: Vec<MutationOp> = Vec::with_capacity(3);
        if !present.is_empty() {
            ops.push(MutationOp::Resample);
            ops.push(MutationOp::Drop);
        }
        if !absent.is_empty() {
            ops.push(MutationOp::Add);
        }
        let mut out = record.clone();
        if ops.is_empty() {
            return out;
        }
        let op = ops[self.rng.random_range(0..ops.len() as u32) as usize];
        match op {
            MutationOp::Resample => {
                let i = present[self.rng.random_range(0..present.len() as u32) as usize];
                let name = &vars[i].name;
                let old = record.get(name).cloned();
                for _ in 0..32 {
                    let v = self.draw(i);
                    if Some(&v) != old.as_ref() {
                        out.insert(name, v);
                        return out;
                    }
                }
                // single-valued universe: the slot can only change by vanishing
                out.remove(name);
            }
            MutationOp::Drop => {
                let i = present[self.rng.random_range(0..present.len() as u32) as usize];
                out.remove(&vars[i].name);
            }
            MutationOp::Add => {
                let i = absent[self.rng.random_range(0..absent.len() as u32) as usize];
                let v = self.draw(i);
                out.insert(&vars[i].name, v);
            }
        }
        out
    }

    fn draw(&mut self, i: usize) -> Value {
        let var = &self.registry.variables()[i];
        let invalid = self.config.effective_invalid_probability();
        match self.config.mode {
            SchemaMode::Strict => draw_strict(var, self.generators[i].as_ref(), &mut self.rng),
            SchemaMode::Default => draw_free(var.kind, invalid, &mut self.rng),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum MutationOp {
    Resample,
    Drop,
    Add,
}

/// One-shot form of [`Sampler::sample_record`] over a caller-held RNG.
pub fn sample_record<R: Rng + ?Sized>(
    registry: &VariableRegistry,
    config: &SamplerConfig,
    rng: &mut R,
) -> Record {
    let mut record = Record::new();
    for var in registry.variables() {
        if rng.random_bool(config.absent_probability) {
            continue;
        }
        let value = match config.mode {
            SchemaMode::Strict => {
                let gen = match &var.constraint {
                    Constraint::Pattern(p) => PatternGenerator::new(p).ok(),
                    _ => None,
                };
                draw_strict(var, gen.as_ref(), rng)
            }
            SchemaMode::Default => draw_free(var.kind, config.effective_invalid_probability(), rng),
        };
        record.insert(&var.name, value);
    }
    record
}

fn draw_strict<R: Rng + ?Sized>(
    var: &VariableConstraint,
    gen: Option<&PatternGenerator>,
    rng: &mut R,
) -> Value {
    match &var.constraint {
        Constraint::Enum(codes) => {
            Value::Code(codes[rng.random_range(0..codes.len() as u32) as usize].clone())
        }
        Constraint::Range { lo, hi } => Value::Int(rng.random_range(*lo..=*hi)),
        Constraint::DateWindow { earliest, latest } => Value::Date(random_day(*earliest, *latest, rng)),
        Constraint::Pattern(_) => Value::Code(gen.expect("pattern generator").generate(rng)),
        Constraint::None => draw_free(var.kind, 0.0, rng),
    }
}

fn draw_free<R: Rng + ?Sized>(kind: Kind, invalid: f64, rng: &mut R) -> Value {
    match kind {
        Kind::Code => {
            let len = rng.random_range(1..=3u32);
            Value::Code(random_string(CODE_ALPHABET, len, rng))
        }
        Kind::Text => {
            let len = rng.random_range(0..=8u32);
            Value::Code(random_string(TEXT_ALPHABET, len, rng))
        }
        Kind::Integer => Value::Int(rng.random_range(-FREE_INT_BOUND..=FREE_INT_BOUND)),
        Kind::Date => {
            if invalid > 0.0 && rng.random_bool(invalid) {
                Value::Code(malformed_date(rng))
            } else {
                let lo = NaiveDate::from_ymd_opt(1800, 1, 1).unwrap();
                let hi = NaiveDate::from_ymd_opt(2199, 12, 31).unwrap();
                Value::Date(random_day(lo, hi, rng))
            }
        }
    }
}

fn random_string<R: Rng + ?Sized>(alphabet: &[u8], len: u32, rng: &mut R) -> String {
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len() as u32) as usize] as char)
        .collect()
}

fn random_day<R: Rng + ?Sized>(lo: NaiveDate, hi: NaiveDate, rng: &mut R) -> NaiveDate {
    let span = (hi - lo).num_days() as u64;
    lo + Days::new(rng.random_range(0..=span))
}

/// Text that looks like a date but never parses as ISO `YYYY-MM-DD`.
fn malformed_date<R: Rng + ?Sized>(rng: &mut R) -> String {
    let year = rng.random_range(1900..=2099u32);
    match rng.random_range(0..3u32) {
        0 => format!("{year}-{:02}-{:02}", rng.random_range(13..=99u32), rng.random_range(1..=28u32)),
        1 => format!("{year}-{:02}-{:02}", rng.random_range(1..=12u32), rng.random_range(32..=99u32)),
        _ => format!(
            "{:02}.{:02}.{year}",
            rng.random_range(1..=28u32),
            rng.random_range(1..=12u32)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::parse_date;

    fn registry() -> VariableRegistry {
        VariableRegistry::new(vec![
            VariableConstraint::new("basis", Kind::Code, Constraint::Enum(vec!["22".into(), "32".into()])),
            VariableConstraint::new("age", Kind::Integer, Constraint::Range { lo: 0, hi: 120 }),
            VariableConstraint::new(
                "dx",
                Kind::Date,
                Constraint::DateWindow {
                    earliest: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                    latest: NaiveDate::from_ymd_opt(2000, 12, 31).unwrap(),
                },
            ),
            VariableConstraint::new("topo", Kind::Text, Constraint::Pattern(r"C[0-9]{2}\.[0-9]".into())),
        ])
        .unwrap()
    }

    #[test]
    fn strict_values_respect_constraints() {
        let reg = registry();
        let mut s = Sampler::new(&reg, SamplerConfig::new(1, SchemaMode::Strict));
        let topo = reg.pattern("topo").unwrap().clone();
        for _ in 0..2000 {
            let r = s.sample_record();
            if let Some(Value::Code(b)) = r.get("basis") {
                assert!(b == "22" || b == "32");
            }
            if let Some(v) = r.get("age") {
                assert!(matches!(v, Value::Int(n) if (0..=120).contains(n)));
            }
            if let Some(v) = r.get("dx") {
                assert!(matches!(v, Value::Date(d) if d.year_ce().1 == 2000));
            }
            if let Some(Value::Code(t)) = r.get("topo") {
                assert!(topo.is_match(t));
            }
        }
    }

    #[test]
    fn malformed_date_fraction_tracks_invalid_probability() {
        let reg = registry();
        let cfg = SamplerConfig::new(99, SchemaMode::Default)
            .with_probabilities(0.0, 0.3)
            .unwrap();
        let mut s = Sampler::new(&reg, cfg);
        let n = 10_000;
        let malformed = (0..n)
            .filter(|_| matches!(s.sample_record().get("dx"), Some(Value::Code(t)) if parse_date(t).is_none()))
            .count();
        let frac = malformed as f64 / n as f64;
        assert!((frac - 0.3).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn malformed_dates_never_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            assert!(parse_date(&malformed_date(&mut rng)).is_none());
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let reg = registry();
        let cfg = SamplerConfig::new(42, SchemaMode::Default);
        let a: Vec<Record> = {
            let mut s = Sampler::new(&reg, cfg);
            (0..50).map(|_| s.sample_record()).collect()
        };
        let mut s = Sampler::new(&reg, cfg);
        let b: Vec<Record> = (0..50).map(|_| s.sample_record()).collect();
        assert_eq!(a, b);
        let mut rng = cfg.rng();
        let c: Vec<Record> = (0..50).map(|_| sample_record(&reg, &cfg, &mut rng)).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn mutation_changes_exactly_one_slot() {
        let reg = registry();
        for mode in [SchemaMode::Strict, SchemaMode::Default] {
            let mut s = Sampler::new(&reg, SamplerConfig::new(5, mode));
            let mut r = s.sample_record();
            for _ in 0..2000 {
                let m = s.mutate_record(&r);
                let changed = reg
                    .variables()
                    .iter()
                    .filter(|v| r.get(&v.name) != m.get(&v.name))
                    .count();
                assert_eq!(changed, 1);
                if mode == SchemaMode::Strict {
                    if let Some(Value::Code(b)) = m.get("basis") {
                        assert!(b == "22" || b == "32");
                    }
                }
                r = m;
            }
        }
    }

    #[test]
    fn strict_config_forces_zero_invalid_probability() {
        let cfg = SamplerConfig::new(0, SchemaMode::Strict)
            .with_probabilities(0.2, 0.9)
            .unwrap();
        assert_eq!(cfg.effective_invalid_probability(), 0.0);
        assert!(SamplerConfig::new(0, SchemaMode::Default)
            .with_probabilities(1.5, 0.0)
            .is_err());
    }

    use chrono::Datelike;
}
