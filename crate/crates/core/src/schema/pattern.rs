//! Random strings matching a regular expression, drawn from its parsed HIR.

use rand::Rng;
use regex_syntax::hir::{Class, Hir, HirKind};

/// Unbounded repetitions (`*`, `+`, `{n,}`) draw at most this many extra copies.
const OPEN_REPEAT_EXTRA: u32 = 8;

#[derive(Debug, Clone)]
pub struct PatternGenerator {
    hir: Hir,
}

impl PatternGenerator {
    pub fn new(pattern: &str) -> Result<Self, Box<regex_syntax::Error>> {
        let hir = regex_syntax::Parser::new().parse(pattern).map_err(Box::new)?;
        Ok(Self { hir })
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut out = String::new();
        emit(&self.hir, rng, &mut out);
        out
    }
}

fn emit<R: Rng + ?Sized>(hir: &Hir, rng: &mut R, out: &mut String) {
    match hir.kind() {
        HirKind::Empty | HirKind::Look(_) => {}
        HirKind::Literal(lit) => out.push_str(&String::from_utf8_lossy(&lit.0)),
        HirKind::Class(Class::Unicode(cls)) => {
            let total: u64 = cls
                .ranges()
                .iter()
                .map(|r| r.end() as u64 - r.start() as u64 + 1)
                .sum();
            if total == 0 {
                return;
            }
            let mut pick = rng.random_range(0..total);
            for r in cls.ranges() {
                let width = r.end() as u64 - r.start() as u64 + 1;
                if pick < width {
                    // surrogate gaps cannot occur inside a parsed Unicode class range
                    if let Some(c) = char::from_u32(r.start() as u32 + pick as u32) {
                        out.push(c);
                    }
                    return;
                }
                pick -= width;
            }
        }
        HirKind::Class(Class::Bytes(cls)) => {
            let total: u32 = cls
                .ranges()
                .iter()
                .map(|r| r.end() as u32 - r.start() as u32 + 1)
                .sum();
            let mut pick = rng.random_range(0..total.max(1));
            for r in cls.ranges() {
                let width = r.end() as u32 - r.start() as u32 + 1;
                if pick < width {
                    out.push((r.start() as u32 + pick) as u8 as char);
                    return;
                }
                pick -= width;
            }
        }
        HirKind::Repetition(rep) => {
            let max = rep.max.unwrap_or(rep.min + OPEN_REPEAT_EXTRA);
            let n = rng.random_range(rep.min..=max);
            for _ in 0..n {
                emit(&rep.sub, rng, out);
            }
        }
        HirKind::Capture(cap) => emit(&cap.sub, rng, out),
        HirKind::Concat(parts) => parts.iter().for_each(|p| emit(p, rng, out)),
        HirKind::Alternation(alts) => {
            let i = rng.random_range(0..alts.len() as u32) as usize;
            emit(&alts[i], rng, out);
        }
    }
}
