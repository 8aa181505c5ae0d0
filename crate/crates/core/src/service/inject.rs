use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::record::Record;
use crate::signature::{Category, ErrorSignature, Frame, SERVICE_COMPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// A simulated broken pipe while writing the response.
    Io,
    /// A simulated internal failure before evaluation.
    Internal,
}

/// `kind:probability[:variable]`, e.g. `io:0.05` or `internal:0.5:basis`.
/// With a variable, only requests carrying that variable are eligible.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultProfile {
    pub kind: FaultKind,
    pub probability: f64,
    pub variable: Option<String>,
}

impl FaultProfile {
    /// The draw for request `n` depends only on `(seed, n)`.
    pub(crate) fn fire(&self, seed: u64, n: u64, record: &Record) -> Option<ErrorSignature> {
        if let Some(v) = &self.variable {
            if !record.contains(v) {
                return None;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n);
        if !rng.random_bool(self.probability) {
            return None;
        }
        Some(match self.kind {
            FaultKind::Io => ErrorSignature::new(
                Frame::new(SERVICE_COMPONENT, "write_response", "broken pipe"),
                Category::Io,
            ),
            FaultKind::Internal => ErrorSignature::new(
                Frame::new(SERVICE_COMPONENT, "handle_request", "injected fault"),
                Category::Remaining,
            ),
        })
    }
}

impl FromStr for FaultProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let kind = match parts.next() {
            Some("io") => FaultKind::Io,
            Some("internal") => FaultKind::Internal,
            other => return Err(format!("unknown fault kind {other:?}; expected io or internal")),
        };
        let probability: f64 = parts
            .next()
            .ok_or("missing probability")?
            .parse()
            .map_err(|e| format!("bad probability: {e}"))?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(format!("probability {probability} outside [0, 1]"));
        }
        let variable = parts.next().map(str::to_string);
        if parts.next().is_some() {
            return Err("too many fields in fault profile".into());
        }
        Ok(Self {
            kind,
            probability,
            variable,
        })
    }
}

impl fmt::Display for FaultProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            FaultKind::Io => "io",
            FaultKind::Internal => "internal",
        };
        write!(f, "{kind}:{}", self.probability)?;
        if let Some(v) = &self.variable {
            write!(f, ":{v}")?;
        }
        Ok(())
    }
}
