use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Categories on `|scaled|`: below 0.147, 0.33 and 0.474, then large.
    pub fn of_scaled(scaled: f64) -> Magnitude {
        let s = scaled.abs();
        if s < 0.147 {
            Magnitude::Negligible
        } else if s < 0.33 {
            Magnitude::Small
        } else if s < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub a12: f64,
    /// `(a12 - 0.5) * 2`.
    pub scaled: f64,
    pub magnitude: Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("effect size needs two non-empty samples")]
pub struct EmptySample;

/// Vargha-Delaney A12: the probability that a draw from `x` exceeds one from
/// `y`, ties counting half.
pub fn a12(x: &[f64], y: &[f64]) -> Result<EffectSize, EmptySample> {
    if x.is_empty() || y.is_empty() {
        return Err(EmptySample);
    }
    let mut wins = 0.0;
    for xi in x {
        for yj in y {
            if xi > yj {
                wins += 1.0;
            } else if xi == yj {
                wins += 0.5;
            }
        }
    }
    let a12 = wins / (x.len() as f64 * y.len() as f64);
    let scaled = (a12 - 0.5) * 2.0;
    Ok(EffectSize {
        a12,
        scaled,
        magnitude: Magnitude::of_scaled(scaled),
    })
}
