//! Campaign metrics (errors, executed rule results, result frequencies) and
//! the comparison procedure: Friedman, Nemenyi, Vargha-Delaney A12 and
//! false-discovery-rate adjustment.

mod adjust;
mod effect;
mod friedman;
mod metrics;

use serde::{Deserialize, Serialize};

pub use adjust::{adjust, bh_adjust, by_adjust, Correction};
pub use effect::{a12, EffectSize, EmptySample, Magnitude};
pub use friedman::{friedman_test, midranks, nemenyi_posthoc, q_alpha, FriedmanResult, NemenyiResult, StatError};
pub use metrics::{
    campaign_metrics, error_report, frequency_report, rules_results_report, synthetic_baseline,
    BaselineComparison, ErrorCounts, ErrorReport, Fractions, FrequencyProfile, FrequencyReport,
    RuleResultCounts,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StatConfig {
    pub alpha: f64,
    pub correction: Correction,
    /// Largest `subjects * treatments` for which Friedman p-values are exact.
    pub exact_cap: usize,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            correction: Correction::BenjaminiYekutieli,
            exact_cap: 12,
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<(), StatError> {
        q_alpha(self.alpha, 2).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Better,
    Worse,
    Same,
}

/// `x` against `y`: better or worse only when the corrected test separated
/// them and the effect is not negligible; otherwise the same.
pub fn decision(x: &[f64], y: &[f64], separated: bool) -> Result<Decision, EmptySample> {
    let e = a12(x, y)?;
    Ok(if !separated || e.magnitude == Magnitude::Negligible {
        Decision::Same
    } else if e.a12 > 0.5 {
        Decision::Better
    } else {
        Decision::Worse
    })
}
