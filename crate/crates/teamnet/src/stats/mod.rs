//! Standardization, OLS with interactions, fixed-effects and firm-level
//! aggregation variants, nested F-tests and two-sample tests.

pub mod design;
pub mod ols;
pub mod twosample;

pub use design::{build_interaction_model, firm_aggregate, DesignMatrix, NumericTable};
pub use ols::{fixed_effects_fit, nested_f_test, ols_fit, FTestResult, ModelFit, SpecTag, TermFit};
pub use twosample::{ks_test, wilcoxon_rank_sum};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMode {
    /// Symmetric +-1.96 * SE intervals.
    Normal,
    /// Student-t quantiles at the model's residual degrees of freedom.
    StudentT,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub ci: CiMode,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { ci: CiMode::Normal }
    }
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}

/// Min-shift, std-scale standardization: `(x - min) / sd`.
///
/// The column name feeds the zero-variance diagnostic.
pub fn standardize(name: &str, values: &[f64]) -> Result<Vec<f64>> {
    let sd = sample_std(values);
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(values.iter().map(|v| (v - min) / sd).collect())
}
