//! Declarative run configuration: one TOML file with a section per module,
//! plus `--set section.key=value` overrides. The resolved configuration is
//! hashed into every run manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CorpusConfig, FilterCriteria};
use crate::error::{Error, Result};
use crate::metrics::MetricsConfig;
use crate::robustness::RobustnessConfig;
use crate::stats::StatsConfig;
use crate::synth::SynthConfig;
use crate::timeseries::TimeseriesConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stochastic stage derives independent substreams.
    pub seed: u64,
    /// Worker threads; 0 means all available cores. Results do not depend
    /// on this value.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunConfig,
    pub corpus: CorpusConfig,
    pub filters: FilterCriteria,
    pub metrics: MetricsConfig,
    pub stats: StatsConfig,
    pub timeseries: TimeseriesConfig,
    pub robustness: RobustnessConfig,
    pub synth: SynthConfig,
}

impl Config {
    /// Load from a TOML file (or defaults when `path` is `None`) and apply
    /// `key=value` overrides with dotted section paths.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut value: toml::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                text.parse()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Value::Table(toml::map::Map::new()),
        };
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let config: Config = value
            .try_into()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.timeseries.lag == 0 || self.timeseries.lag > 8 {
            return Err(Error::Config(format!(
                "timeseries.lag must be in 1..=8, got {}",
                self.timeseries.lag
            )));
        }
        if self.timeseries.bins < 2 {
            return Err(Error::Config("timeseries.bins must be >= 2".into()));
        }
        for f in &self.robustness.fractions {
            if !(0.0..=1.0).contains(f) {
                return Err(Error::Config(format!(
                    "robustness fraction {f} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialized configuration.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml_string().as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

fn apply_override(root: &mut toml::Value, item: &str) -> Result<()> {
    let (path, raw_value) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Config(format!("override `{item}` has an empty key")));
    }
    // Parse the value as TOML for proper typing; fall back to a string.
    let parsed: toml::Value = match format!("v = {}", raw_value.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw_value.trim().to_string()),
    };
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{path}`: `{seg}` is not a table")))?;
        if i + 1 == segments.len() {
            table.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let text = cfg.to_toml_string();
        let parsed: Config = toml::from_str(&text).unwrap();
        assert_eq!(cfg.hash(), parsed.hash());
    }

    #[test]
    fn overrides_apply_with_types() {
        let cfg = Config::load(
            None,
            &[
                "run.seed=7".to_string(),
                "metrics.window_years=3".to_string(),
                "metrics.blau=\"normalized\"".to_string(),
                "robustness.fractions=[0.1, 0.9]".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.metrics.window_years, 3);
        assert_eq!(cfg.robustness.fractions, vec![0.1, 0.9]);
    }

    #[test]
    fn bad_override_is_a_config_error() {
        let err = Config::load(None, &["no_equals_sign".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = Config::load(None, &["metrics.window_years=\"soon\"".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::load(None, &["metrics.wndow_years=3".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn hash_is_sensitive_to_values() {
        let a = Config::default();
        let b = Config::load(None, &["run.seed=43".to_string()]).unwrap();
        assert_ne!(a.hash(), b.hash());
    }
}
