//! Pipeline configuration file.
//!
//! A single TOML document holds every tunable threshold. Parsing is strict:
//! unknown keys and missing keys are both errors. Angles in the file are in
//! degrees and are converted to radians on load.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{RuleSet, RuleSetError};
use crate::cluster::ClusterParams;
use crate::filter::{FilterConfig, FilterConfigError};

const DEFAULT_PIPELINE: &str = include_str!("../../../config/pipeline.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid filter config: {0}")]
    Filter(#[from] FilterConfigError),
    #[error("invalid rules: {0}")]
    Rules(#[from] RuleSetError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSection {
    rcs_min: f64,
    rcs_max: f64,
    az_min_deg: f64,
    az_max_deg: f64,
    el_min_deg: f64,
    el_max_deg: f64,
    v_abs_max: f64,
    enable_static_gate: bool,
    static_band: f64,
    static_range_min: f64,
    static_range_max: f64,
}

impl From<FilterSection> for FilterConfig {
    fn from(s: FilterSection) -> Self {
        FilterConfig {
            rcs_min: s.rcs_min,
            rcs_max: s.rcs_max,
            az_min: s.az_min_deg.to_radians(),
            az_max: s.az_max_deg.to_radians(),
            el_min: s.el_min_deg.to_radians(),
            el_max: s.el_max_deg.to_radians(),
            v_abs_max: s.v_abs_max,
            static_band: s.static_band,
            static_range_min: s.static_range_min,
            static_range_max: s.static_range_max,
            enable_static_gate: s.enable_static_gate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterSection {
    radius: f64,
    min_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub rcs_bin_width: f64,
    pub rules: RuleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoOptions {
    pub validate_input: bool,
    /// Radians.
    pub angle_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    filter: FilterSection,
    cluster: ClusterSection,
    classify: ClassifyConfig,
    io: IoOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub cluster: ClusterParams,
    pub classify: ClassifyConfig,
    pub io: IoOptions,
}

impl PipelineConfig {
    /// The annotated default shipped in `config/pipeline.toml`.
    pub fn shipped_default() -> Self {
        Self::from_toml(DEFAULT_PIPELINE).expect("shipped pipeline config is valid")
    }

    pub fn shipped_default_text() -> &'static str {
        DEFAULT_PIPELINE
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let cfg = PipelineConfig {
            filter: raw.filter.into(),
            cluster: ClusterParams {
                radius: raw.cluster.radius,
                min_cluster_size: raw.cluster.min_cluster_size,
            },
            classify: raw.classify,
            io: raw.io,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.filter.validate()?;
        if !(self.cluster.radius.is_finite() && self.cluster.radius >= 0.0) {
            return Err(ConfigError::Invalid(
                "cluster.radius must be a non-negative number".into(),
            ));
        }
        if self.cluster.min_cluster_size == 0 {
            return Err(ConfigError::Invalid(
                "cluster.min_cluster_size must be at least 1".into(),
            ));
        }
        let w = self.classify.rcs_bin_width;
        if !(w.is_finite() && w > 0.0) {
            return Err(ConfigError::Invalid("classify.rcs_bin_width must be positive".into()));
        }
        let tol = self.io.angle_tolerance;
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(ConfigError::Invalid("io.angle_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Label;

    #[test]
    fn shipped_default_matches_documented_values() {
        let cfg = PipelineConfig::shipped_default();
        assert_eq!(cfg.filter.rcs_min, -40.0);
        assert_eq!(cfg.filter.rcs_max, 30.0);
        assert!((cfg.filter.az_max - 60f64.to_radians()).abs() < 1e-15);
        assert!((cfg.filter.el_min + 20f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.filter.v_abs_max, 10.0);
        assert_eq!(cfg.filter.static_band, 0.05);
        assert!(cfg.filter.enable_static_gate);
        assert_eq!(cfg.cluster.radius, 0.5);
        assert_eq!(cfg.cluster.min_cluster_size, 5);
        assert_eq!(cfg.classify.rcs_bin_width, 1.0);
        let rules = cfg.classify.rules.rules();
        assert_eq!(rules[0].label, Label::Pedestrian);
        assert_eq!(rules[1].mode_rcs.unwrap().hi, f64::INFINITY);
        assert_eq!(cfg.io.angle_tolerance, 1e-4);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = PipelineConfig::shipped_default_text().replace("[cluster]\n", "[cluster]\nepsilon = 3\n");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn missing_key_is_rejected() {
        let text = PipelineConfig::shipped_default_text().replace("static_band = 0.05\n", "");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let text = PipelineConfig::shipped_default_text().replace("rcs_max = 30.0", "rcs_max = -50.0");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(ConfigError::Filter(_))));
        let text = PipelineConfig::shipped_default_text().replace("min_cluster_size = 5", "min_cluster_size = 0");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(ConfigError::Invalid(_))));
        let text = PipelineConfig::shipped_default_text().replace("priority = 30", "priority = 20");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }
}
