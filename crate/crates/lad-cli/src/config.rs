//! Run configuration files.
//!
//! One JSON file describes the full experiment: dataset ingestion rules,
//! scenario generation parameters, the detector, the strategy, and the root
//! seed. `generate` consumes the dataset/generation sections; `run` consumes
//! the dataset/detector/strategy sections. Every random draw anywhere in a
//! run derives from `root_seed`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, bail};
use serde::{Deserialize, Serialize};

use lad_core::detect::DetectorConfig;
use lad_core::generation::GenerationConfig;
use lad_core::scenario::Visibility;
use lad_core::strategy::StrategyKind;

/// How a CSV file maps onto a labeled dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub label_column: String,
    /// Label values treated as normal.
    pub normal_labels: Vec<String>,
    /// Label values treated as anomalous; when absent, every non-normal
    /// value counts as anomalous.
    pub anomaly_labels: Option<Vec<String>>,
    /// Columns to one-hot encode (categories ordered lexicographically).
    pub categorical_columns: Vec<String>,
    /// Categories appearing on fewer rows than this collapse into a single
    /// `column=<other>` indicator (emitted after the kept categories).
    /// Zero keeps every category. Rare one-hot columns otherwise turn into
    /// far-away islands after standardization and distort clustering.
    pub min_category_rows: usize,
    /// Columns to ignore entirely.
    pub drop_columns: Vec<String>,
    /// Numeric columns mapped through `ln(1 + x)` at ingestion; the usual
    /// treatment for heavy-tailed counts (bytes, durations).
    pub log1p_columns: Vec<String>,
    /// Two-sided per-column winsorization applied to every encoded feature:
    /// values outside the `(lo, hi)` quantiles are clamped. Also neutralizes
    /// indicator columns of categories rarer than `1 - hi` (they clamp to a
    /// constant and standardization then zeroes them), which keeps
    /// clustering from chasing one-row islands.
    pub clip_quantiles: Option<(f64, f64)>,
    /// Deterministic row subsample applied after reading, seeded from the
    /// root seed. Keeps desk-scale runs tractable on large files.
    pub max_rows: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("dataset.csv"),
            label_column: "label".to_string(),
            normal_labels: vec!["0".to_string()],
            anomaly_labels: Some(vec!["1".to_string()]),
            categorical_columns: Vec::new(),
            min_category_rows: 0,
            drop_columns: Vec::new(),
            log1p_columns: Vec::new(),
            clip_quantiles: None,
            max_rows: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub generation: GenerationConfig,
    pub detector: DetectorConfig,
    pub strategy: StrategyKind,
    pub visibility: Visibility,
    pub root_seed: u64,
    pub output_dir: PathBuf,
    /// Also emit the lifelong ROC-AUC under the printed-denominator form
    /// (sum over i >= j divided by N(N-1)/2) for comparison.
    pub alt_lifelong_denominator: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            generation: GenerationConfig::default(),
            detector: DetectorConfig::new(
                lad_core::detect::DetectorKind::IForest(Default::default()),
                0,
            ),
            strategy: StrategyKind::Naive,
            visibility: Visibility::Aware,
            root_seed: 0,
            output_dir: PathBuf::from("out"),
            alt_lifelong_denominator: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks cross-field compatibility before any work happens.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.generation.validate()?;
        self.detector.validate()?;
        if self.strategy.requires_concept_ids() && self.visibility != Visibility::Aware {
            bail!(
                "strategy '{}' needs concept identifiers, but visibility is '{}'",
                self.strategy.as_str(),
                self.visibility.as_str()
            );
        }
        Ok(())
    }

    /// The configuration with every seed pinned from the root seed. This is
    /// what provenance records echo.
    pub fn resolved(&self) -> Self {
        let mut resolved = self.clone();
        resolved.generation.seed = self.root_seed;
        resolved.detector.seed = self.root_seed;
        resolved
    }

    /// Fingerprint of the resolved configuration.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.resolved()).expect("config serializes");
        crate::hex_digest(&bytes)
    }

    /// Dataset name used in reports: the file stem of the dataset path.
    pub fn dataset_name(&self) -> String {
        self.dataset
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let json = r#"{
            "dataset": {"path": "d.csv", "label_column": "class"},
            "detector": {"kind": "lof", "k": 15},
            "root_seed": 7
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.root_seed, 7);
        assert_eq!(config.generation.n_concepts, 2);
        assert_eq!(config.strategy, StrategyKind::Naive);
        match config.detector.kind {
            lad_core::detect::DetectorKind::Lof(p) => assert_eq!(p.k, 15),
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn unknown_detector_kind_is_a_parse_error() {
        let json = r#"{"detector": {"kind": "super-detector"}}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn mste_with_hidden_ids_fails_validation() {
        let mut config = RunConfig::default();
        config.strategy = StrategyKind::Mste;
        config.visibility = Visibility::Incremental;
        assert!(config.validate().is_err());
    }

    #[test]
    fn resolved_config_pins_all_seeds_to_root() {
        let mut config = RunConfig::default();
        config.root_seed = 99;
        let resolved = config.resolved();
        assert_eq!(resolved.generation.seed, 99);
        assert_eq!(resolved.detector.seed, 99);
    }

    #[test]
    fn digest_is_stable_and_seed_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.digest(), b.digest());
        b.root_seed = 1;
        assert_ne!(a.digest(), b.digest());
    }
}
