//! One-class detectors behind a single fit/score interface.
//!
//! All five detectors consume a training matrix of (standardized) features
//! and produce real anomaly scores oriented "higher = more anomalous".
//! Fitting is deterministic given the config seed. The autoencoder is the
//! only detector whose state can be updated in place; everything else is
//! refit from scratch.

pub mod copod;
pub mod iforest;
pub mod lof;
pub mod ocsvm;
pub mod vae;

use alloc::format;
use alloc::string::String;

use crate::matrix::Matrix;
use crate::rng::RngStream;

pub use copod::CopodModel;
pub use iforest::{IForestModel, c_factor};
pub use lof::LofModel;
pub use ocsvm::OcsvmModel;
pub use vae::{VaeModel, VaeParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("training requires at least {needed} rows, got {got}")]
    NotEnoughTrainingRows { needed: usize, got: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid detector config: {0}")]
    InvalidConfig(&'static str),
    #[error("{0} models cannot be fine-tuned; refit instead")]
    CannotFinetune(&'static str),
}

/// Whether a detector can continue training from its current state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Capability {
    RefitOnly,
    FineTunable,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct IForestParams {
    pub trees: usize,
    pub subsample: usize,
}

impl Default for IForestParams {
    fn default() -> Self {
        Self { trees: 100, subsample: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LofParams {
    pub k: usize,
}

impl Default for LofParams {
    fn default() -> Self {
        Self { k: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct OcsvmParams {
    pub nu: f64,
    /// RBF width; defaults to `1 / (d * var)` computed from the training
    /// data when unset.
    pub gamma: Option<f64>,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        Self { nu: 0.5, gamma: None }
    }
}

/// Detector family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum DetectorKind {
    IForest(IForestParams),
    Lof(LofParams),
    Copod,
    Ocsvm(OcsvmParams),
    Vae(VaeParams),
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::IForest(_) => "iforest",
            DetectorKind::Lof(_) => "lof",
            DetectorKind::Copod => "copod",
            DetectorKind::Ocsvm(_) => "ocsvm",
            DetectorKind::Vae(_) => "vae",
        }
    }

    /// All five families with default hyperparameters.
    pub fn defaults() -> [DetectorKind; 5] {
        [
            DetectorKind::IForest(IForestParams::default()),
            DetectorKind::Lof(LofParams::default()),
            DetectorKind::Copod,
            DetectorKind::Ocsvm(OcsvmParams::default()),
            DetectorKind::Vae(VaeParams::default()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: DetectorKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        match &self.kind {
            DetectorKind::IForest(p) => {
                if p.trees == 0 {
                    return Err(DetectorError::InvalidConfig("iforest needs at least one tree"));
                }
                if p.subsample < 2 {
                    return Err(DetectorError::InvalidConfig("iforest subsample must be at least 2"));
                }
            }
            DetectorKind::Lof(p) => {
                if p.k == 0 {
                    return Err(DetectorError::InvalidConfig("lof neighbor count must be positive"));
                }
            }
            DetectorKind::Copod => {}
            DetectorKind::Ocsvm(p) => {
                if !(p.nu > 0.0 && p.nu <= 1.0) {
                    return Err(DetectorError::InvalidConfig("ocsvm nu must lie in (0, 1]"));
                }
                if let Some(g) = p.gamma
                    && !(g > 0.0 && g.is_finite())
                {
                    return Err(DetectorError::InvalidConfig("ocsvm gamma must be positive"));
                }
            }
            DetectorKind::Vae(p) => {
                if p.epochs == 0 || p.batch_size == 0 {
                    return Err(DetectorError::InvalidConfig("vae epochs and batch size must be positive"));
                }
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return Err(DetectorError::InvalidConfig("vae learning rate must be positive"));
                }
                if p.hidden == Some(0) || p.latent == Some(0) {
                    return Err(DetectorError::InvalidConfig("vae layer sizes must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Whether models of this kind support in-place updates.
pub fn detector_capability(kind: &DetectorKind) -> Capability {
    match kind {
        DetectorKind::Vae(_) => Capability::FineTunable,
        _ => Capability::RefitOnly,
    }
}

/// A fitted detector of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    IForest(IForestModel),
    Lof(LofModel),
    Copod(CopodModel),
    Ocsvm(OcsvmModel),
    Vae(VaeModel),
}

impl Detector {
    pub fn fit(config: &DetectorConfig, data: &Matrix) -> Result<Self, DetectorError> {
        config.validate()?;
        Ok(match &config.kind {
            DetectorKind::IForest(p) => {
                let mut stream = RngStream::derive(config.seed, "iforest");
                Detector::IForest(IForestModel::fit(data, p.trees, p.subsample, &mut stream)?)
            }
            DetectorKind::Lof(p) => Detector::Lof(LofModel::fit(data, p.k)?),
            DetectorKind::Copod => Detector::Copod(CopodModel::fit(data)?),
            DetectorKind::Ocsvm(p) => Detector::Ocsvm(OcsvmModel::fit(data, p.nu, p.gamma)?),
            DetectorKind::Vae(p) => Detector::Vae(VaeModel::fit(data, p, config.seed)?),
        })
    }

    /// Continues training in place. Only fine-tunable kinds support this.
    pub fn finetune(&mut self, data: &Matrix) -> Result<(), DetectorError> {
        match self {
            Detector::Vae(m) => m.finetune(data),
            Detector::IForest(_) => Err(DetectorError::CannotFinetune("iforest")),
            Detector::Lof(_) => Err(DetectorError::CannotFinetune("lof")),
            Detector::Copod(_) => Err(DetectorError::CannotFinetune("copod")),
            Detector::Ocsvm(_) => Err(DetectorError::CannotFinetune("ocsvm")),
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, DetectorError> {
        let expected = self.input_dim();
        if x.len() != expected {
            return Err(DetectorError::DimensionMismatch { expected, got: x.len() });
        }
        Ok(match self {
            Detector::IForest(m) => m.score(x),
            Detector::Lof(m) => m.score(x),
            Detector::Copod(m) => m.score(x),
            Detector::Ocsvm(m) => m.score(x),
            Detector::Vae(m) => m.score(x),
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Detector::IForest(m) => m.input_dim(),
            Detector::Lof(m) => m.input_dim(),
            Detector::Copod(m) => m.input_dim(),
            Detector::Ocsvm(m) => m.input_dim(),
            Detector::Vae(m) => m.input_dim(),
        }
    }

    /// A human-readable note when fitting ended in a degraded state.
    pub fn convergence_warning(&self) -> Option<String> {
        match self {
            Detector::Ocsvm(m) if !m.converged => Some(format!(
                "ocsvm solver hit the step cap after {} steps; using the best iterate",
                m.steps
            )),
            _ => None,
        }
    }
}
