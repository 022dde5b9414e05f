//! Learning strategies: how models are updated as concepts arrive and which
//! model answers at evaluation time.
//!
//! - `naive`: one live model, updated on each concept's training data with
//!   no retention mechanism. Refit-only detectors are replaced by a fresh
//!   fit on the current concept only; fine-tunable detectors continue from
//!   their current weights (a `naive-refit` mode forces replacement for
//!   those too).
//! - `mste`: one independent expert per concept, routed by concept
//!   identifier. Needs identifiers at update and evaluation time, so it is
//!   only compatible with the concept-aware visibility mode.
//! - `cumulative`: one live model, refit on the union of all training data
//!   seen so far. A standard retention reference point, not part of the
//!   headline comparison.
//!
//! New strategies implement [`Strategy`]; the protocol only relies on this
//! trait.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::detect::{Capability, Detector, DetectorConfig, DetectorError, detector_capability};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("this strategy requires concept identifiers, which the scenario's visibility mode does not provide")]
    ConceptIdRequired,
    #[error("no expert exists for concept {0}; it has not been trained yet")]
    UnknownConcept(usize),
    #[error("cannot score before the first update")]
    ScoreBeforeUpdate,
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// Update/score policy over detectors. `concept_id` is `Some` only under
/// concept-aware visibility.
///
/// The protocol drives any implementation of this trait, so retention
/// mechanisms (replay buffers, regularizers, ...) plug in without harness
/// changes:
///
/// ```
/// use lad_core::detect::{Detector, DetectorConfig, DetectorKind, IForestParams};
/// use lad_core::matrix::Matrix;
/// use lad_core::strategy::{Strategy, StrategyError};
///
/// /// Keeps the most recent `window` training batches and refits on their
/// /// union: a minimal replay mechanism.
/// struct ReplayWindow {
///     detector: DetectorConfig,
///     window: usize,
///     batches: Vec<Matrix>,
///     model: Option<Detector>,
/// }
///
/// impl Strategy for ReplayWindow {
///     fn name(&self) -> &'static str {
///         "replay-window"
///     }
///
///     fn update(&mut self, _id: Option<usize>, train: &Matrix) -> Result<(), StrategyError> {
///         self.batches.push(train.clone());
///         if self.batches.len() > self.window {
///             self.batches.remove(0);
///         }
///         let rows: Vec<Vec<f64>> = self
///             .batches
///             .iter()
///             .flat_map(|b| b.rows_iter().map(<[f64]>::to_vec))
///             .collect();
///         self.model = Some(Detector::fit(&self.detector, &Matrix::from_rows(&rows))?);
///         Ok(())
///     }
///
///     fn score(&self, _id: Option<usize>, x: &[f64]) -> Result<f64, StrategyError> {
///         let model = self.model.as_ref().ok_or(StrategyError::ScoreBeforeUpdate)?;
///         Ok(model.score(x)?)
///     }
/// }
///
/// let mut strategy = ReplayWindow {
///     detector: DetectorConfig::new(DetectorKind::IForest(IForestParams::default()), 7),
///     window: 2,
///     batches: Vec::new(),
///     model: None,
/// };
/// let batch = Matrix::from_rows(&[vec![0.0, 0.1], vec![0.2, -0.1], vec![-0.1, 0.0]]);
/// strategy.update(None, &batch)?;
/// assert!(strategy.score(None, &[5.0, 5.0])? > strategy.score(None, &[0.0, 0.0])?);
/// # Ok::<(), lad_core::strategy::StrategyError>(())
/// ```
pub trait Strategy {
    fn name(&self) -> &'static str;

    /// Incorporates one concept's training data.
    fn update(&mut self, concept_id: Option<usize>, train: &Matrix) -> Result<(), StrategyError>;

    /// Scores one row. Must not mutate any state.
    fn score(&self, concept_id: Option<usize>, x: &[f64]) -> Result<f64, StrategyError>;

    /// Whether this strategy can answer for the given concept right now.
    /// The protocol skips evaluations the strategy cannot serve (an expert
    /// router has no model for concepts it has not seen).
    fn can_score(&self, concept_id: Option<usize>) -> bool {
        let _ = concept_id;
        true
    }

    /// True when the strategy cannot run without concept identifiers.
    fn requires_concept_ids(&self) -> bool {
        false
    }
}

/// Strategy selector, as named in run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StrategyKind {
    Naive,
    /// Naive with replacement forced even for fine-tunable detectors.
    NaiveRefit,
    Mste,
    Cumulative,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::NaiveRefit => "naive-refit",
            StrategyKind::Mste => "mste",
            StrategyKind::Cumulative => "cumulative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "naive" => Some(StrategyKind::Naive),
            "naive-refit" => Some(StrategyKind::NaiveRefit),
            "mste" => Some(StrategyKind::Mste),
            "cumulative" => Some(StrategyKind::Cumulative),
            _ => None,
        }
    }

    pub fn requires_concept_ids(self) -> bool {
        self == StrategyKind::Mste
    }
}

pub fn build_strategy(kind: StrategyKind, detector: DetectorConfig) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Naive => Box::new(NaiveStrategy::new(detector, false)),
        StrategyKind::NaiveRefit => Box::new(NaiveStrategy::new(detector, true)),
        StrategyKind::Mste => Box::new(MsteStrategy::new(detector)),
        StrategyKind::Cumulative => Box::new(CumulativeStrategy::new(detector)),
    }
}

/// One live model; each update either refits it on the newest concept alone
/// or continues training in place.
pub struct NaiveStrategy {
    detector: DetectorConfig,
    force_refit: bool,
    model: Option<Detector>,
}

impl NaiveStrategy {
    pub fn new(detector: DetectorConfig, force_refit: bool) -> Self {
        Self { detector, force_refit, model: None }
    }

    pub fn model(&self) -> Option<&Detector> {
        self.model.as_ref()
    }
}

impl Strategy for NaiveStrategy {
    fn name(&self) -> &'static str {
        if self.force_refit { "naive-refit" } else { "naive" }
    }

    fn update(&mut self, _concept_id: Option<usize>, train: &Matrix) -> Result<(), StrategyError> {
        let fine_tunable =
            detector_capability(&self.detector.kind) == Capability::FineTunable && !self.force_refit;
        match (&mut self.model, fine_tunable) {
            (Some(model), true) => model.finetune(train)?,
            _ => self.model = Some(Detector::fit(&self.detector, train)?),
        }
        Ok(())
    }

    fn score(&self, _concept_id: Option<usize>, x: &[f64]) -> Result<f64, StrategyError> {
        let model = self.model.as_ref().ok_or(StrategyError::ScoreBeforeUpdate)?;
        Ok(model.score(x)?)
    }
}

/// One expert per concept, routed by identifier.
pub struct MsteStrategy {
    detector: DetectorConfig,
    experts: BTreeMap<usize, Detector>,
}

impl MsteStrategy {
    pub fn new(detector: DetectorConfig) -> Self {
        Self { detector, experts: BTreeMap::new() }
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }
}

impl Strategy for MsteStrategy {
    fn name(&self) -> &'static str {
        "mste"
    }

    fn update(&mut self, concept_id: Option<usize>, train: &Matrix) -> Result<(), StrategyError> {
        let id = concept_id.ok_or(StrategyError::ConceptIdRequired)?;
        let expert = Detector::fit(&self.detector, train)?;
        self.experts.insert(id, expert);
        Ok(())
    }

    fn score(&self, concept_id: Option<usize>, x: &[f64]) -> Result<f64, StrategyError> {
        let id = concept_id.ok_or(StrategyError::ConceptIdRequired)?;
        let expert = self.experts.get(&id).ok_or(StrategyError::UnknownConcept(id))?;
        Ok(expert.score(x)?)
    }

    fn can_score(&self, concept_id: Option<usize>) -> bool {
        concept_id.is_some_and(|id| self.experts.contains_key(&id))
    }

    fn requires_concept_ids(&self) -> bool {
        true
    }
}

/// One live model, refit on everything seen so far.
pub struct CumulativeStrategy {
    detector: DetectorConfig,
    seen: Vec<Vec<f64>>,
    model: Option<Detector>,
}

impl CumulativeStrategy {
    pub fn new(detector: DetectorConfig) -> Self {
        Self { detector, seen: Vec::new(), model: None }
    }

    pub fn rows_seen(&self) -> usize {
        self.seen.len()
    }
}

impl Strategy for CumulativeStrategy {
    fn name(&self) -> &'static str {
        "cumulative"
    }

    fn update(&mut self, _concept_id: Option<usize>, train: &Matrix) -> Result<(), StrategyError> {
        for row in train.rows_iter() {
            self.seen.push(row.to_vec());
        }
        let all = Matrix::from_rows(&self.seen);
        self.model = Some(Detector::fit(&self.detector, &all)?);
        Ok(())
    }

    fn score(&self, _concept_id: Option<usize>, x: &[f64]) -> Result<f64, StrategyError> {
        let model = self.model.as_ref().ok_or(StrategyError::ScoreBeforeUpdate)?;
        Ok(model.score(x)?)
    }
}
