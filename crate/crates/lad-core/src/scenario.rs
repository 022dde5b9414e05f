//! Concepts and scenarios.
//!
//! A concept pairs one cluster of normal behavior with one anomaly group and
//! carries its own train/eval split. A scenario is an ordered sequence of
//! concepts plus the visibility mode under which a learner experiences them.
//! Scenarios store row indices into the originating dataset (never copies of
//! the data) and are bound to it by content digest.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{ANOMALY, Dataset, NORMAL};

/// How much concept structure the learner is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Visibility {
    /// Concept identifiers and boundaries are both known.
    Aware,
    /// Boundaries are known, identifiers are not.
    Incremental,
    /// Neither identifiers nor boundaries are known.
    Agnostic,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Aware => "aware",
            Visibility::Incremental => "incremental",
            Visibility::Agnostic => "agnostic",
        }
    }
}

/// How anomaly groups are formed and matched to normal clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    /// Clustered anomaly groups, each assigned to the closest normal cluster.
    #[cfg_attr(feature = "serde", serde(rename = "CC"))]
    ClusteredClosest,
    /// Clustered anomaly groups, assigned at random.
    #[cfg_attr(feature = "serde", serde(rename = "CR"))]
    ClusteredRandom,
    /// Random anomaly groups, assigned at random.
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    RandomRandom,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ClusteredClosest => "CC",
            Variant::ClusteredRandom => "CR",
            Variant::RandomRandom => "R",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CC" | "cc" => Some(Variant::ClusteredClosest),
            "CR" | "cr" => Some(Variant::ClusteredRandom),
            "R" | "r" => Some(Variant::RandomRandom),
            _ => None,
        }
    }
}

/// One pairing of a normal cluster with an anomaly group, split for the
/// one-class regime: training rows are normals only, anomalies appear only
/// in the eval partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    /// Ordinal position within the scenario.
    pub id: usize,
    /// All normal rows belonging to this concept's cluster.
    pub normal_indices: Vec<usize>,
    /// Anomaly rows assigned to this concept.
    pub anomaly_indices: Vec<usize>,
    /// Training rows (subset of `normal_indices`).
    pub train_indices: Vec<usize>,
    /// Held-out normals plus the assigned anomalies.
    pub eval_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario needs at least 2 concepts, got {0}")]
    TooFewConcepts(usize),
    #[error("concept ids must be 0..N-1 in order; position {position} holds id {id}")]
    BadConceptId { position: usize, id: usize },
    #[error("concept {id}: train and eval partitions overlap at row {row}")]
    TrainEvalOverlap { id: usize, row: usize },
    #[error("concept {id}: anomaly row {row} is shared with concept {other}")]
    SharedAnomaly { id: usize, other: usize, row: usize },
    #[error("concept {id}: row index {row} is out of range for a dataset of {n_rows} rows")]
    IndexOutOfRange { id: usize, row: usize, n_rows: usize },
    #[error("concept {id}: eval partition is missing {class} rows")]
    EvalMissingClass { id: usize, class: &'static str },
    #[error("concept {id}: training row {row} is labeled anomalous")]
    AnomalousTrainRow { id: usize, row: usize },
    #[error("scenario was generated from dataset {expected} but got dataset {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("scenario expects a dataset of {expected} rows, got {actual}")]
    RowCountMismatch { expected: usize, actual: usize },
}

/// An ordered sequence of concepts with generation provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub concepts: Vec<Concept>,
    pub visibility: Visibility,
    pub variant: Variant,
    pub seed: u64,
    pub dataset_digest: String,
    /// Row count of the dataset the indices refer to, for standalone bounds
    /// checks.
    pub n_rows: usize,
}

impl Scenario {
    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    /// Structural invariants that need no dataset: concept count and id
    /// sequence, index bounds against `n_rows`, train/eval disjointness, and
    /// anomaly disjointness across concepts.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.concepts.len() < 2 {
            return Err(ScenarioError::TooFewConcepts(self.concepts.len()));
        }
        let mut seen_anomalies: alloc::collections::BTreeMap<usize, usize> =
            alloc::collections::BTreeMap::new();
        for (position, c) in self.concepts.iter().enumerate() {
            if c.id != position {
                return Err(ScenarioError::BadConceptId { position, id: c.id });
            }
            for &row in
                c.train_indices.iter().chain(&c.eval_indices).chain(&c.normal_indices).chain(&c.anomaly_indices)
            {
                if row >= self.n_rows {
                    return Err(ScenarioError::IndexOutOfRange { id: c.id, row, n_rows: self.n_rows });
                }
            }
            let train: BTreeSet<usize> = c.train_indices.iter().copied().collect();
            if let Some(&row) = c.eval_indices.iter().find(|r| train.contains(r)) {
                return Err(ScenarioError::TrainEvalOverlap { id: c.id, row });
            }
            for &row in &c.anomaly_indices {
                if let Some(&other) = seen_anomalies.get(&row) {
                    return Err(ScenarioError::SharedAnomaly { id: c.id, other, row });
                }
                seen_anomalies.insert(row, c.id);
            }
        }
        Ok(())
    }

    /// Checks that this scenario belongs to `dataset` and that its label
    /// conventions hold there: digest and row count match, training rows are
    /// normal, and every eval partition contains both classes.
    pub fn bind_check(&self, dataset: &Dataset) -> Result<(), ScenarioError> {
        if self.dataset_digest != dataset.digest() {
            return Err(ScenarioError::DigestMismatch {
                expected: self.dataset_digest.clone(),
                actual: String::from(dataset.digest()),
            });
        }
        if self.n_rows != dataset.n_samples() {
            return Err(ScenarioError::RowCountMismatch {
                expected: self.n_rows,
                actual: dataset.n_samples(),
            });
        }
        self.validate()?;
        for c in &self.concepts {
            if let Some(&row) = c.train_indices.iter().find(|&&r| dataset.label(r) != NORMAL) {
                return Err(ScenarioError::AnomalousTrainRow { id: c.id, row });
            }
            let has_normal = c.eval_indices.iter().any(|&r| dataset.label(r) == NORMAL);
            let has_anomaly = c.eval_indices.iter().any(|&r| dataset.label(r) == ANOMALY);
            if !has_normal {
                return Err(ScenarioError::EvalMissingClass { id: c.id, class: "normal" });
            }
            if !has_anomaly {
                return Err(ScenarioError::EvalMissingClass { id: c.id, class: "anomalous" });
            }
        }
        Ok(())
    }
}
