//! Labeled datasets and the label-split convention.
//!
//! Labels are binary: `0` = normal, `1` = anomaly. Detector scores are
//! oriented "higher = more anomalous" everywhere, so no per-detector sign
//! handling exists anywhere downstream.

use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::matrix::Matrix;

pub const NORMAL: u8 = 0;
pub const ANOMALY: u8 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("feature matrix contains a non-finite value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("label count {labels} does not match row count {rows}")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("label at row {row} is {value}; labels must be 0 (normal) or 1 (anomaly)")]
    InvalidLabel { row: usize, value: u8 },
    #[error("dataset has no {0} samples; both classes are required")]
    MissingClass(&'static str),
    #[error("feature name count {names} does not match column count {cols}")]
    FeatureNameMismatch { names: usize, cols: usize },
}

/// Where a dataset came from and a digest identifying its exact contents.
///
/// The digest covers the numeric encoding (shape, feature bytes, labels),
/// so it survives lossless round trips through text formats and is what
/// scenario files bind to.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub source: String,
    pub digest: String,
}

/// A labeled feature matrix.
///
/// Invariants enforced at construction: all features finite, labels binary
/// and one per row, and at least one sample of each class present.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        source: String,
    ) -> Result<Self, DataError> {
        if labels.len() != features.n_rows() {
            return Err(DataError::LabelCountMismatch {
                labels: labels.len(),
                rows: features.n_rows(),
            });
        }
        if feature_names.len() != features.n_cols() {
            return Err(DataError::FeatureNameMismatch {
                names: feature_names.len(),
                cols: features.n_cols(),
            });
        }
        for (i, row) in features.rows_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteFeature { row: i, col: j });
                }
            }
        }
        for (i, &l) in labels.iter().enumerate() {
            if l != NORMAL && l != ANOMALY {
                return Err(DataError::InvalidLabel { row: i, value: l });
            }
        }
        if !labels.contains(&NORMAL) {
            return Err(DataError::MissingClass("normal"));
        }
        if !labels.contains(&ANOMALY) {
            return Err(DataError::MissingClass("anomalous"));
        }
        let digest = content_digest(&features, &labels);
        Ok(Self { features, labels, feature_names, provenance: Provenance { source, digest } })
    }

    /// Rebuilds a dataset with transformed features but the original
    /// provenance. Used by feature-space transforms (standardization) that
    /// keep the dataset's identity.
    pub(crate) fn with_features(&self, features: Matrix) -> Self {
        Self {
            features,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        }
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.features.n_rows()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    #[inline]
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    #[inline]
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, row: usize) -> u8 {
        self.labels[row]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn digest(&self) -> &str {
        &self.provenance.digest
    }
}

/// Partitions all row indices by label, preserving row order.
pub fn split_labels(dataset: &Dataset) -> (Vec<usize>, Vec<usize>) {
    let mut normal = Vec::new();
    let mut anomaly = Vec::new();
    for (i, &l) in dataset.labels().iter().enumerate() {
        if l == NORMAL {
            normal.push(i);
        } else {
            anomaly.push(i);
        }
    }
    (normal, anomaly)
}

/// SHA-256 over shape, row-major feature bytes (little-endian f64), and
/// labels, as a lowercase hex string.
pub fn content_digest(features: &Matrix, labels: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update((features.n_rows() as u64).to_le_bytes());
    h.update((features.n_cols() as u64).to_le_bytes());
    for v in features.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.update(labels);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        push_hex(&mut out, b);
    }
    out
}

fn push_hex(out: &mut String, byte: u8) {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    out.push(HEX[(byte >> 4) as usize] as char);
    out.push(HEX[(byte & 0xf) as usize] as char);
}
