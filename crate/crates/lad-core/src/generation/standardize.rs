//! Global feature standardization.
//!
//! Computed once over all rows (normals and anomalies together) before any
//! clustering, so concept discovery and every distance-based detector see
//! features on one common scale. Per-concept re-scaling would leak concept
//! identity into preprocessing and is deliberately not offered.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::math;

/// Per-feature transform parameters, kept for provenance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StandardizeParams {
    pub means: Vec<f64>,
    /// Population standard deviations. A zero entry marks a constant
    /// feature, which maps to the constant 0.
    pub stds: Vec<f64>,
}

/// Maps every feature to mean 0 and population standard deviation 1.
/// Zero-variance features become constant 0. The returned dataset keeps the
/// original provenance: the transform is deterministic, so the ingestion
/// digest still identifies the data.
pub fn standardize(dataset: &Dataset) -> (Dataset, StandardizeParams) {
    let features = dataset.features();
    let n = features.n_rows();
    let d = features.n_cols();
    let means = features.col_means();
    let mut stds = alloc::vec![0.0; d];
    for row in features.rows_iter() {
        for j in 0..d {
            let delta = row[j] - means[j];
            stds[j] += delta * delta;
        }
    }
    for (j, s) in stds.iter_mut().enumerate() {
        *s = math::sqrt(*s / n as f64);
        // Treat numerically-constant columns as exactly constant.
        if *s <= 1e-12 * (1.0 + means[j].abs()) {
            *s = 0.0;
        }
    }

    let mut out = features.clone();
    for i in 0..n {
        let row = out.row_mut(i);
        for j in 0..d {
            row[j] = if stds[j] == 0.0 { 0.0 } else { (row[j] - means[j]) / stds[j] };
        }
    }
    (dataset.with_features(out), StandardizeParams { means, stds })
}
