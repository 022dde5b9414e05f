//! Synthetic desk-scale fixture datasets.
//!
//! Normal rows come from unit-variance Gaussian blobs whose means sit at
//! least `separation` apart; each blob's anomalies are drawn on a shell at
//! roughly three separations from its mean, so every anomaly is an outlier
//! with respect to every blob.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::{ANOMALY, Dataset, NORMAL};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Generates `n_concepts` blobs of `per_concept_normals` normal rows plus
/// `per_concept_anomalies` anomalous rows each, in `dims` dimensions.
///
/// Blob k's mean lies at `k * separation` along the unit diagonal, so means
/// are exactly `separation` apart from their neighbors. Rows are emitted
/// concept by concept, normals before anomalies.
pub fn synth_dataset(
    n_concepts: usize,
    per_concept_normals: usize,
    per_concept_anomalies: usize,
    separation: f64,
    dims: usize,
    stream: &mut RngStream,
) -> Dataset {
    assert!(n_concepts >= 1 && per_concept_normals >= 1 && per_concept_anomalies >= 1);
    assert!(separation > 0.0 && dims >= 1);

    let diag = 1.0 / math::sqrt(dims as f64);
    let total = n_concepts * (per_concept_normals + per_concept_anomalies);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut labels: Vec<u8> = Vec::with_capacity(total);

    for k in 0..n_concepts {
        let mean: Vec<f64> = (0..dims).map(|_| k as f64 * separation * diag).collect();
        for _ in 0..per_concept_normals {
            rows.push(mean.iter().map(|m| m + stream.standard_normal()).collect());
            labels.push(NORMAL);
        }
        for _ in 0..per_concept_anomalies {
            let mut dir: Vec<f64> = (0..dims).map(|_| stream.standard_normal()).collect();
            let mut norm = math::sqrt(dir.iter().map(|v| v * v).sum());
            while norm < 1e-9 {
                dir = (0..dims).map(|_| stream.standard_normal()).collect();
                norm = math::sqrt(dir.iter().map(|v| v * v).sum());
            }
            let radius = 3.0 * separation + stream.standard_normal();
            rows.push(mean.iter().zip(&dir).map(|(m, d)| m + radius * d / norm).collect());
            labels.push(ANOMALY);
        }
    }

    let names: Vec<String> = (0..dims).map(|j| alloc::format!("f{j}")).collect();
    Dataset::new(Matrix::from_rows(&rows), labels, names, "synthetic".to_string())
        .expect("synthetic dataset satisfies the dataset invariants by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::kmeans::kmeans;
    use crate::generation::standardize::standardize;
    use crate::rng::derive_stream;
    use alloc::vec::Vec;

    #[test]
    fn row_and_label_counts() {
        let mut s = derive_stream(42, "synth");
        let ds = synth_dataset(3, 200, 20, 10.0, 2, &mut s);
        assert_eq!(ds.n_samples(), 660);
        assert_eq!(ds.labels().iter().filter(|&&l| l == ANOMALY).count(), 60);
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let a = synth_dataset(2, 50, 10, 8.0, 3, &mut derive_stream(9, "synth"));
        let b = synth_dataset(2, 50, 10, 8.0, 3, &mut derive_stream(9, "synth"));
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    /// Clustering the normals must recover the generating blobs: under the
    /// best pairing of clusters to blobs, at least 99% of rows agree.
    #[test]
    fn kmeans_recovers_generating_components() {
        let mut s = derive_stream(42, "synth");
        let ds = synth_dataset(3, 200, 20, 10.0, 2, &mut s);
        let (std_ds, _) = standardize(&ds);
        let normals: Vec<usize> =
            (0..ds.n_samples()).filter(|&i| ds.label(i) == NORMAL).collect();
        // Generating component of each normal row, in `normals` order.
        let truth: Vec<usize> = normals.iter().map(|&i| i / 220).collect();
        let points = std_ds.features().select_rows(&normals);
        let result = kmeans(&points, 3, &mut derive_stream(42, "phi")).unwrap();

        let perms: [[usize; 3]; 6] =
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| {
                result
                    .assignments
                    .iter()
                    .zip(&truth)
                    .filter(|&(&a, &t)| p[a] == t)
                    .count()
            })
            .max()
            .unwrap();
        let accuracy = best as f64 / truth.len() as f64;
        assert!(accuracy >= 0.99, "pairing accuracy {accuracy}");
    }
}
