//! Scenario construction.
//!
//! The pipeline clusters the normal rows into `c` concepts, groups the
//! anomaly rows into `c` groups (clustered or random), assigns each normal
//! cluster one anomaly group (closest-centroid or random, each group used
//! once), splits every concept into train/eval partitions, and finally
//! orders the concept sequence.
//!
//! All distances are Euclidean in the (standardized) feature space, matching
//! the clustering objective. Minimum-size guards fail hard instead of
//! silently merging concepts: merging would change the concept count and
//! make metrics incomparable across runs.

pub mod kmeans;
pub mod standardize;
pub mod synth;

use alloc::vec::Vec;

use crate::dataset::{Dataset, split_labels};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::RngStream;
use crate::scenario::{Concept, Scenario, Variant, Visibility};

pub use kmeans::{ClusteringResult, kmeans};
pub use standardize::{StandardizeParams, standardize};
pub use synth::synth_dataset;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("clustering needs at least {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("could not form {k} nonempty clusters (too many duplicate points)")]
    DegenerateClustering { k: usize },
    #[error("{mode} anomaly partitioning into {groups} groups requires at least {required} anomaly rows, got {got}")]
    TooFewAnomalies { mode: &'static str, groups: usize, required: usize, got: usize },
    #[error("no anomaly groups left to assign")]
    NoAvailableGroups,
    #[error("concept {concept}: {partition} has {got} rows, needs at least {required}")]
    ConceptTooSmall { concept: usize, partition: &'static str, required: usize, got: usize },
    #[error("invalid generation config: {0}")]
    InvalidConfig(&'static str),
}

/// How the generated concept sequence is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ConceptOrdering {
    /// Normal clusters as produced (largest first).
    #[default]
    ByClusterIndex,
    /// Seeded shuffle of the concept sequence.
    Shuffled,
}

/// Everything that determines a generated scenario besides the dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GenerationConfig {
    /// Number of concepts to produce.
    pub n_concepts: usize,
    pub variant: Variant,
    /// Fraction of each normal cluster used for training.
    pub train_ratio: f64,
    pub min_train: usize,
    pub min_eval_normal: usize,
    pub min_anomalies_per_concept: usize,
    pub ordering: ConceptOrdering,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n_concepts: 2,
            variant: Variant::ClusteredClosest,
            train_ratio: 0.5,
            min_train: 20,
            min_eval_normal: 10,
            min_anomalies_per_concept: 5,
            ordering: ConceptOrdering::ByClusterIndex,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.n_concepts < 2 {
            return Err(GenerationError::InvalidConfig("n_concepts must be at least 2"));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(GenerationError::InvalidConfig("train_ratio must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

/// How anomaly rows are grouped into concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyGrouping {
    Clustered,
    Random,
}

/// How an anomaly group is matched to a normal cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentRule {
    Closest,
    Random,
}

impl Variant {
    pub fn grouping(self) -> AnomalyGrouping {
        match self {
            Variant::ClusteredClosest | Variant::ClusteredRandom => AnomalyGrouping::Clustered,
            Variant::RandomRandom => AnomalyGrouping::Random,
        }
    }

    pub fn assignment(self) -> AssignmentRule {
        match self {
            Variant::ClusteredClosest => AssignmentRule::Closest,
            Variant::ClusteredRandom | Variant::RandomRandom => AssignmentRule::Random,
        }
    }
}

/// One group of anomaly rows with the centroid of their features.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyGroup {
    pub rows: Vec<usize>,
    pub centroid: Vec<f64>,
}

/// Splits the anomaly rows into exactly `c` nonempty disjoint groups
/// covering all of them.
///
/// Clustered mode runs k-means on the anomaly features and requires at
/// least `c * min_per_group` rows; random mode shuffles and splits into
/// near-equal parts (earlier groups take the remainder) and requires at
/// least `c` rows.
pub fn partition_anomalies(
    features: &Matrix,
    anomaly_rows: &[usize],
    c: usize,
    mode: AnomalyGrouping,
    min_per_group: usize,
    stream: &mut RngStream,
) -> Result<Vec<AnomalyGroup>, GenerationError> {
    let n = anomaly_rows.len();
    match mode {
        AnomalyGrouping::Clustered => {
            let required = c * min_per_group.max(1);
            if n < required {
                return Err(GenerationError::TooFewAnomalies {
                    mode: "clustered",
                    groups: c,
                    required,
                    got: n,
                });
            }
            let points = features.select_rows(anomaly_rows);
            let clustering = kmeans(&points, c, stream)?;
            let mut groups: Vec<AnomalyGroup> = (0..c)
                .map(|g| AnomalyGroup { rows: Vec::new(), centroid: clustering.centroids.row(g).to_vec() })
                .collect();
            for (local, &g) in clustering.assignments.iter().enumerate() {
                groups[g].rows.push(anomaly_rows[local]);
            }
            Ok(groups)
        }
        AnomalyGrouping::Random => {
            if n < c {
                return Err(GenerationError::TooFewAnomalies {
                    mode: "random",
                    groups: c,
                    required: c,
                    got: n,
                });
            }
            let mut shuffled = anomaly_rows.to_vec();
            stream.shuffle(&mut shuffled);
            let base = n / c;
            let remainder = n % c;
            let mut groups = Vec::with_capacity(c);
            let mut offset = 0;
            for g in 0..c {
                let size = base + usize::from(g < remainder);
                let mut rows = shuffled[offset..offset + size].to_vec();
                rows.sort_unstable();
                offset += size;
                let centroid = features.select_rows(&rows).col_means();
                groups.push(AnomalyGroup { rows, centroid });
            }
            Ok(groups)
        }
    }
}

/// Picks one anomaly group for the given normal-cluster centroid and
/// removes it from `available` (indices into `groups`).
///
/// Closest mode minimizes the Euclidean centroid distance with ties broken
/// toward the lowest group index; random mode draws uniformly from the
/// available set.
pub fn assign_anomaly_group(
    normal_centroid: &[f64],
    groups: &[AnomalyGroup],
    available: &mut Vec<usize>,
    rule: AssignmentRule,
    stream: &mut RngStream,
) -> Result<usize, GenerationError> {
    if available.is_empty() {
        return Err(GenerationError::NoAvailableGroups);
    }
    let position = match rule {
        AssignmentRule::Closest => {
            let mut best_pos = 0usize;
            let mut best_d = f64::INFINITY;
            for (pos, &g) in available.iter().enumerate() {
                let d = math::dist_sq(normal_centroid, &groups[g].centroid);
                if d < best_d {
                    best_d = d;
                    best_pos = pos;
                }
            }
            best_pos
        }
        AssignmentRule::Random => stream.below(available.len()),
    };
    Ok(available.remove(position))
}

/// Runs the full generation pipeline against a standardized dataset.
///
/// `visibility` is stamped onto the scenario; it does not affect how the
/// concepts are built.
pub fn build_scenario(
    dataset: &Dataset,
    config: &GenerationConfig,
    visibility: Visibility,
) -> Result<Scenario, GenerationError> {
    config.validate()?;
    let c = config.n_concepts;
    let (normal_rows, anomaly_rows) = split_labels(dataset);

    // Normal concepts: k-means over the normal rows, clusters ordered
    // largest first.
    let mut phi_stream = RngStream::derive(config.seed, "phi");
    let normal_points = dataset.features().select_rows(&normal_rows);
    let clustering = kmeans(&normal_points, c, &mut phi_stream)?;
    let mut clusters: Vec<(Vec<usize>, Vec<f64>)> =
        (0..c).map(|g| (Vec::new(), clustering.centroids.row(g).to_vec())).collect();
    for (local, &g) in clustering.assignments.iter().enumerate() {
        clusters[g].0.push(normal_rows[local]);
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by_key(|&g| (usize::MAX - clusters[g].0.len(), g));

    // Anomaly groups.
    let mut gamma_stream = RngStream::derive(config.seed, "gamma");
    let groups = partition_anomalies(
        dataset.features(),
        &anomaly_rows,
        c,
        config.variant.grouping(),
        config.min_anomalies_per_concept,
        &mut gamma_stream,
    )?;

    // Pair each normal cluster with one anomaly group; every group is used
    // exactly once, which keeps anomaly sets disjoint across concepts.
    let mut lambda_stream = RngStream::derive(config.seed, "lambda");
    let mut available: Vec<usize> = (0..c).collect();
    let mut concepts = Vec::with_capacity(c);
    for (position, &cluster_idx) in order.iter().enumerate() {
        let (rows, centroid) = &clusters[cluster_idx];
        let group_idx = assign_anomaly_group(
            centroid,
            &groups,
            &mut available,
            config.variant.assignment(),
            &mut lambda_stream,
        )?;

        let mut shuffled = rows.clone();
        shuffled.sort_unstable();
        let mut split_stream = RngStream::derive(config.seed, &alloc::format!("split-{position}"));
        split_stream.shuffle(&mut shuffled);
        let n_train = (config.train_ratio * shuffled.len() as f64) as usize;
        let mut train: Vec<usize> = shuffled[..n_train].to_vec();
        let mut eval_normals: Vec<usize> = shuffled[n_train..].to_vec();
        train.sort_unstable();
        eval_normals.sort_unstable();

        if train.len() < config.min_train {
            return Err(GenerationError::ConceptTooSmall {
                concept: position,
                partition: "training partition",
                required: config.min_train,
                got: train.len(),
            });
        }
        if eval_normals.len() < config.min_eval_normal {
            return Err(GenerationError::ConceptTooSmall {
                concept: position,
                partition: "eval normal partition",
                required: config.min_eval_normal,
                got: eval_normals.len(),
            });
        }
        let anomalies = groups[group_idx].rows.clone();
        if anomalies.len() < config.min_anomalies_per_concept {
            return Err(GenerationError::ConceptTooSmall {
                concept: position,
                partition: "anomaly group",
                required: config.min_anomalies_per_concept,
                got: anomalies.len(),
            });
        }

        let mut normal_indices = rows.clone();
        normal_indices.sort_unstable();
        let mut eval_indices = eval_normals;
        eval_indices.extend_from_slice(&anomalies);
        concepts.push(Concept {
            id: position,
            normal_indices,
            anomaly_indices: anomalies,
            train_indices: train,
            eval_indices,
        });
    }

    if config.ordering == ConceptOrdering::Shuffled {
        let mut ordering_stream = RngStream::derive(config.seed, "ordering");
        ordering_stream.shuffle(&mut concepts);
        for (id, concept) in concepts.iter_mut().enumerate() {
            concept.id = id;
        }
    }

    let scenario = Scenario {
        concepts,
        visibility,
        variant: config.variant,
        seed: config.seed,
        dataset_digest: alloc::string::String::from(dataset.digest()),
        n_rows: dataset.n_samples(),
    };
    debug_assert_eq!(scenario.validate(), Ok(()));
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::rng::derive_stream;
    use alloc::string::ToString;
    use alloc::{vec, vec::Vec};

    fn grid_features(n: usize) -> Matrix {
        Matrix::from_rows(&(0..n).map(|i| vec![i as f64, 0.0]).collect::<Vec<_>>())
    }

    #[test]
    fn random_partition_splits_evenly() {
        let features = grid_features(9);
        let rows: Vec<usize> = (0..9).collect();
        let mut s = derive_stream(1, "gamma");
        let groups =
            partition_anomalies(&features, &rows, 3, AnomalyGrouping::Random, 1, &mut s).unwrap();
        let sizes: Vec<usize> = groups.iter().map(|g| g.rows.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3]);
        let mut all: Vec<usize> = groups.iter().flat_map(|g| g.rows.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, rows);
    }

    #[test]
    fn random_partition_gives_remainder_to_earliest_groups() {
        let features = grid_features(10);
        let rows: Vec<usize> = (0..10).collect();
        let mut s = derive_stream(1, "gamma");
        let groups =
            partition_anomalies(&features, &rows, 3, AnomalyGrouping::Random, 1, &mut s).unwrap();
        let sizes: Vec<usize> = groups.iter().map(|g| g.rows.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn clustered_partition_recovers_separated_blobs() {
        let mut rows_data: Vec<Vec<f64>> = Vec::new();
        for i in 0..6 {
            rows_data.push(vec![i as f64 * 0.1, 0.0]);
        }
        for i in 0..6 {
            rows_data.push(vec![100.0 + i as f64 * 0.1, 0.0]);
        }
        let features = Matrix::from_rows(&rows_data);
        let rows: Vec<usize> = (0..12).collect();
        let mut s = derive_stream(2, "gamma");
        let groups =
            partition_anomalies(&features, &rows, 2, AnomalyGrouping::Clustered, 5, &mut s).unwrap();
        let mut by_first: Vec<Vec<usize>> = groups.iter().map(|g| g.rows.clone()).collect();
        by_first.sort_by_key(|g| g[0]);
        assert_eq!(by_first[0], (0..6).collect::<Vec<_>>());
        assert_eq!(by_first[1], (6..12).collect::<Vec<_>>());
    }

    #[test]
    fn partition_rejects_too_few_anomalies() {
        let features = grid_features(9);
        let rows: Vec<usize> = (0..9).collect();
        let err = partition_anomalies(
            &features,
            &rows,
            2,
            AnomalyGrouping::Clustered,
            5,
            &mut derive_stream(1, "gamma"),
        )
        .unwrap_err();
        assert_eq!(
            err,
            GenerationError::TooFewAnomalies { mode: "clustered", groups: 2, required: 10, got: 9 }
        );
        let err = partition_anomalies(
            &features,
            &rows[..2],
            3,
            AnomalyGrouping::Random,
            1,
            &mut derive_stream(1, "gamma"),
        )
        .unwrap_err();
        assert_eq!(
            err,
            GenerationError::TooFewAnomalies { mode: "random", groups: 3, required: 3, got: 2 }
        );
    }

    fn group(centroid: Vec<f64>) -> AnomalyGroup {
        AnomalyGroup { rows: vec![0], centroid }
    }

    #[test]
    fn closest_assignment_picks_strictly_nearest() {
        let groups = [group(vec![1.0, 0.0]), group(vec![5.0, 5.0])];
        let mut available = vec![0, 1];
        let mut s = derive_stream(1, "lambda");
        let chosen = assign_anomaly_group(
            &[0.0, 0.0],
            &groups,
            &mut available,
            AssignmentRule::Closest,
            &mut s,
        )
        .unwrap();
        assert_eq!(chosen, 0);
        assert_eq!(available, vec![1]);
    }

    #[test]
    fn closest_assignment_breaks_ties_toward_lowest_index() {
        let groups = [group(vec![1.0, 0.0]), group(vec![-1.0, 0.0])];
        let mut available = vec![0, 1];
        let mut s = derive_stream(1, "lambda");
        let chosen = assign_anomaly_group(
            &[0.0, 0.0],
            &groups,
            &mut available,
            AssignmentRule::Closest,
            &mut s,
        )
        .unwrap();
        assert_eq!(chosen, 0);
    }

    #[test]
    fn random_assignment_is_deterministic_under_fixed_seed() {
        let groups = [group(vec![0.0]), group(vec![1.0]), group(vec![2.0])];
        let run = || {
            let mut available = vec![0, 1, 2];
            let mut s = derive_stream(77, "lambda");
            assign_anomaly_group(&[0.0], &groups, &mut available, AssignmentRule::Random, &mut s)
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    /// Two normal blobs each with a nearby anomaly blob: closest assignment
    /// must pair them up, verified by exhaustive centroid distances.
    #[test]
    fn build_pairs_each_normal_blob_with_its_nearby_anomaly_blob() {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<u8> = Vec::new();
        let mut noise = derive_stream(5, "noise");
        // Blob 0 at (0, 0), blob 1 at (40, 0); anomaly blob k offset by +6 in y.
        for k in 0..2 {
            let cx = k as f64 * 40.0;
            for _ in 0..60 {
                rows.push(vec![cx + noise.standard_normal(), noise.standard_normal()]);
                labels.push(0);
            }
        }
        for k in 0..2 {
            let cx = k as f64 * 40.0;
            for _ in 0..12 {
                rows.push(vec![cx + noise.standard_normal(), 6.0 + 0.1 * noise.standard_normal()]);
                labels.push(1);
            }
        }
        let names = vec!["x".to_string(), "y".to_string()];
        let ds =
            Dataset::new(Matrix::from_rows(&rows), labels, names, "two-blob".to_string()).unwrap();
        let (std_ds, _) = standardize(&ds);

        let config = GenerationConfig {
            n_concepts: 2,
            variant: Variant::ClusteredClosest,
            min_train: 20,
            min_eval_normal: 10,
            min_anomalies_per_concept: 5,
            seed: 42,
            ..GenerationConfig::default()
        };
        let scenario = build_scenario(&std_ds, &config, Visibility::Aware).unwrap();
        assert_eq!(scenario.n_concepts(), 2);

        // Oracle: for every concept, its anomaly centroid must be closer to
        // its own normal centroid than to the other concept's.
        for concept in &scenario.concepts {
            let nc = std_ds.features().select_rows(&concept.normal_indices).col_means();
            let ac = std_ds.features().select_rows(&concept.anomaly_indices).col_means();
            for other in &scenario.concepts {
                if other.id == concept.id {
                    continue;
                }
                let oc = std_ds.features().select_rows(&other.normal_indices).col_means();
                assert!(
                    math::dist_sq(&nc, &ac) < math::dist_sq(&oc, &ac),
                    "concept {} was not paired with its nearest anomaly blob",
                    concept.id
                );
            }
        }
    }

    #[test]
    fn build_rejects_too_few_anomalies_for_requested_concepts() {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<u8> = Vec::new();
        let mut noise = derive_stream(6, "noise");
        for i in 0..300 {
            rows.push(vec![(i % 5) as f64 * 30.0 + noise.standard_normal(), 0.0]);
            labels.push(0);
        }
        for _ in 0..3 {
            rows.push(vec![1000.0 + noise.standard_normal(), 0.0]);
            labels.push(1);
        }
        let names = vec!["x".to_string(), "y".to_string()];
        let ds = Dataset::new(Matrix::from_rows(&rows), labels, names, "few".to_string()).unwrap();
        let config = GenerationConfig {
            n_concepts: 5,
            variant: Variant::RandomRandom,
            seed: 1,
            ..GenerationConfig::default()
        };
        let err = build_scenario(&ds, &config, Visibility::Aware).unwrap_err();
        assert_eq!(
            err,
            GenerationError::TooFewAnomalies { mode: "random", groups: 5, required: 5, got: 3 }
        );
    }

    #[test]
    fn build_is_deterministic() {
        let mut s = derive_stream(42, "synth");
        let ds = synth_dataset(3, 80, 10, 10.0, 2, &mut s);
        let (std_ds, _) = standardize(&ds);
        let config = GenerationConfig {
            n_concepts: 3,
            variant: Variant::ClusteredClosest,
            seed: 9,
            ..GenerationConfig::default()
        };
        let a = build_scenario(&std_ds, &config, Visibility::Aware).unwrap();
        let b = build_scenario(&std_ds, &config, Visibility::Aware).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffled_ordering_keeps_ids_sequential() {
        let mut s = derive_stream(42, "synth");
        let ds = synth_dataset(4, 80, 10, 10.0, 2, &mut s);
        let (std_ds, _) = standardize(&ds);
        let config = GenerationConfig {
            n_concepts: 4,
            variant: Variant::RandomRandom,
            ordering: ConceptOrdering::Shuffled,
            seed: 3,
            ..GenerationConfig::default()
        };
        let scenario = build_scenario(&std_ds, &config, Visibility::Incremental).unwrap();
        assert_eq!(scenario.validate(), Ok(()));
        for (i, c) in scenario.concepts.iter().enumerate() {
            assert_eq!(c.id, i);
        }
    }
}
