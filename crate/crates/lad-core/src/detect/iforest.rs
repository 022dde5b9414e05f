//! Isolation forest.
//!
//! An ensemble of randomized binary trees, each grown on a subsample.
//! Points that isolate quickly (short root-to-leaf paths) are anomalous;
//! the score normalizes the mean path length by the expected path length
//! `c(psi)` of an unsuccessful BST search.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::detect::DetectorError;
use crate::math;
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Expected path length of an unsuccessful search in a BST of `n` nodes:
/// `c(n) = 2 H(n-1) - 2 (n-1)/n` with exact harmonic numbers, and
/// `c(0) = c(1) = 0`.
pub fn c_factor(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let m = (n - 1) as f64;
    let mut harmonic = 0.0;
    for i in (1..n).rev() {
        harmonic += 1.0 / i as f64;
    }
    2.0 * harmonic - 2.0 * m / n as f64
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
    Leaf { size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IForestModel {
    trees: Vec<Node>,
    /// Subsample size actually used (requested size capped at n).
    subsample: usize,
    height_limit: usize,
    n_features: usize,
}

impl IForestModel {
    pub fn input_dim(&self) -> usize {
        self.n_features
    }

    /// Grows `n_trees` trees, each on a distinct random subsample of up to
    /// `subsample` rows.
    pub fn fit(
        data: &Matrix,
        n_trees: usize,
        subsample: usize,
        stream: &mut RngStream,
    ) -> Result<Self, DetectorError> {
        let n = data.n_rows();
        if n < 2 {
            return Err(DetectorError::NotEnoughTrainingRows { needed: 2, got: n });
        }
        let psi = subsample.min(n).max(2);
        let height_limit = math::ceil(math::log2(psi as f64)) as usize;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let picked =
                if psi < n { stream.sample_indices(n, psi) } else { (0..n).collect() };
            let sample = data.select_rows(&picked);
            let rows: Vec<usize> = (0..sample.n_rows()).collect();
            trees.push(grow(&sample, &rows, 0, height_limit, stream));
        }
        Ok(Self { trees, subsample: psi, height_limit, n_features: data.n_cols() })
    }

    /// Anomaly score in `(0, 1)`: `2^(-E[h(x)] / c(psi))`, where the path
    /// length of a point ending in a leaf of `size` members at depth `d` is
    /// `d + c(size)`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for tree in &self.trees {
            total += path_length(tree, x, 0);
        }
        let mean_path = total / self.trees.len() as f64;
        math::exp2(-mean_path / c_factor(self.subsample))
    }
}

fn grow(
    data: &Matrix,
    rows: &[usize],
    depth: usize,
    height_limit: usize,
    stream: &mut RngStream,
) -> Node {
    if rows.len() <= 1 || depth >= height_limit {
        return Node::Leaf { size: rows.len() };
    }
    // Only features with spread can split; constant nodes become leaves.
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..data.n_cols() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in rows {
            let v = data.get(i, j);
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        if hi > lo {
            candidates.push((j, lo, hi));
        }
    }
    let Some(&(feature, lo, hi)) = (!candidates.is_empty())
        .then(|| &candidates[stream.below(candidates.len())])
    else {
        return Node::Leaf { size: rows.len() };
    };
    let threshold = stream.open_range(lo, hi);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| data.get(i, feature) < threshold);
    let left = Box::new(grow(data, &left_rows, depth + 1, height_limit, stream));
    let right = Box::new(grow(data, &right_rows, depth + 1, height_limit, stream));
    Node::Split { feature, threshold, left, right }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + c_factor(*size),
        Node::Split { feature, threshold, left, right } => {
            if x[*feature] < *threshold {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn c_factor_small_values() {
        assert_eq!(c_factor(0), 0.0);
        assert_eq!(c_factor(1), 0.0);
        // 2 * H(1) - 2 * (1/2) = 2 - 1
        assert_eq!(c_factor(2), 1.0);
    }

    /// Oracle: incremental harmonic summation in the opposite direction.
    #[test]
    fn c_factor_matches_harmonic_oracle_at_256() {
        let mut h = 0.0;
        for i in 1..256 {
            h += 1.0 / i as f64;
        }
        let expected = 2.0 * h - 2.0 * 255.0 / 256.0;
        assert!((c_factor(256) - expected).abs() < 1e-12);
    }

    #[test]
    fn two_point_single_tree_scores_exactly_half() {
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let mut s = derive_stream(4, "iforest");
        let model = IForestModel::fit(&data, 1, 256, &mut s).unwrap();
        // Both points isolate at depth 1, so E[h] = 1 and c(2) = 1.
        assert_eq!(model.score(&[0.0]), 0.5);
        assert_eq!(model.score(&[1.0]), 0.5);
    }

    #[test]
    fn far_point_outscores_center_across_seeds() {
        for seed in 0..5 {
            let mut data_stream = derive_stream(seed, "blob");
            let rows: Vec<Vec<f64>> = (0..300)
                .map(|_| vec![data_stream.standard_normal(), data_stream.standard_normal()])
                .collect();
            let data = Matrix::from_rows(&rows);
            let mut s = derive_stream(seed, "iforest");
            let model = IForestModel::fit(&data, 100, 256, &mut s).unwrap();
            assert!(model.score(&[10.0, 10.0]) > model.score(&[0.0, 0.0]), "seed {seed}");
        }
    }

    #[test]
    fn scores_stay_in_open_unit_interval() {
        let mut data_stream = derive_stream(8, "blob");
        let rows: Vec<Vec<f64>> =
            (0..100).map(|_| vec![data_stream.standard_normal()]).collect();
        let data = Matrix::from_rows(&rows);
        let model = IForestModel::fit(&data, 50, 64, &mut derive_stream(8, "if")).unwrap();
        // Path lengths are bounded by height_limit + c(psi), so scores are
        // bounded below by 2^(-(height_limit + c(psi)) / c(psi)).
        let psi = 64.0f64;
        let floor = libm::exp2(-(psi.log2().ceil() + c_factor(64)) / c_factor(64));
        for x in [-100.0, -1.0, 0.0, 0.5, 1.0, 100.0] {
            let s = model.score(&[x]);
            assert!(s > 0.0 && s < 1.0, "score({x}) = {s}");
            assert!(s >= floor, "score({x}) = {s} below the path-length floor {floor}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let mut data_stream = derive_stream(6, "blob");
        let rows: Vec<Vec<f64>> =
            (0..50).map(|_| vec![data_stream.standard_normal(), 0.0]).collect();
        let data = Matrix::from_rows(&rows);
        let a = IForestModel::fit(&data, 20, 32, &mut derive_stream(1, "if")).unwrap();
        let b = IForestModel::fit(&data, 20, 32, &mut derive_stream(1, "if")).unwrap();
        assert_eq!(a, b);
    }
}
