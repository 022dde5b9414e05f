//! Local outlier factor in novelty mode.
//!
//! Neighborhoods of a query point are always drawn from the training set.
//! The score is the ratio between the average local reachability density of
//! the query's neighbors and the query's own: values near 1 mean the point
//! sits in a region as dense as its neighborhood, larger values mean it is
//! isolated relative to its neighbors.
//!
//! The k-distance is the k-th smallest *distinct* distance, so a block of
//! duplicates never shrinks the neighborhood radius to a single value. When
//! duplicates still force a zero reachability sum, the density is capped at
//! `1e12` to keep ratios finite.

use alloc::vec::Vec;

use crate::detect::DetectorError;
use crate::math;
use crate::matrix::Matrix;

const DENSITY_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct LofModel {
    points: Matrix,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

impl LofModel {
    pub fn input_dim(&self) -> usize {
        self.points.n_cols()
    }

    /// Precomputes each training point's k-distance and local reachability
    /// density. Requires at least `k + 1` rows, which keeps `k <= n - 1`.
    pub fn fit(data: &Matrix, k: usize) -> Result<Self, DetectorError> {
        let n = data.n_rows();
        let k = k.max(1);
        if n <= k {
            return Err(DetectorError::NotEnoughTrainingRows { needed: k + 1, got: n });
        }

        // Pairwise distances once; n is desk-scale after concept splitting.
        let mut dist = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = math::dist(data.row(i), data.row(j));
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }

        let mut k_distance = alloc::vec![0.0; n];
        let mut neighborhoods: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let others: Vec<f64> =
                (0..n).filter(|&j| j != i).map(|j| dist[i * n + j]).collect();
            let kd = kth_distinct(&others, k);
            k_distance[i] = kd;
            neighborhoods.push(
                (0..n).filter(|&j| j != i && dist[i * n + j] <= kd).collect(),
            );
        }

        let mut lrd = alloc::vec![0.0; n];
        for i in 0..n {
            let mut reach_sum = 0.0;
            for &j in &neighborhoods[i] {
                reach_sum += dist[i * n + j].max(k_distance[j]);
            }
            lrd[i] = density(neighborhoods[i].len(), reach_sum);
        }

        Ok(Self { points: data.clone(), k, k_distance, lrd })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let n = self.points.n_rows();
        let dists: Vec<f64> = self.points.rows_iter().map(|p| math::dist(p, x)).collect();
        let kd = kth_distinct(&dists, self.k);
        let neighbors: Vec<usize> = (0..n).filter(|&j| dists[j] <= kd).collect();

        let mut reach_sum = 0.0;
        let mut neighbor_lrd_sum = 0.0;
        for &j in &neighbors {
            reach_sum += dists[j].max(self.k_distance[j]);
            neighbor_lrd_sum += self.lrd[j];
        }
        let lrd_x = density(neighbors.len(), reach_sum);
        (neighbor_lrd_sum / neighbors.len() as f64) / lrd_x
    }
}

/// k-th smallest distinct value (the largest distinct value if fewer than k
/// exist).
fn kth_distinct(distances: &[f64], k: usize) -> f64 {
    let mut sorted = distances.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut seen = 0usize;
    let mut last = f64::NAN;
    for &d in &sorted {
        if seen == 0 || d != last {
            seen += 1;
            last = d;
            if seen == k {
                return d;
            }
        }
    }
    last
}

fn density(count: usize, reach_sum: f64) -> f64 {
    if reach_sum <= 0.0 { DENSITY_CAP } else { count as f64 / reach_sum }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::{vec, vec::Vec};

    fn grid() -> Matrix {
        let mut rows = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                rows.push(vec![i as f64, j as f64]);
            }
        }
        Matrix::from_rows(&rows)
    }

    /// Independent brute-force recomputation of the same definitions.
    fn brute_force_lof(train: &Matrix, k: usize, x: &[f64]) -> f64 {
        let n = train.n_rows();
        let d = |a: &[f64], b: &[f64]| math::dist(a, b);
        let kdist = |p: &[f64], exclude: Option<usize>| -> f64 {
            let ds: Vec<f64> = (0..n)
                .filter(|&j| exclude != Some(j))
                .map(|j| d(p, train.row(j)))
                .collect();
            kth_distinct(&ds, k)
        };
        let neigh = |p: &[f64], exclude: Option<usize>, kd: f64| -> Vec<usize> {
            (0..n)
                .filter(|&j| exclude != Some(j) && d(p, train.row(j)) <= kd)
                .collect()
        };
        let lrd_of = |p: &[f64], exclude: Option<usize>| -> f64 {
            let kd = kdist(p, exclude);
            let ns = neigh(p, exclude, kd);
            let mut sum = 0.0;
            for &j in &ns {
                sum += d(p, train.row(j)).max(kdist(train.row(j), Some(j)));
            }
            density(ns.len(), sum)
        };
        let kd_x = kdist(x, None);
        let ns = neigh(x, None, kd_x);
        let mean_lrd: f64 =
            ns.iter().map(|&j| lrd_of(train.row(j), Some(j))).sum::<f64>() / ns.len() as f64;
        mean_lrd / lrd_of(x, None)
    }

    #[test]
    fn interior_grid_point_scores_near_one() {
        let g = grid();
        let model = LofModel::fit(&g, 8).unwrap();
        let score = model.score(&[5.0, 5.0]);
        assert!((0.9..=1.1).contains(&score), "interior LOF = {score}");
        let oracle = brute_force_lof(&g, 8, &[5.0, 5.0]);
        assert!((score - oracle).abs() < 1e-9, "{score} vs oracle {oracle}");
    }

    #[test]
    fn far_point_scores_high() {
        let g = grid();
        let model = LofModel::fit(&g, 8).unwrap();
        let score = model.score(&[25.0, 5.0]);
        assert!(score > 1.5, "far LOF = {score}");
        let oracle = brute_force_lof(&g, 8, &[25.0, 5.0]);
        assert!((score - oracle).abs() < 1e-9);
    }

    #[test]
    fn duplicate_of_interior_point_scores_no_worse_than_interior() {
        let g = grid();
        let model = LofModel::fit(&g, 8).unwrap();
        let on_point = model.score(&[5.0, 5.0]);
        let interior = model.score(&[5.5, 5.5]);
        assert!(on_point <= interior + 1e-9, "{on_point} vs {interior}");
    }

    #[test]
    fn rejects_too_small_training_sets() {
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let err = LofModel::fit(&data, 5).unwrap_err();
        assert!(matches!(err, DetectorError::NotEnoughTrainingRows { .. }));
    }

    #[test]
    fn median_score_on_uniform_data_is_near_one() {
        let mut stream = crate::rng::derive_stream(9, "uniform");
        let rows: Vec<Vec<f64>> =
            (0..300).map(|_| vec![stream.unit_f64(), stream.unit_f64()]).collect();
        let data = Matrix::from_rows(&rows);
        let model = LofModel::fit(&data, 20).unwrap();
        let mut scores: Vec<f64> = rows.iter().map(|r| model.score(r)).collect();
        scores.sort_unstable_by(f64::total_cmp);
        let median = scores[scores.len() / 2];
        assert!((0.85..=1.15).contains(&median), "median LOF on uniform data: {median}");
    }

    #[test]
    fn all_duplicates_stay_finite() {
        let data = Matrix::from_rows(&vec![vec![1.0, 1.0]; 10]);
        let model = LofModel::fit(&data, 3).unwrap();
        let s = model.score(&[1.0, 1.0]);
        assert!(s.is_finite());
    }
}
