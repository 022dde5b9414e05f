//! Lloyd's k-means with careful (distance-weighted) seeding.
//!
//! Deterministic under a fixed stream. Empty clusters are reseeded with the
//! point farthest from its assigned centroid. The loop runs until the
//! assignment is a fixed point (so returned centroids are exactly the means
//! of their members and every point sits in its nearest cluster) or 300
//! iterations.

use alloc::vec;
use alloc::vec::Vec;

use crate::generation::GenerationError;
use crate::math;
use crate::matrix::Matrix;
use crate::rng::RngStream;

const MAX_ITERS: usize = 300;

/// A converged clustering: per-row cluster index, the centroid matrix, and
/// the summed squared distance of every point to its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

pub fn kmeans(
    points: &Matrix,
    k: usize,
    stream: &mut RngStream,
) -> Result<ClusteringResult, GenerationError> {
    let n = points.n_rows();
    if k == 0 || n < k {
        return Err(GenerationError::NotEnoughPoints { needed: k.max(1), got: n });
    }

    let mut centroids = init_careful(points, k, stream);
    let mut assignments = nearest_assignments(points, &centroids);

    let mut stable = false;
    for _ in 0..MAX_ITERS {
        let repaired = update_centroids(points, &assignments, &mut centroids);
        let next = nearest_assignments(points, &centroids);
        if !repaired && next == assignments {
            stable = true;
            break;
        }
        assignments = next;
    }
    if !stable {
        // Iteration cap hit: pin the fixed-point property of the returned
        // value (centroids are the means of the returned assignments).
        let repaired = update_centroids(points, &assignments, &mut centroids);
        if repaired {
            return Err(GenerationError::DegenerateClustering { k });
        }
    }

    let mut counts = vec![0usize; k];
    for &a in &assignments {
        counts[a] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(GenerationError::DegenerateClustering { k });
    }

    let inertia = assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| math::dist_sq(points.row(i), centroids.row(a)))
        .sum();

    Ok(ClusteringResult { assignments, centroids, inertia })
}

/// Careful seeding: first center uniform, each next center drawn with
/// probability proportional to its squared distance to the closest chosen
/// center.
fn init_careful(points: &Matrix, k: usize, stream: &mut RngStream) -> Matrix {
    let n = points.n_rows();
    let mut centroids = Matrix::zeros(k, points.n_cols());
    let first = stream.below(n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut best_sq = vec![f64::INFINITY; n];
    for c in 1..k {
        let prev = centroids.row(c - 1).to_vec();
        for (i, d) in best_sq.iter_mut().enumerate() {
            let cand = math::dist_sq(points.row(i), &prev);
            if cand < *d {
                *d = cand;
            }
        }
        let chosen = match stream.weighted_index(&best_sq) {
            Some(i) => i,
            // Every point coincides with a chosen center; fall back to a
            // uniform draw.
            None => stream.below(n),
        };
        centroids.row_mut(c).copy_from_slice(points.row(chosen));
    }
    centroids
}

/// Nearest-centroid assignment; ties go to the lowest cluster index.
fn nearest_assignments(points: &Matrix, centroids: &Matrix) -> Vec<usize> {
    points
        .rows_iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.rows_iter().enumerate() {
                let d = math::dist_sq(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Sets every centroid to the mean of its members. Empty clusters are
/// reseeded with the point currently farthest from its assigned centroid
/// (ties to the lowest row index); returns whether any reseeding happened.
fn update_centroids(points: &Matrix, assignments: &[usize], centroids: &mut Matrix) -> bool {
    let k = centroids.n_rows();
    let cols = centroids.n_cols();
    let mut sums = Matrix::zeros(k, cols);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        let row = sums.row_mut(a);
        for (s, v) in row.iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let row = sums.row_mut(c);
        for s in row.iter_mut() {
            *s /= counts[c] as f64;
        }
        centroids.row_mut(c).copy_from_slice(sums.row(c));
    }

    let mut repaired = false;
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        repaired = true;
        let mut far_row = 0usize;
        let mut far_d = -1.0;
        for (i, &a) in assignments.iter().enumerate() {
            // Do not strip the sole member of another cluster.
            if counts[a] <= 1 {
                continue;
            }
            let d = math::dist_sq(points.row(i), centroids.row(a));
            if d > far_d {
                far_d = d;
                far_row = i;
            }
        }
        centroids.row_mut(c).copy_from_slice(points.row(far_row));
    }
    repaired
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use alloc::vec;

    fn blob_points() -> Matrix {
        Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 10.0],
            vec![10.0, 11.0],
        ])
    }

    #[test]
    fn separates_two_well_spaced_blobs() {
        let mut stream = derive_stream(42, "phi");
        let r = kmeans(&blob_points(), 2, &mut stream).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);
    }

    #[test]
    fn k_one_returns_global_mean() {
        let mut stream = derive_stream(7, "phi");
        let r = kmeans(&blob_points(), 1, &mut stream).unwrap();
        assert_eq!(r.centroids.row(0), &[5.0, 5.5]);
        assert_eq!(r.assignments, vec![0, 0, 0, 0]);
    }

    #[test]
    fn rejects_more_clusters_than_points() {
        let mut stream = derive_stream(7, "phi");
        let err = kmeans(&blob_points(), 5, &mut stream).unwrap_err();
        assert_eq!(err, GenerationError::NotEnoughPoints { needed: 5, got: 4 });
    }

    /// Independent oracle: every returned assignment must be the nearest of
    /// the returned centroids, recomputed from scratch.
    #[test]
    fn assignments_match_nearest_centroid_oracle() {
        let mut data_stream = derive_stream(11, "data");
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![data_stream.standard_normal() * 3.0, data_stream.standard_normal() * 3.0])
            .collect();
        let points = Matrix::from_rows(&rows);
        let mut stream = derive_stream(11, "phi");
        let r = kmeans(&points, 3, &mut stream).unwrap();
        for (i, &a) in r.assignments.iter().enumerate() {
            let mine = math::dist_sq(points.row(i), r.centroids.row(a));
            for c in 0..3 {
                let other = math::dist_sq(points.row(i), r.centroids.row(c));
                assert!(
                    mine <= other + 1e-12,
                    "row {i} assigned to {a} but {c} is closer ({mine} vs {other})"
                );
            }
        }
    }

    /// Fixed-point oracle: recomputing member means reproduces the returned
    /// centroids.
    #[test]
    fn centroids_are_means_of_members() {
        let mut data_stream = derive_stream(13, "data");
        let rows: Vec<Vec<f64>> =
            (0..80).map(|_| vec![data_stream.standard_normal(), data_stream.standard_normal()]).collect();
        let points = Matrix::from_rows(&rows);
        let mut stream = derive_stream(13, "phi");
        let r = kmeans(&points, 4, &mut stream).unwrap();
        for c in 0..4 {
            let members: Vec<usize> =
                r.assignments.iter().enumerate().filter(|&(_, &a)| a == c).map(|(i, _)| i).collect();
            assert!(!members.is_empty());
            let mean = points.select_rows(&members).col_means();
            for (m, v) in mean.iter().zip(r.centroids.row(c)) {
                assert!((m - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_under_fixed_stream() {
        let points = blob_points();
        let a = kmeans(&points, 2, &mut derive_stream(5, "phi")).unwrap();
        let b = kmeans(&points, 2, &mut derive_stream(5, "phi")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_heavy_input_still_yields_nonempty_clusters() {
        let rows: Vec<Vec<f64>> =
            (0..10).map(|i| if i < 9 { vec![1.0, 1.0] } else { vec![5.0, 5.0] }).collect();
        let points = Matrix::from_rows(&rows);
        let r = kmeans(&points, 2, &mut derive_stream(3, "phi")).unwrap();
        let mut counts = [0usize; 2];
        for &a in &r.assignments {
            counts[a] += 1;
        }
        assert!(counts[0] > 0 && counts[1] > 0);
    }
}
