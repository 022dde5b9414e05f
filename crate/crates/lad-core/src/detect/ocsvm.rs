//! One-class SVM with an RBF kernel, solved in the nu-parameterized dual.
//!
//! Minimizes `1/2 a' K a` subject to `0 <= a_i <= 1/(nu n)` and
//! `sum a = 1`, by repeatedly moving mass between the maximal violating
//! pair of coordinates. The trained boundary yields the anomaly score
//! `rho - sum_i a_i k(x_i, x)`, positive outside the learned region.
//!
//! The full kernel matrix is materialized: concepts are small after
//! scenario splitting, so the O(n^2) memory is desk-scale.

use alloc::vec::Vec;

use crate::detect::DetectorError;
use crate::math;
use crate::matrix::Matrix;

const KKT_TOLERANCE: f64 = 1e-3;
const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    support_points: Matrix,
    support_alphas: Vec<f64>,
    rho: f64,
    gamma: f64,
    /// False when the step cap was hit before the KKT gap closed; the best
    /// iterate is kept either way.
    pub converged: bool,
    pub steps: usize,
}

impl OcsvmModel {
    pub fn input_dim(&self) -> usize {
        self.support_points.n_cols()
    }

    /// Trains on `data` with the given `nu` in (0, 1]. `gamma` defaults to
    /// `1 / (d * var)` over all feature entries when not supplied.
    pub fn fit(data: &Matrix, nu: f64, gamma: Option<f64>) -> Result<Self, DetectorError> {
        let n = data.n_rows();
        if n < 2 {
            return Err(DetectorError::NotEnoughTrainingRows { needed: 2, got: n });
        }
        let gamma = gamma.unwrap_or_else(|| default_gamma(data));
        let upper = 1.0 / (nu * n as f64);

        let mut kernel = alloc::vec![0.0; n * n];
        for i in 0..n {
            kernel[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let k = math::exp(-gamma * math::dist_sq(data.row(i), data.row(j)));
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }

        // Vertex start: fill coordinates up to the box bound until the
        // simplex constraint is met.
        let mut alpha = alloc::vec![0.0; n];
        let mut remaining = 1.0f64;
        for a in alpha.iter_mut() {
            let take = remaining.min(upper);
            *a = take;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }

        let mut gradient = alloc::vec![0.0; n];
        for i in 0..n {
            let mut g = 0.0;
            for j in 0..n {
                if alpha[j] > 0.0 {
                    g += kernel[i * n + j] * alpha[j];
                }
            }
            gradient[i] = g;
        }

        let mut converged = false;
        let mut steps = 0;
        while steps < MAX_STEPS {
            // Maximal violating pair: mass flows from the highest-gradient
            // coordinate that can shrink to the lowest-gradient coordinate
            // that can grow.
            let mut up: Option<usize> = None;
            let mut down: Option<usize> = None;
            for i in 0..n {
                if alpha[i] < upper && up.is_none_or(|u| gradient[i] < gradient[u]) {
                    up = Some(i);
                }
                if alpha[i] > 0.0 && down.is_none_or(|d| gradient[i] > gradient[d]) {
                    down = Some(i);
                }
            }
            let (Some(i), Some(j)) = (up, down) else { break };
            if gradient[j] - gradient[i] < KKT_TOLERANCE {
                converged = true;
                break;
            }

            let eta = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
            let unconstrained =
                if eta > 1e-12 { (gradient[j] - gradient[i]) / eta } else { f64::INFINITY };
            let step = unconstrained.min(upper - alpha[i]).min(alpha[j]);
            if step <= 0.0 {
                break;
            }
            alpha[i] += step;
            alpha[j] -= step;
            for t in 0..n {
                gradient[t] += step * (kernel[t * n + i] - kernel[t * n + j]);
            }
            steps += 1;
        }

        let rho = offset_from_kkt(&alpha, &gradient, upper);

        let support: Vec<usize> = (0..n).filter(|&i| alpha[i] > 1e-12).collect();
        let support_alphas: Vec<f64> = support.iter().map(|&i| alpha[i]).collect();
        let support_points = data.select_rows(&support);
        Ok(Self { support_points, support_alphas, rho, gamma, converged, steps })
    }

    /// Anomaly score `rho - sum_i a_i k(x_i, x)`; higher is more anomalous,
    /// positive means outside the learned boundary.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut decision = 0.0;
        for (point, &a) in self.support_points.rows_iter().zip(&self.support_alphas) {
            decision += a * math::exp(-self.gamma * math::dist_sq(point, x));
        }
        self.rho - decision
    }

    /// Sum of the dual coefficients (feasibility diagnostic; 1 at optimum).
    pub fn alpha_sum(&self) -> f64 {
        self.support_alphas.iter().sum()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.support_alphas
    }
}

fn default_gamma(data: &Matrix) -> f64 {
    let flat = data.as_slice();
    let n = flat.len() as f64;
    let mean = flat.iter().sum::<f64>() / n;
    let var = flat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let d = data.n_cols() as f64;
    if var > 1e-12 { 1.0 / (d * var) } else { 1.0 / d }
}

/// At optimality, free coordinates (0 < a < upper) share `gradient = rho`.
/// With no free coordinate, the KKT conditions still bracket rho between
/// the bound coordinates' gradients.
fn offset_from_kkt(alpha: &[f64], gradient: &[f64], upper: f64) -> f64 {
    let margin = 1e-8 * upper;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut upper_bound = f64::INFINITY;
    for (a, g) in alpha.iter().zip(gradient) {
        if *a > margin && *a < upper - margin {
            free_sum += g;
            free_count += 1;
        } else if *a >= upper - margin {
            lower_bound = lower_bound.max(*g);
        } else {
            upper_bound = upper_bound.min(*g);
        }
    }
    if free_count > 0 {
        return free_sum / free_count as f64;
    }
    match (lower_bound.is_finite(), upper_bound.is_finite()) {
        (true, true) => 0.5 * (lower_bound + upper_bound),
        (true, false) => lower_bound,
        (false, true) => upper_bound,
        (false, false) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use alloc::vec::Vec;

    fn gaussian_blob(seed: u64, n: usize) -> Matrix {
        let mut s = derive_stream(seed, "blob");
        Matrix::from_rows(
            &(0..n)
                .map(|_| alloc::vec![s.standard_normal(), s.standard_normal()])
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn nu_property_bounds_training_outlier_fraction() {
        let nu = 0.5;
        for seed in 0..5 {
            let data = gaussian_blob(seed, 200);
            let model = OcsvmModel::fit(&data, nu, None).unwrap();
            let outliers =
                data.rows_iter().filter(|r| model.score(r) > 0.0).count() as f64 / 200.0;
            assert!(outliers <= nu + 0.05, "seed {seed}: outlier fraction {outliers}");
        }
    }

    #[test]
    fn dual_feasibility_after_fit() {
        let data = gaussian_blob(3, 150);
        let model = OcsvmModel::fit(&data, 0.5, None).unwrap();
        assert!((model.alpha_sum() - 1.0).abs() < 1e-6);
        let upper = 1.0 / (0.5 * 150.0);
        for &a in model.alphas() {
            assert!(a >= -1e-12 && a <= upper + 1e-12);
        }
        assert!(model.converged);
    }

    #[test]
    fn blob_center_scores_below_far_point() {
        for seed in 0..5 {
            let data = gaussian_blob(seed + 10, 200);
            let model = OcsvmModel::fit(&data, 0.5, None).unwrap();
            assert!(model.score(&[0.0, 0.0]) < model.score(&[10.0, 10.0]), "seed {seed}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let data = gaussian_blob(4, 100);
        let a = OcsvmModel::fit(&data, 0.5, None).unwrap();
        let b = OcsvmModel::fit(&data, 0.5, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_single_row() {
        let data = Matrix::from_rows(&[alloc::vec![1.0, 2.0]]);
        assert!(matches!(
            OcsvmModel::fit(&data, 0.5, None),
            Err(DetectorError::NotEnoughTrainingRows { .. })
        ));
    }
}
