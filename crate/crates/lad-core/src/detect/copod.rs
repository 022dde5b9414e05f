//! Copula-style tail-probability detector.
//!
//! Each dimension contributes the negative log of an empirical tail
//! probability; the score is the worst of the left-tail, right-tail, and
//! skewness-corrected aggregates. Tail probabilities are floored at `1/n`
//! so values beyond the training range stay finite. All quantities are
//! rank-based, which makes scores invariant under per-dimension positive
//! affine transforms.

use alloc::vec::Vec;

use crate::detect::DetectorError;
use crate::math;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CopodModel {
    /// Sorted training values per dimension.
    sorted: Vec<Vec<f64>>,
    /// Sign of the sample skewness per dimension: -1, 0, or +1.
    skew_sign: Vec<i8>,
    n: usize,
}

impl CopodModel {
    pub fn input_dim(&self) -> usize {
        self.sorted.len()
    }

    pub fn fit(data: &Matrix) -> Result<Self, DetectorError> {
        let n = data.n_rows();
        if n < 2 {
            return Err(DetectorError::NotEnoughTrainingRows { needed: 2, got: n });
        }
        let d = data.n_cols();
        let mut sorted = Vec::with_capacity(d);
        let mut skew_sign = Vec::with_capacity(d);
        for j in 0..d {
            let mut column: Vec<f64> = data.rows_iter().map(|r| r[j]).collect();
            let mean = column.iter().sum::<f64>() / n as f64;
            let third_moment =
                column.iter().map(|v| (v - mean) * (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            skew_sign.push(if third_moment > 0.0 {
                1
            } else if third_moment < 0.0 {
                -1
            } else {
                0
            });
            column.sort_unstable_by(f64::total_cmp);
            sorted.push(column);
        }
        Ok(Self { sorted, skew_sign, n })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        let floor = 1.0 / n;
        let mut left_sum = 0.0;
        let mut right_sum = 0.0;
        let mut skew_sum = 0.0;
        for (j, column) in self.sorted.iter().enumerate() {
            let v = x[j];
            // Fraction of training values <= v.
            let le = column.partition_point(|&t| t <= v) as f64 / n;
            // Fraction of training values >= v.
            let ge = (self.n - column.partition_point(|&t| t < v)) as f64 / n;
            let p_left = le.max(floor);
            let p_right = ge.max(floor);
            let p_skew = if self.skew_sign[j] < 0 { p_left } else { p_right };
            left_sum += -math::ln(p_left);
            right_sum += -math::ln(p_right);
            skew_sum += -math::ln(p_skew);
        }
        left_sum.max(right_sum).max(skew_sum)
    }
}
