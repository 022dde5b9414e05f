//! Sequential evaluation protocol and lifelong metrics.
//!
//! Training steps through the scenario's concepts in order. After every
//! update the strategy is evaluated on *every* concept's eval partition,
//! filling an N×N matrix `R` where `R[i][j]` is the ROC-AUC on concept j's
//! eval set after training step i. Entries below the diagonal measure
//! retention, entries above it measure transfer to not-yet-seen concepts.
//!
//! Metrics over `R`:
//!
//! - lifelong ROC-AUC: mean of all entries with `i >= j`. The mean is taken
//!   over the number of summed entries, `N(N+1)/2`, which keeps the value
//!   inside [0, 1]; [`lifelong_roc_auc_alt_denominator`] divides the same sum
//!   by `N(N-1)/2` instead, for comparison output only.
//! - backward transfer: mean over `i > j` of `R[i][j] - R[j][j]`. Negative
//!   values mean training on later concepts degraded earlier ones.
//! - forward transfer: mean of the strict upper triangle.

use alloc::vec::Vec;

use crate::dataset::{ANOMALY, Dataset};
use crate::scenario::{Scenario, ScenarioError, Visibility};
use crate::strategy::{Strategy, StrategyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("both score lists must be nonempty to compute ROC-AUC")]
    EmptyClass,
    #[error("result matrix entry ({i}, {j}) is absent but required")]
    MissingEntry { i: usize, j: usize },
    #[error("result matrix needs at least 2 concepts, got {0}")]
    TooFewConcepts(usize),
    #[error("result matrix entry ({i}, {j}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { i: usize, j: usize, value: f64 },
    #[error("strategy '{strategy}' requires concept identifiers but the scenario visibility is {visibility}")]
    VisibilityIncompatible { strategy: &'static str, visibility: &'static str },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("strategy failed at training step {step}: {source}")]
    UpdateFailed { step: usize, source: StrategyError },
    #[error("evaluation of concept {concept} after step {step} failed: {source}")]
    ScoreFailed { step: usize, concept: usize, source: StrategyError },
}

/// Probability that a random anomaly outscores a random normal, ties
/// counted as half wins (the rank-statistic form with average ranks, which
/// equals brute-force pair counting exactly).
pub fn roc_auc(normal_scores: &[f64], anomaly_scores: &[f64]) -> Result<f64, EvalError> {
    let n = normal_scores.len();
    let m = anomaly_scores.len();
    if n == 0 || m == 0 {
        return Err(EvalError::EmptyClass);
    }

    let mut scored: Vec<(f64, bool)> = Vec::with_capacity(n + m);
    scored.extend(normal_scores.iter().map(|&s| (s, false)));
    scored.extend(anomaly_scores.iter().map(|&s| (s, true)));
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Average ranks over tie groups, accumulating the anomaly rank sum.
    let total = n + m;
    let mut anomaly_rank_sum = 0.0;
    let mut start = 0usize;
    while start < total {
        let mut end = start + 1;
        while end < total && scored[end].0 == scored[start].0 {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let ties_anomalous = scored[start..end].iter().filter(|(_, a)| *a).count();
        anomaly_rank_sum += avg_rank * ties_anomalous as f64;
        start = end;
    }

    let u = anomaly_rank_sum - (m * (m + 1)) as f64 / 2.0;
    Ok(u / (n as f64 * m as f64))
}

/// The N×N protocol outcome. `None` marks an entry the strategy could not
/// produce (an expert router has no model for future concepts).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultMatrix {
    n: usize,
    values: Vec<Option<f64>>,
}

impl ResultMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, values: alloc::vec![None; n * n] }
    }

    pub fn n_concepts(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        self.values[i * self.n + j] = Some(value);
    }

    fn require(&self, i: usize, j: usize) -> Result<f64, EvalError> {
        let value = self.get(i, j).ok_or(EvalError::MissingEntry { i, j })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(EvalError::EntryOutOfRange { i, j, value });
        }
        Ok(value)
    }

    fn check_size(&self) -> Result<(), EvalError> {
        if self.n < 2 { Err(EvalError::TooFewConcepts(self.n)) } else { Ok(()) }
    }

    pub fn is_fully_filled(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Mean of all entries with `i >= j`, i.e. performance over every concept
/// seen so far, averaged across training steps.
pub fn lifelong_roc_auc(r: &ResultMatrix) -> Result<f64, EvalError> {
    let (sum, count) = lower_triangle_sum(r)?;
    Ok(sum / count as f64)
}

/// Same sum as [`lifelong_roc_auc`] but divided by `N(N-1)/2`. Can exceed 1;
/// provided for side-by-side comparison only.
pub fn lifelong_roc_auc_alt_denominator(r: &ResultMatrix) -> Result<f64, EvalError> {
    let n = r.n_concepts();
    let (sum, _) = lower_triangle_sum(r)?;
    Ok(sum / ((n * (n - 1)) as f64 / 2.0))
}

fn lower_triangle_sum(r: &ResultMatrix) -> Result<(f64, usize), EvalError> {
    r.check_size()?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..r.n_concepts() {
        for j in 0..=i {
            sum += r.require(i, j)?;
            count += 1;
        }
    }
    Ok((sum, count))
}

/// Mean change, over all pairs `i > j`, of performance on concept j after
/// step i relative to right after concept j was learned.
pub fn bwt(r: &ResultMatrix) -> Result<f64, EvalError> {
    r.check_size()?;
    let n = r.n_concepts();
    let mut sum = 0.0;
    for i in 1..n {
        for j in 0..i {
            sum += r.require(i, j)? - r.require(j, j)?;
        }
    }
    Ok(sum / ((n * (n - 1)) as f64 / 2.0))
}

/// Mean performance on concepts not yet trained on (strict upper triangle).
pub fn fwt(r: &ResultMatrix) -> Result<f64, EvalError> {
    r.check_size()?;
    let n = r.n_concepts();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += r.require(i, j)?;
        }
    }
    Ok(sum / ((n * (n - 1)) as f64 / 2.0))
}

/// Mean of the diagonal: performance on each concept right after learning
/// it.
pub fn mean_diagonal_auc(r: &ResultMatrix) -> Result<f64, EvalError> {
    r.check_size()?;
    let mut sum = 0.0;
    for i in 0..r.n_concepts() {
        sum += r.require(i, i)?;
    }
    Ok(sum / r.n_concepts() as f64)
}

/// The metric bundle reported for one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsSummary {
    pub lifelong_roc_auc: f64,
    pub bwt: f64,
    /// Absent when the strategy cannot score future concepts.
    pub fwt: Option<f64>,
    pub mean_diagonal_auc: f64,
    /// Mean diagonal of a matching expert-per-concept run, when available.
    pub mste_upper_bound: Option<f64>,
    /// `per_step_auc[i]` = mean AUC over concepts 0..=i after step i.
    pub per_step_auc: Vec<f64>,
}

/// Bundles the lifelong metrics of `r`. When `mste_r` is given, its mean
/// diagonal is reported as the upper bound. Forward transfer is omitted
/// when the upper triangle has gaps.
pub fn summarize(r: &ResultMatrix, mste_r: Option<&ResultMatrix>) -> Result<MetricsSummary, EvalError> {
    let n = r.n_concepts();
    let mut per_step = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..=i {
            sum += r.require(i, j)?;
        }
        per_step.push(sum / (i + 1) as f64);
    }
    let fwt_value = match fwt(r) {
        Ok(v) => Some(v),
        Err(EvalError::MissingEntry { .. }) => None,
        Err(e) => return Err(e),
    };
    let mste_upper_bound = match mste_r {
        Some(m) => Some(mean_diagonal_auc(m)?),
        None => None,
    };
    Ok(MetricsSummary {
        lifelong_roc_auc: lifelong_roc_auc(r)?,
        bwt: bwt(r)?,
        fwt: fwt_value,
        mean_diagonal_auc: mean_diagonal_auc(r)?,
        mste_upper_bound,
        per_step_auc: per_step,
    })
}

/// Drives the strategy through the scenario: for each concept in order,
/// update on its training rows, then evaluate on every concept's eval rows
/// the strategy can serve.
///
/// The scenario must bind to `dataset` (digest match), and strategies that
/// need concept identifiers only run under concept-aware visibility.
/// Identifiers are withheld from the strategy in the other modes.
pub fn run_protocol(
    scenario: &Scenario,
    dataset: &Dataset,
    strategy: &mut dyn Strategy,
) -> Result<ResultMatrix, EvalError> {
    scenario.bind_check(dataset)?;
    let aware = scenario.visibility == Visibility::Aware;
    if strategy.requires_concept_ids() && !aware {
        return Err(EvalError::VisibilityIncompatible {
            strategy: strategy.name(),
            visibility: scenario.visibility.as_str(),
        });
    }

    let n = scenario.n_concepts();
    let mut matrix = ResultMatrix::new(n);
    for (step, concept) in scenario.concepts.iter().enumerate() {
        let train = dataset.features().select_rows(&concept.train_indices);
        let train_id = aware.then_some(concept.id);
        strategy
            .update(train_id, &train)
            .map_err(|source| EvalError::UpdateFailed { step, source })?;

        for target in &scenario.concepts {
            let eval_id = aware.then_some(target.id);
            if !strategy.can_score(eval_id) {
                continue;
            }
            let mut normal_scores = Vec::new();
            let mut anomaly_scores = Vec::new();
            for &row in &target.eval_indices {
                let score = strategy.score(eval_id, dataset.features().row(row)).map_err(
                    |source| EvalError::ScoreFailed { step, concept: target.id, source },
                )?;
                if dataset.label(row) == ANOMALY {
                    anomaly_scores.push(score);
                } else {
                    normal_scores.push(score);
                }
            }
            matrix.set(step, target.id, roc_auc(&normal_scores, &anomaly_scores)?);
        }
    }
    Ok(matrix)
}
