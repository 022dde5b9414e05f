//! Core engine for benchmarking anomaly detectors on concept-sequential
//! ("lifelong") scenarios.
//!
//! Any labeled anomaly-detection dataset can be turned into an ordered
//! sequence of *concepts*: pairings of a normal-behavior cluster with an
//! anomaly group, each split into train/eval partitions. Detectors are then
//! driven through a sequential train/evaluate protocol that fills an N×N
//! ROC-AUC result matrix, from which lifelong metrics (lifelong ROC-AUC,
//! backward transfer, forward transfer) are computed.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: every
//! randomized component draws from a labeled stream derived from a single
//! root seed, so reruns with identical inputs produce identical outputs.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`dataset`]: labeled feature matrices and the label-split convention
//! - [`rng`]: labeled deterministic random streams
//! - [`generation`]: clustering-based scenario construction and the
//!   synthetic fixture generator
//! - [`detect`]: five one-class detectors behind a single fit/score interface
//! - [`strategy`]: model-update policies (naive, per-concept experts, ...)
//! - [`eval`]: the sequential protocol, ROC-AUC, and lifelong metrics
//!
//! ```
//! use lad_core::detect::{DetectorConfig, DetectorKind, IForestParams};
//! use lad_core::eval::{run_protocol, summarize};
//! use lad_core::generation::{GenerationConfig, build_scenario, standardize, synth_dataset};
//! use lad_core::rng::derive_stream;
//! use lad_core::scenario::{Variant, Visibility};
//! use lad_core::strategy::{StrategyKind, build_strategy};
//!
//! // Three well-separated behaviors, each with its own anomalies.
//! let mut stream = derive_stream(42, "demo");
//! let raw = synth_dataset(3, 120, 12, 10.0, 2, &mut stream);
//! let (dataset, _) = standardize(&raw);
//!
//! let config = GenerationConfig {
//!     n_concepts: 3,
//!     variant: Variant::ClusteredClosest,
//!     seed: 42,
//!     ..GenerationConfig::default()
//! };
//! let scenario = build_scenario(&dataset, &config, Visibility::Aware)?;
//!
//! let detector = DetectorConfig::new(
//!     DetectorKind::IForest(IForestParams { trees: 25, subsample: 64 }),
//!     42,
//! );
//! let mut naive = build_strategy(StrategyKind::Naive, detector);
//! let matrix = run_protocol(&scenario, &dataset, naive.as_mut())?;
//! let summary = summarize(&matrix, None)?;
//!
//! // Refitting on each new concept forgets the earlier ones.
//! assert!(summary.bwt < 0.0);
//! assert!(summary.lifelong_roc_auc < summary.mean_diagonal_auc);
//! # Ok::<(), Box<dyn core::error::Error>>(())
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod detect;
pub mod eval;
pub mod generation;
mod math;
pub mod matrix;
pub mod rng;
pub mod scenario;
pub mod strategy;

pub use dataset::{DataError, Dataset, Provenance};
pub use detect::{Capability, Detector, DetectorConfig, DetectorError, DetectorKind};
pub use eval::{EvalError, MetricsSummary, ResultMatrix, roc_auc, run_protocol, summarize};
pub use generation::{GenerationConfig, GenerationError, build_scenario, standardize, synth_dataset};
pub use matrix::Matrix;
pub use rng::RngStream;
pub use scenario::{Concept, Scenario, ScenarioError, Variant, Visibility};
pub use strategy::{Strategy, StrategyError, StrategyKind, build_strategy};
