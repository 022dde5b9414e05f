//! Versioned on-disk formats: scenario files, R-matrix CSVs, metrics files,
//! and provenance records.
//!
//! All JSON is emitted pretty-printed with a fixed field order and no
//! timestamps, so identical runs produce byte-identical files.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{Context, bail};
use serde::{Deserialize, Serialize};

use lad_core::eval::{MetricsSummary, ResultMatrix};
use lad_core::scenario::{Concept, Scenario, Variant, Visibility};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const PROVENANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    dataset_digest: String,
    n_rows: usize,
    seed: u64,
    variant: Variant,
    visibility: Visibility,
    concepts: Vec<ConceptRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConceptRecord {
    id: usize,
    train_indices: Vec<usize>,
    eval_indices: Vec<usize>,
    anomaly_indices: Vec<usize>,
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> anyhow::Result<()> {
    let file = ScenarioFile {
        schema_version: SCENARIO_SCHEMA_VERSION,
        dataset_digest: scenario.dataset_digest.clone(),
        n_rows: scenario.n_rows,
        seed: scenario.seed,
        variant: scenario.variant,
        visibility: scenario.visibility,
        concepts: scenario
            .concepts
            .iter()
            .map(|c| ConceptRecord {
                id: c.id,
                train_indices: c.train_indices.clone(),
                eval_indices: c.eval_indices.clone(),
                anomaly_indices: c.anomaly_indices.clone(),
            })
            .collect(),
    };
    write_json(path, &file).with_context(|| format!("cannot write scenario {}", path.display()))
}

/// Loads and structurally validates a scenario file. The dataset digest is
/// only verified at run time, when a dataset is actually in hand.
pub fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse scenario {}", path.display()))?;
    if file.schema_version != SCENARIO_SCHEMA_VERSION {
        bail!(
            "scenario {} has schema version {}, expected {}",
            path.display(),
            file.schema_version,
            SCENARIO_SCHEMA_VERSION
        );
    }
    let concepts = file
        .concepts
        .into_iter()
        .map(|record| {
            // Normal rows are the training rows plus the non-anomalous eval
            // rows; the file stores only the partitions.
            let anomaly_set: BTreeSet<usize> = record.anomaly_indices.iter().copied().collect();
            let mut normal_indices: Vec<usize> = record
                .train_indices
                .iter()
                .chain(record.eval_indices.iter().filter(|r| !anomaly_set.contains(r)))
                .copied()
                .collect();
            normal_indices.sort_unstable();
            Concept {
                id: record.id,
                normal_indices,
                anomaly_indices: record.anomaly_indices,
                train_indices: record.train_indices,
                eval_indices: record.eval_indices,
            }
        })
        .collect();
    let scenario = Scenario {
        concepts,
        visibility: file.visibility,
        variant: file.variant,
        seed: file.seed,
        dataset_digest: file.dataset_digest,
        n_rows: file.n_rows,
    };
    scenario
        .validate()
        .with_context(|| format!("scenario {} is not internally consistent", path.display()))?;
    Ok(scenario)
}

/// Everything a metrics file records about one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub dataset: String,
    pub dataset_digest: String,
    pub variant: Variant,
    pub visibility: Visibility,
    pub detector: String,
    pub strategy: String,
    pub root_seed: u64,
    pub config_digest: String,
    /// Path of the R-matrix CSV, relative to this file.
    pub rmatrix: String,
    pub summary: MetricsSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lifelong_roc_auc_alt_denominator: Option<f64>,
}

pub fn save_metrics(metrics: &MetricsFile, path: &Path) -> anyhow::Result<()> {
    if metrics.schema_version != METRICS_SCHEMA_VERSION {
        bail!("metrics schema version must be {METRICS_SCHEMA_VERSION}");
    }
    write_json(path, metrics).with_context(|| format!("cannot write metrics {}", path.display()))
}

pub fn load_metrics(path: &Path) -> anyhow::Result<MetricsFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read metrics {}", path.display()))?;
    let metrics: MetricsFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse metrics {}", path.display()))?;
    if metrics.schema_version != METRICS_SCHEMA_VERSION {
        bail!(
            "metrics {} has schema version {}, expected {}",
            path.display(),
            metrics.schema_version,
            METRICS_SCHEMA_VERSION
        );
    }
    Ok(metrics)
}

/// Provenance record written next to every artifact a command produces.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProvenanceFile {
    pub schema_version: u32,
    pub command: String,
    pub root_seed: u64,
    pub config_digest: String,
    pub dataset_digest: String,
    pub outputs: Vec<String>,
    /// The fully resolved configuration the command actually used.
    pub config: serde_json::Value,
}

pub fn save_provenance(provenance: &ProvenanceFile, path: &Path) -> anyhow::Result<()> {
    write_json(path, provenance)
        .with_context(|| format!("cannot write provenance {}", path.display()))
}

/// R-matrix CSV: one `#` provenance comment line, a header (`step,c0,...`),
/// then one row per training step. Absent entries are empty fields.
pub fn save_rmatrix(
    matrix: &ResultMatrix,
    path: &Path,
    root_seed: u64,
    config_digest: &str,
    dataset_digest: &str,
) -> anyhow::Result<()> {
    let n = matrix.n_concepts();
    let mut out = String::new();
    out.push_str(&format!(
        "# root_seed={root_seed} config_digest={config_digest} dataset_digest={dataset_digest}\n"
    ));
    out.push_str("step");
    for j in 0..n {
        out.push_str(&format!(",c{j}"));
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&format!("c{i}"));
        for j in 0..n {
            match matrix.get(i, j) {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write R matrix {}", path.display()))
}

pub fn load_rmatrix(path: &Path) -> anyhow::Result<ResultMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read R matrix {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().with_context(|| format!("{} is empty", path.display()))?;
    let n = header.split(',').count() - 1;
    let mut matrix = ResultMatrix::new(n);
    for (i, line) in lines.enumerate() {
        for (j, cell) in line.split(',').skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let value: f64 = cell
                .parse()
                .with_context(|| format!("bad cell ({i}, {j}) in {}", path.display()))?;
            if !(0.0..=1.0).contains(&value) {
                bail!("cell ({i}, {j}) in {} is {value}, outside [0, 1]", path.display());
            }
            matrix.set(i, j, value);
        }
    }
    Ok(matrix)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
