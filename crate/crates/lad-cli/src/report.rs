//! Report assembly over collected metrics files.
//!
//! A report is a pure function of the metrics files it reads: rows pair
//! each non-expert run's lifelong metrics with the expert upper bound of
//! the matching (dataset, variant, detector) run, in the familiar
//! "ROC-AUC (upper) / BWT / FWT" layout. Heatmap data is re-emitted from
//! the referenced R-matrix CSVs in long form for external plotting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::files::{MetricsFile, load_metrics, load_rmatrix};

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub detector: String,
    pub strategy: String,
    pub lifelong_roc_auc: f64,
    pub mste_upper: Option<f64>,
    pub bwt: f64,
    pub fwt: Option<f64>,
}

/// Collects every `*metrics.json` under the given files/directories.
pub fn collect_metrics_paths(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for input in inputs {
        walk(input, &mut found)?;
    }
    found.sort();
    found.dedup();
    Ok(found)
}

fn walk(path: &Path, found: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("cannot list {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for entry in entries {
            walk(&entry, found)?;
        }
    } else if path.file_name().is_some_and(|n| n.to_string_lossy().ends_with("metrics.json")) {
        found.push(path.to_path_buf());
    }
    Ok(())
}

/// Joins runs into table rows: every non-expert run becomes a row; the
/// expert (mste) run for the same dataset/variant/detector fills the upper
/// bound in parentheses.
pub fn build_rows(runs: &[MetricsFile]) -> Vec<ReportRow> {
    let mut upper_bounds: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for run in runs {
        if run.strategy == "mste"
            && let Some(upper) = run.summary.mste_upper_bound
        {
            upper_bounds
                .insert((run.dataset.clone(), run.variant.as_str().to_string(), run.detector.clone()), upper);
        }
    }
    let mut rows: Vec<ReportRow> = runs
        .iter()
        .filter(|run| run.strategy != "mste")
        .map(|run| {
            let key =
                (run.dataset.clone(), run.variant.as_str().to_string(), run.detector.clone());
            ReportRow {
                dataset: run.dataset.clone(),
                variant: run.variant.as_str().to_string(),
                detector: run.detector.clone(),
                strategy: run.strategy.clone(),
                lifelong_roc_auc: run.summary.lifelong_roc_auc,
                mste_upper: upper_bounds.get(&key).copied(),
                bwt: run.summary.bwt,
                fwt: run.summary.fwt,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.dataset, &a.variant, &a.detector, &a.strategy)
            .cmp(&(&b.dataset, &b.variant, &b.detector, &b.strategy))
    });
    rows
}

/// `#` comment line naming the runs a report was assembled from; their
/// config digests pin the exact configurations (seeds included).
pub fn sources_comment(runs: &[MetricsFile]) -> String {
    let digests: Vec<&str> = runs.iter().map(|r| &r.config_digest[..16.min(r.config_digest.len())]).collect();
    format!("# sources={} config_digests={}\n", runs.len(), digests.join(","))
}

pub fn rows_to_csv(rows: &[ReportRow], runs: &[MetricsFile]) -> String {
    let mut out = sources_comment(runs);
    out.push_str("dataset,variant,detector,strategy,roc_auc,mste_upper,bwt,fwt\n");
    for r in rows {
        let upper = r.mste_upper.map(|v| format!("{v:.4}")).unwrap_or_default();
        let fwt = r.fwt.map(|v| format!("{v:.4}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{},{:.4},{}",
            r.dataset, r.variant, r.detector, r.strategy, r.lifelong_roc_auc, upper, r.bwt, fwt
        );
    }
    out
}

pub fn rows_to_table(rows: &[ReportRow], runs: &[MetricsFile]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<7} {:<8} {:<11} {:>15} {:>7} {:>7}",
        "dataset", "variant", "detector", "strategy", "ROC-AUC (upper)", "BWT", "FWT"
    );
    let _ = writeln!(out, "{}", "-".repeat(76));
    for r in rows {
        let auc = match r.mste_upper {
            Some(upper) => format!("{:.2} ({upper:.2})", r.lifelong_roc_auc),
            None => format!("{:.2}", r.lifelong_roc_auc),
        };
        let fwt = r.fwt.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "{:<16} {:<7} {:<8} {:<11} {:>15} {:>7.2} {:>7}",
            r.dataset, r.variant, r.detector, r.strategy, auc, r.bwt, fwt
        );
    }
    out.push_str(&sources_comment(runs));
    out
}

/// Long-form heatmap data from every run's R matrix:
/// `dataset,variant,detector,strategy,step,concept,roc_auc`.
pub fn heatmap_csv(paths: &[PathBuf], runs: &[MetricsFile]) -> anyhow::Result<String> {
    let mut out = sources_comment(runs);
    out.push_str("dataset,variant,detector,strategy,step,concept,roc_auc\n");
    for (path, run) in paths.iter().zip(runs) {
        let rmatrix_path = path
            .parent()
            .map(|dir| dir.join(&run.rmatrix))
            .unwrap_or_else(|| PathBuf::from(&run.rmatrix));
        let matrix = load_rmatrix(&rmatrix_path)?;
        for i in 0..matrix.n_concepts() {
            for j in 0..matrix.n_concepts() {
                if let Some(v) = matrix.get(i, j) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{i},{j},{v}",
                        run.dataset,
                        run.variant.as_str(),
                        run.detector,
                        run.strategy
                    );
                }
            }
        }
    }
    Ok(out)
}

pub fn load_all(paths: &[PathBuf]) -> anyhow::Result<Vec<MetricsFile>> {
    paths.iter().map(|p| load_metrics(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lad_core::eval::MetricsSummary;
    use lad_core::scenario::{Variant, Visibility};

    fn run(strategy: &str, detector: &str, lifelong: f64, upper: Option<f64>) -> MetricsFile {
        MetricsFile {
            schema_version: 1,
            dataset: "synth".into(),
            dataset_digest: "d".into(),
            variant: Variant::ClusteredClosest,
            visibility: Visibility::Aware,
            detector: detector.into(),
            strategy: strategy.into(),
            root_seed: 0,
            config_digest: "c".into(),
            rmatrix: "rmatrix.csv".into(),
            summary: MetricsSummary {
                lifelong_roc_auc: lifelong,
                bwt: -0.2,
                fwt: Some(0.5),
                mean_diagonal_auc: 0.9,
                mste_upper_bound: upper,
                per_step_auc: vec![0.9],
            },
            lifelong_roc_auc_alt_denominator: None,
        }
    }

    #[test]
    fn expert_runs_fill_upper_bounds_instead_of_rows() {
        let runs = vec![
            run("naive", "iforest", 0.62, None),
            run("mste", "iforest", 0.97, Some(0.97)),
            run("naive", "lof", 0.55, None),
        ];
        let rows = build_rows(&runs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].detector, "iforest");
        assert_eq!(rows[0].mste_upper, Some(0.97));
        assert_eq!(rows[1].detector, "lof");
        assert_eq!(rows[1].mste_upper, None);
    }

    #[test]
    fn five_detectors_by_three_variants_yield_fifteen_rows() {
        let mut runs = Vec::new();
        for variant in [Variant::ClusteredClosest, Variant::ClusteredRandom, Variant::RandomRandom] {
            for detector in ["iforest", "lof", "copod", "ocsvm", "vae"] {
                let mut naive = run("naive", detector, 0.6, None);
                naive.variant = variant;
                runs.push(naive);
                let mut mste = run("mste", detector, 0.95, Some(0.95));
                mste.variant = variant;
                runs.push(mste);
            }
        }
        let rows = build_rows(&runs);
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().all(|r| r.mste_upper == Some(0.95)));
    }

    #[test]
    fn csv_and_table_render_missing_fields() {
        let runs = [run("naive", "copod", 0.71, None)];
        let rows = build_rows(&runs);
        let csv = rows_to_csv(&rows, &runs);
        assert!(csv.starts_with("# sources=1 config_digests=c\n"));
        assert!(csv.contains("synth,CC,copod,naive,0.7100,,-0.2000,0.5000"));
        let table = rows_to_table(&rows, &runs);
        assert!(table.contains("copod"));
    }
}
