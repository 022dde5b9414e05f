//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, bail};

use lad_core::eval::{lifelong_roc_auc_alt_denominator, run_protocol, summarize};
use lad_core::generation::{build_scenario, standardize, synth_dataset};
use lad_core::rng::derive_stream;
use lad_core::strategy::{StrategyKind, build_strategy};

use crate::config::RunConfig;
use crate::csv_io::{load_csv, write_dataset_csv};
use crate::files::{
    METRICS_SCHEMA_VERSION, MetricsFile, PROVENANCE_SCHEMA_VERSION, ProvenanceFile, load_scenario,
    save_metrics, save_provenance, save_rmatrix, save_scenario,
};
use crate::report;

pub struct SynthArgs {
    pub out: PathBuf,
    pub concepts: usize,
    pub normals: usize,
    pub anomalies: usize,
    pub separation: f64,
    pub dims: usize,
    pub seed: u64,
}

/// Emits a synthetic blob dataset as CSV.
pub fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let mut stream = derive_stream(args.seed, "synth");
    let dataset = synth_dataset(
        args.concepts,
        args.normals,
        args.anomalies,
        args.separation,
        args.dims,
        &mut stream,
    );
    if let Some(parent) = args.out.parent()
        && !parent.as_os_str().is_empty()
    {
        fs::create_dir_all(parent)?;
    }
    write_dataset_csv(&dataset, &args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} ({} rows, {} anomalies, digest {})",
        args.out.display(),
        dataset.n_samples(),
        dataset.labels().iter().filter(|&&l| l == 1).count(),
        &dataset.digest()[..16],
    );
    Ok(())
}

/// Builds a scenario from the configured dataset and writes it (plus a
/// provenance record) to the output directory.
pub fn generate(config_path: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let config = RunConfig::load(config_path)?;
    let resolved = config.resolved();
    let out_dir = resolved.output_dir.clone();
    fs::create_dir_all(&out_dir)?;
    let scenario_path = out.map(Path::to_path_buf).unwrap_or_else(|| out_dir.join("scenario.json"));
    if let Some(parent) = scenario_path.parent()
        && !parent.as_os_str().is_empty()
    {
        fs::create_dir_all(parent)?;
    }

    let raw = load_csv(&resolved.dataset, resolved.root_seed)?;
    let (dataset, _) = standardize(&raw);
    let scenario = build_scenario(&dataset, &resolved.generation, resolved.visibility)?;
    save_scenario(&scenario, &scenario_path)?;

    let provenance = ProvenanceFile {
        schema_version: PROVENANCE_SCHEMA_VERSION,
        command: "generate".to_string(),
        root_seed: resolved.root_seed,
        config_digest: config.digest(),
        dataset_digest: dataset.digest().to_string(),
        outputs: vec![scenario_path.display().to_string()],
        config: serde_json::to_value(&resolved)?,
    };
    save_provenance(&provenance, &scenario_path.with_extension("provenance.json"))?;

    println!(
        "wrote {} ({} concepts, variant {}, visibility {})",
        scenario_path.display(),
        scenario.n_concepts(),
        scenario.variant.as_str(),
        scenario.visibility.as_str(),
    );
    Ok(())
}

/// Runs one (scenario, detector, strategy) triple and writes the R matrix,
/// metrics, and provenance.
pub fn run(config_path: &Path, scenario_path: &Path, out_dir: Option<&Path>) -> anyhow::Result<()> {
    let config = RunConfig::load(config_path)?;
    let resolved = config.resolved();
    let out_dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| resolved.output_dir.clone());
    fs::create_dir_all(&out_dir)?;

    let scenario = load_scenario(scenario_path)?;
    if scenario.visibility != resolved.visibility {
        bail!(
            "config visibility '{}' does not match the scenario's '{}'",
            resolved.visibility.as_str(),
            scenario.visibility.as_str()
        );
    }

    let raw = load_csv(&resolved.dataset, resolved.root_seed)?;
    let (dataset, _) = standardize(&raw);

    let mut strategy = build_strategy(resolved.strategy, resolved.detector.clone());
    let matrix = run_protocol(&scenario, &dataset, strategy.as_mut())?;

    // Expert runs report their own diagonal as the upper bound.
    let mste_matrix = (resolved.strategy == StrategyKind::Mste).then(|| matrix.clone());
    let summary = summarize(&matrix, mste_matrix.as_ref())?;
    let alt_denominator = resolved
        .alt_lifelong_denominator
        .then(|| lifelong_roc_auc_alt_denominator(&matrix))
        .transpose()?;

    let config_digest = config.digest();
    let rmatrix_path = out_dir.join("rmatrix.csv");
    save_rmatrix(&matrix, &rmatrix_path, resolved.root_seed, &config_digest, dataset.digest())?;

    let metrics = MetricsFile {
        schema_version: METRICS_SCHEMA_VERSION,
        dataset: resolved.dataset_name(),
        dataset_digest: dataset.digest().to_string(),
        variant: scenario.variant,
        visibility: scenario.visibility,
        detector: resolved.detector.kind.name().to_string(),
        strategy: resolved.strategy.as_str().to_string(),
        root_seed: resolved.root_seed,
        config_digest: config_digest.clone(),
        rmatrix: "rmatrix.csv".to_string(),
        summary,
        lifelong_roc_auc_alt_denominator: alt_denominator,
    };
    let metrics_path = out_dir.join("metrics.json");
    save_metrics(&metrics, &metrics_path)?;

    let provenance = ProvenanceFile {
        schema_version: PROVENANCE_SCHEMA_VERSION,
        command: "run".to_string(),
        root_seed: resolved.root_seed,
        config_digest,
        dataset_digest: dataset.digest().to_string(),
        outputs: vec![rmatrix_path.display().to_string(), metrics_path.display().to_string()],
        config: serde_json::to_value(&resolved)?,
    };
    save_provenance(&provenance, &out_dir.join("provenance.json"))?;

    let fwt = metrics.summary.fwt.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    println!(
        "wrote {} (lifelong ROC-AUC {:.4}, BWT {:.4}, FWT {fwt})",
        metrics_path.display(),
        metrics.summary.lifelong_roc_auc,
        metrics.summary.bwt,
    );
    Ok(())
}

/// Collects metrics files into a summary table and long-form heatmap data.
pub fn assemble_report(inputs: &[PathBuf], out_dir: &Path) -> anyhow::Result<()> {
    let paths = report::collect_metrics_paths(inputs)?;
    if paths.is_empty() {
        bail!("no metrics files found under the given inputs");
    }
    let runs = report::load_all(&paths)?;
    let rows = report::build_rows(&runs);

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.csv"), report::rows_to_csv(&rows, &runs))?;
    let table = report::rows_to_table(&rows, &runs);
    fs::write(out_dir.join("report.txt"), &table)?;
    fs::write(out_dir.join("heatmap.csv"), report::heatmap_csv(&paths, &runs)?)?;

    print!("{table}");
    println!("wrote {} rows from {} runs to {}", rows.len(), runs.len(), out_dir.display());
    Ok(())
}
