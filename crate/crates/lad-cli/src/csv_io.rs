//! CSV dataset ingestion and emission.
//!
//! Ingestion parses numeric columns as reals, one-hot encodes declared
//! categorical columns (categories ordered lexicographically, indicator
//! columns named `column=value`), maps the label column to 0/1 through the
//! configured value lists, and hands the result to the core dataset
//! constructor, which computes the content digest over the post-encoding
//! bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lad_core::dataset::{DataError, Dataset};
use lad_core::matrix::Matrix;
use lad_core::rng::derive_stream;

use crate::config::DatasetConfig;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("column '{0}' declared in the config does not exist in the file")]
    MissingColumn(String),
    #[error("cell '{value}' at row {row}, column '{column}' is not a number")]
    BadNumericCell { row: usize, column: String, value: String },
    #[error("cell at row {row}, column '{column}' is not finite")]
    NonFiniteCell { row: usize, column: String },
    #[error("label '{value}' at row {row} maps to neither class; declare it in normal_labels or anomaly_labels")]
    UnmappedLabel { row: usize, value: String },
    #[error("file has a header but no data rows")]
    Empty,
    #[error("log1p of {value} at row {row}, column '{column}' is undefined (needs values > -1)")]
    BadLogTransform { row: usize, column: String, value: f64 },
    #[error("clip_quantiles must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")]
    BadClipQuantiles { lo: f64, hi: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Loads a labeled dataset per the config. `root_seed` drives the optional
/// deterministic row subsample.
pub fn load_csv(config: &DatasetConfig, root_seed: u64) -> Result<Dataset, LoadError> {
    let path = &config.path;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?
        .iter()
        .map(str::to_string)
        .collect();

    let column_index = |name: &str| -> Result<usize, LoadError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LoadError::MissingColumn(name.to_string()))
    };
    let label_idx = column_index(&config.label_column)?;
    for name in config
        .categorical_columns
        .iter()
        .chain(&config.drop_columns)
        .chain(&config.log1p_columns)
    {
        column_index(name)?;
    }
    if let Some((lo, hi)) = config.clip_quantiles
        && !(0.0 <= lo && lo < hi && hi <= 1.0)
    {
        return Err(LoadError::BadClipQuantiles { lo, hi });
    }

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        records
            .push(record.map_err(|source| LoadError::Io { path: path.display().to_string(), source })?);
    }
    if records.is_empty() {
        return Err(LoadError::Empty);
    }

    // Deterministic subsample, keeping original row order.
    if let Some(max) = config.max_rows
        && records.len() > max
    {
        let mut stream = derive_stream(root_seed, "ingest-subsample");
        let mut keep = stream.sample_indices(records.len(), max);
        keep.sort_unstable();
        records = keep.into_iter().map(|i| records[i].clone()).collect();
    }

    // Column roles, in original header order.
    enum Role {
        Numeric,
        Categorical,
        Skip,
    }
    let roles: Vec<Role> = headers
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            if idx == label_idx || config.drop_columns.contains(name) {
                Role::Skip
            } else if config.categorical_columns.contains(name) {
                Role::Categorical
            } else {
                Role::Numeric
            }
        })
        .collect();

    // Category inventories (lexicographic by BTreeSet order). Categories
    // below the row-count floor collapse into one trailing bucket.
    struct Categories {
        kept: Vec<String>,
        has_other: bool,
    }
    let mut categories: Vec<Option<Categories>> = headers.iter().map(|_| None).collect();
    for (idx, role) in roles.iter().enumerate() {
        if matches!(role, Role::Categorical) {
            let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
            for record in &records {
                *counts.entry(record.get(idx).unwrap_or("").to_string()).or_default() += 1;
            }
            let total = counts.len();
            let kept: Vec<String> = counts
                .into_iter()
                .filter(|&(_, count)| count >= config.min_category_rows.max(1))
                .map(|(value, _)| value)
                .collect();
            let has_other = kept.len() < total;
            categories[idx] = Some(Categories { kept, has_other });
        }
    }

    let mut feature_names: Vec<String> = Vec::new();
    for (idx, role) in roles.iter().enumerate() {
        match role {
            Role::Numeric => feature_names.push(headers[idx].clone()),
            Role::Categorical => {
                let cats = categories[idx].as_ref().unwrap();
                for value in &cats.kept {
                    feature_names.push(format!("{}={}", headers[idx], value));
                }
                if cats.has_other {
                    feature_names.push(format!("{}=<other>", headers[idx]));
                }
            }
            Role::Skip => {}
        }
    }

    let anomaly_labels = config.anomaly_labels.as_deref();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    let mut labels: Vec<u8> = Vec::with_capacity(records.len());
    for (row_number, record) in records.iter().enumerate() {
        // Report positions as 1-based data rows, matching what a user sees
        // in a spreadsheet minus the header.
        let row = row_number + 1;
        let mut encoded: Vec<f64> = Vec::with_capacity(feature_names.len());
        for (idx, role) in roles.iter().enumerate() {
            let cell = record.get(idx).unwrap_or("");
            match role {
                Role::Numeric => {
                    let mut value: f64 = cell.parse().map_err(|_| LoadError::BadNumericCell {
                        row,
                        column: headers[idx].clone(),
                        value: cell.to_string(),
                    })?;
                    if !value.is_finite() {
                        return Err(LoadError::NonFiniteCell { row, column: headers[idx].clone() });
                    }
                    if config.log1p_columns.contains(&headers[idx]) {
                        if value <= -1.0 {
                            return Err(LoadError::BadLogTransform {
                                row,
                                column: headers[idx].clone(),
                                value,
                            });
                        }
                        value = value.ln_1p();
                    }
                    encoded.push(value);
                }
                Role::Categorical => {
                    let cats = categories[idx].as_ref().unwrap();
                    let mut matched = false;
                    for value in &cats.kept {
                        let hit = cell == value;
                        matched |= hit;
                        encoded.push(if hit { 1.0 } else { 0.0 });
                    }
                    if cats.has_other {
                        encoded.push(if matched { 0.0 } else { 1.0 });
                    }
                }
                Role::Skip => {}
            }
        }
        rows.push(encoded);

        let label_value = record.get(label_idx).unwrap_or("");
        let label = if config.normal_labels.iter().any(|v| v == label_value) {
            0u8
        } else {
            match anomaly_labels {
                Some(list) if !list.iter().any(|v| v == label_value) => {
                    return Err(LoadError::UnmappedLabel { row, value: label_value.to_string() });
                }
                _ => 1u8,
            }
        };
        labels.push(label);
    }

    if let Some((lo_q, hi_q)) = config.clip_quantiles {
        clip_columns(&mut rows, lo_q, hi_q);
    }

    Ok(Dataset::new(
        Matrix::from_rows(&rows),
        labels,
        feature_names,
        path.display().to_string(),
    )?)
}

/// Clamps every column to its `[lo_q, hi_q]` quantiles (nearest-rank).
fn clip_columns(rows: &mut [Vec<f64>], lo_q: f64, hi_q: f64) {
    let n = rows.len();
    if n == 0 {
        return;
    }
    let d = rows[0].len();
    let rank = |q: f64| -> usize { (q * (n - 1) as f64).round() as usize };
    let mut column = vec![0.0f64; n];
    for j in 0..d {
        for (i, row) in rows.iter().enumerate() {
            column[i] = row[j];
        }
        column.sort_unstable_by(f64::total_cmp);
        let lo = column[rank(lo_q)];
        let hi = column[rank(hi_q)];
        for row in rows.iter_mut() {
            row[j] = row[j].clamp(lo, hi);
        }
    }
}

/// Writes a dataset as CSV with a header row; floats use the shortest
/// representation that round-trips, so reloading reproduces the exact
/// content digest.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    for name in dataset.feature_names() {
        write!(out, "{name},")?;
    }
    writeln!(out, "label")?;
    for (row, &label) in dataset.features().rows_iter().zip(dataset.labels()) {
        for value in row {
            write!(out, "{value},")?;
        }
        writeln!(out, "{label}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lad_core::generation::synth_dataset;
    use std::path::PathBuf;

    fn write_temp(name: &str, contents: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!("lad-csv-{}-{name}", std::process::id()));
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn base_config(path: PathBuf) -> DatasetConfig {
        DatasetConfig {
            path,
            label_column: "label".to_string(),
            normal_labels: vec!["normal".to_string()],
            anomaly_labels: Some(vec!["anomaly".to_string()]),
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn maps_declared_labels() {
        let path = write_temp("labels.csv", "x,label\n1.0,normal\n2.0,anomaly\n3.0,normal\n");
        let mapped = load_csv(&base_config(path), 0).unwrap();
        assert_eq!(mapped.labels(), &[0, 1, 0]);
    }

    #[test]
    fn one_hot_encodes_categoricals_lexicographically() {
        let path = write_temp(
            "cats.csv",
            "proto,x,label\nudp,1.0,normal\ntcp,2.0,anomaly\ntcp,3.0,normal\n",
        );
        let mut config = base_config(path);
        config.categorical_columns = vec!["proto".to_string()];
        let ds = load_csv(&config, 0).unwrap();
        assert_eq!(ds.feature_names(), &["proto=tcp", "proto=udp", "x"]);
        assert_eq!(ds.features().row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(ds.features().row(1), &[1.0, 0.0, 2.0]);
    }

    #[test]
    fn bad_numeric_cell_names_row_and_column() {
        let path = write_temp("bad.csv", "x,label\n1.0,normal\nabc,anomaly\n");
        let err = load_csv(&base_config(path), 0).unwrap_err();
        match err {
            LoadError::BadNumericCell { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "x", "abc"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unmapped_label_is_rejected_when_anomaly_list_is_explicit() {
        let path = write_temp("unmapped.csv", "x,label\n1.0,normal\n2.0,weird\n");
        let err = load_csv(&base_config(path), 0).unwrap_err();
        assert!(matches!(err, LoadError::UnmappedLabel { row: 2, .. }));
    }

    #[test]
    fn complement_mapping_accepts_any_non_normal_value() {
        let path = write_temp("complement.csv", "x,label\n1.0,normal\n2.0,dos\n3.0,probe\n");
        let mut config = base_config(path);
        config.anomaly_labels = None;
        let ds = load_csv(&config, 0).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 1]);
    }

    #[test]
    fn missing_declared_column_is_rejected() {
        let path = write_temp("missing.csv", "x,label\n1.0,normal\n2.0,anomaly\n");
        let mut config = base_config(path);
        config.categorical_columns = vec!["proto".to_string()];
        assert!(matches!(load_csv(&config, 0), Err(LoadError::MissingColumn(c)) if c == "proto"));
    }

    #[test]
    fn max_rows_subsamples_deterministically() {
        let mut body = String::from("x,label\n");
        for i in 0..100 {
            body.push_str(&format!("{i}.0,{}\n", if i % 10 == 0 { "anomaly" } else { "normal" }));
        }
        let path = write_temp("subsample.csv", &body);
        let mut config = base_config(path);
        config.max_rows = Some(40);
        let a = load_csv(&config, 7).unwrap();
        let b = load_csv(&config, 7).unwrap();
        assert_eq!(a.n_samples(), 40);
        assert_eq!(a.digest(), b.digest());
        let c = load_csv(&config, 8).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn rare_categories_collapse_into_other_bucket() {
        let mut body = String::from("proto,label\n");
        for i in 0..30 {
            let proto = match i {
                0 => "rare1",
                1 => "rare2",
                _ if i % 2 == 0 => "tcp",
                _ => "udp",
            };
            body.push_str(&format!("{proto},{}\n", if i % 5 == 0 { "anomaly" } else { "normal" }));
        }
        let path = write_temp("bucket.csv", &body);
        let mut config = base_config(path);
        config.categorical_columns = vec!["proto".to_string()];
        config.min_category_rows = 5;
        let ds = load_csv(&config, 0).unwrap();
        assert_eq!(ds.feature_names(), &["proto=tcp", "proto=udp", "proto=<other>"]);
        assert_eq!(ds.features().row(0), &[0.0, 0.0, 1.0]);
        assert_eq!(ds.features().row(2), &[1.0, 0.0, 0.0]);
        assert_eq!(ds.features().row(3), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn log1p_transforms_declared_columns() {
        let path = write_temp("log1p.csv", "x,y,label\n0.0,5.0,normal\n99.0,5.0,anomaly\n");
        let mut config = base_config(path);
        config.log1p_columns = vec!["x".to_string()];
        let ds = load_csv(&config, 0).unwrap();
        assert_eq!(ds.features().get(0, 0), 0.0);
        assert!((ds.features().get(1, 0) - 100.0f64.ln()).abs() < 1e-15);
        assert_eq!(ds.features().get(0, 1), 5.0);
    }

    #[test]
    fn log1p_rejects_out_of_domain_values() {
        let path = write_temp("log1p-bad.csv", "x,label\n-2.0,normal\n1.0,anomaly\n");
        let mut config = base_config(path);
        config.log1p_columns = vec!["x".to_string()];
        assert!(matches!(load_csv(&config, 0), Err(LoadError::BadLogTransform { row: 1, .. })));
    }

    #[test]
    fn quantile_clipping_caps_outliers_and_flattens_rare_indicators() {
        let mut body = String::from("x,rare,label\n");
        for i in 0..200 {
            let rare = if i == 7 { 1 } else { 0 };
            let x = if i == 9 { 1e9 } else { i as f64 };
            body.push_str(&format!("{x},{rare},{}\n", if i % 20 == 0 { "anomaly" } else { "normal" }));
        }
        let path = write_temp("clip.csv", &body);
        let mut config = base_config(path);
        config.clip_quantiles = Some((0.01, 0.99));
        let ds = load_csv(&config, 0).unwrap();
        let x_max = (0..200).map(|i| ds.features().get(i, 0)).fold(f64::MIN, f64::max);
        assert!(x_max < 1000.0, "outlier survived clipping: {x_max}");
        // The one-in-200 indicator clamps to a constant zero column.
        let rare_max = (0..200).map(|i| ds.features().get(i, 1)).fold(f64::MIN, f64::max);
        assert_eq!(rare_max, 0.0);
    }

    #[test]
    fn invalid_clip_quantiles_are_rejected() {
        let path = write_temp("clipbad.csv", "x,label\n1.0,normal\n2.0,anomaly\n");
        let mut config = base_config(path);
        config.clip_quantiles = Some((0.9, 0.1));
        assert!(matches!(load_csv(&config, 0), Err(LoadError::BadClipQuantiles { .. })));
    }

    #[test]
    fn synth_round_trips_through_csv_with_identical_digest() {
        let mut stream = derive_stream(3, "synth");
        let ds = synth_dataset(2, 40, 8, 9.0, 3, &mut stream);
        let path = std::env::temp_dir().join(format!("lad-roundtrip-{}.csv", std::process::id()));
        write_dataset_csv(&ds, &path).unwrap();
        let config = DatasetConfig {
            path: path.clone(),
            label_column: "label".to_string(),
            normal_labels: vec!["0".to_string()],
            anomaly_labels: Some(vec!["1".to_string()]),
            ..DatasetConfig::default()
        };
        let reloaded = load_csv(&config, 0).unwrap();
        assert_eq!(ds.digest(), reloaded.digest());
        assert_eq!(ds.features(), reloaded.features());
    }
}
