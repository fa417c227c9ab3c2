//! CSV + metadata ingestion and round-trip.
//!
//! A dataset on disk is an RFC-4180 CSV with a header row plus a JSON
//! metadata file naming the target column and task. Metadata may also
//! carry per-feature origin tags (for augmented datasets), preprocessing
//! overrides, and the split seed, so a saved dataset reloads into the
//! same state.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, FeatureMeta, FeatureOrigin, Targets, Task};

/// Per-column preprocessing choice.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessMethod {
    Quantile,
    Standardize,
    None,
}

/// Which transform each feature gets; the default applies unless a
/// column is named in `overrides`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreprocessSpec {
    #[serde(default = "default_method")]
    pub default: PreprocessMethod,
    #[serde(default)]
    pub overrides: BTreeMap<String, PreprocessMethod>,
    /// Regression targets are standardized on train statistics unless
    /// this is set to false.
    #[serde(default = "default_true")]
    pub standardize_target: bool,
}

fn default_method() -> PreprocessMethod {
    PreprocessMethod::Quantile
}

fn default_true() -> bool {
    true
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            default: PreprocessMethod::Quantile,
            overrides: BTreeMap::new(),
            standardize_target: true,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TaskName {
    Regression,
    Classification,
}

/// Sidecar metadata for a dataset CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub target: String,
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origins: Option<Vec<FeatureOrigin>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PreprocessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

/// Task as written in metadata; class count comes from the data.
pub type TaskKind = String;

fn parse_task(meta: &DatasetMeta) -> Result<TaskName, DataError> {
    match meta.task.as_str() {
        "regression" => Ok(TaskName::Regression),
        "classification" => Ok(TaskName::Classification),
        other => Err(DataError::Metadata(format!(
            "task must be 'regression' or 'classification', got '{other}'"
        ))),
    }
}

/// Loads a dataset from `csv_path` with metadata at `meta_path`. Row
/// order is file order. Missing and non-numeric cells are rejected; for
/// classification the target must hold integer labels starting at 0.
pub fn load_csv(csv_path: &Path, meta_path: &Path) -> Result<Dataset, DataError> {
    let meta_text = fs::read_to_string(meta_path)?;
    let meta: DatasetMeta =
        serde_json::from_str(&meta_text).map_err(|e| DataError::Metadata(e.to_string()))?;
    let task_name = parse_task(&meta)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.clone()) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }
    let target_idx = headers
        .iter()
        .position(|h| *h == meta.target)
        .ok_or_else(|| DataError::MissingTarget(meta.target.clone()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_targets: Vec<f64> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (c, cell) in record.iter().enumerate() {
            let trimmed = cell.trim();
            if trimmed.is_empty() {
                return Err(DataError::MissingValue {
                    row: r,
                    column: headers[c].clone(),
                });
            }
            let value: f64 = trimmed.parse().map_err(|_| DataError::NonNumericCell {
                row: r,
                column: headers[c].clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonNumericCell {
                    row: r,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                });
            }
            if c == target_idx {
                raw_targets.push(value);
            } else {
                row.push(value);
            }
        }
        if row.len() != feature_names.len() {
            return Err(DataError::Length(format!(
                "row {r} has {} cells, expected {}",
                row.len() + 1,
                headers.len()
            )));
        }
        rows.push(row);
    }
    let n = rows.len();
    let m = feature_names.len();
    let mut x = Array2::zeros((n, m));
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            x[(r, c)] = v;
        }
    }

    let (y, task) = match task_name {
        TaskName::Regression => (Targets::Regression(raw_targets), Task::Regression),
        TaskName::Classification => {
            let mut labels = Vec::with_capacity(n);
            for (r, &v) in raw_targets.iter().enumerate() {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(DataError::BadLabel(format!(
                        "row {r}: '{v}' is not a non-negative integer"
                    )));
                }
                labels.push(v as usize);
            }
            let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
            if n_classes < 2 {
                return Err(DataError::BadLabel(
                    "classification needs at least 2 classes".into(),
                ));
            }
            (
                Targets::Classification(labels),
                Task::Classification { n_classes },
            )
        }
    };

    let origins = match &meta.origins {
        Some(tags) => {
            if tags.len() != m {
                return Err(DataError::Metadata(format!(
                    "{} origin tags for {m} feature columns",
                    tags.len()
                )));
            }
            tags.clone()
        }
        None => vec![FeatureOrigin::Original; m],
    };
    let features = feature_names
        .into_iter()
        .zip(origins)
        .map(|(name, origin)| FeatureMeta { name, origin })
        .collect();

    let mut ds = Dataset {
        x,
        y,
        task,
        features,
        target_name: meta.target.clone(),
        split: None,
        split_seed: None,
    };
    if let Some(seed) = meta.split_seed {
        ds.assign_split(seed)?;
    }
    Ok(ds)
}

/// Writes the dataset and its metadata. Feature origins and the split
/// seed round-trip through [`load_csv`].
pub fn save_csv(ds: &Dataset, csv_path: &Path, meta_path: &Path) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<String> = ds.features.iter().map(|f| f.name.clone()).collect();
    header.push(ds.target_name.clone());
    writer.write_record(&header)?;
    for r in 0..ds.n() {
        let mut record: Vec<String> = (0..ds.m_total())
            .map(|c| ds.x[(r, c)].to_string())
            .collect();
        record.push(match &ds.y {
            Targets::Regression(v) => v[r].to_string(),
            Targets::Classification(v) => v[r].to_string(),
        });
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let meta = DatasetMeta {
        target: ds.target_name.clone(),
        task: match ds.task {
            Task::Regression => "regression".into(),
            Task::Classification { .. } => "classification".into(),
        },
        origins: Some(ds.features.iter().map(|f| f.origin).collect()),
        preprocess: None,
        split_seed: ds.split_seed,
    };
    let text =
        serde_json::to_string_pretty(&meta).map_err(|e| DataError::Metadata(e.to_string()))?;
    fs::write(meta_path, text + "\n")?;
    Ok(())
}
