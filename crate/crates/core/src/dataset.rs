//! Columnar datasets with a designated protected attribute and target.
//!
//! A [`Dataset`] is a small column store: every column is `f64`-backed, but
//! columns declared [`ColumnKind::Binary`] are validated to contain only
//! 0.0 and 1.0. The protected attribute (PA) and the target must both be
//! binary. Convention throughout the crate: PA value 1 is the protected
//! group, PA value 0 is the baseline group whose conditional distributions
//! serve as the reference for the pre-processing transforms.
//!
//! Persistence is a plain CSV with a one-line header plus a JSON sidecar
//! carrying the column kinds and the PA/target roles, so a dataset round-
//! trips without guessing types from the data.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::jsonio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

/// Immutable columnar table; see module docs for conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    pa_column: String,
    target_column: String,
}

impl Dataset {
    /// Build a dataset, validating lengths, kinds, and the PA/target roles.
    pub fn new(columns: Vec<Column>, pa_column: &str, target_column: &str) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::SchemaMismatch("dataset has no columns".into()));
        }
        let n = columns[0].values.len();
        let mut seen = std::collections::BTreeSet::new();
        for col in &columns {
            if !seen.insert(col.name.clone()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate column name {:?}",
                    col.name
                )));
            }
            if col.values.len() != n {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} has {} rows, expected {}",
                    col.name,
                    col.values.len(),
                    n
                )));
            }
            for (row, &v) in col.values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: col.name.clone(),
                        detail: format!("non-finite value {v}"),
                    });
                }
                if col.kind == ColumnKind::Binary && v != 0.0 && v != 1.0 {
                    return Err(Error::Parse {
                        row,
                        column: col.name.clone(),
                        detail: format!("binary column holds {v}, expected 0 or 1"),
                    });
                }
            }
        }
        let ds = Dataset {
            columns,
            pa_column: pa_column.to_string(),
            target_column: target_column.to_string(),
        };
        for (role, name) in [("pa", pa_column), ("target", target_column)] {
            match ds.column(name) {
                None => {
                    return Err(Error::SchemaMismatch(format!(
                        "{role} column {name:?} not present"
                    )))
                }
                Some(c) if c.kind != ColumnKind::Binary => {
                    return Err(Error::SchemaMismatch(format!(
                        "{role} column {name:?} must be binary"
                    )))
                }
                _ => {}
            }
        }
        Ok(ds)
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].values.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Values of a named column, or a schema error naming the miss.
    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::SchemaMismatch(format!("no column named {name:?}")))
    }

    pub fn pa_name(&self) -> &str {
        &self.pa_column
    }

    pub fn target_name(&self) -> &str {
        &self.target_column
    }

    pub fn pa(&self) -> &[f64] {
        &self.column(&self.pa_column).expect("validated").values
    }

    pub fn target(&self) -> &[f64] {
        &self.column(&self.target_column).expect("validated").values
    }

    /// Names of feature columns: everything but the target, and optionally
    /// also excluding the PA column.
    pub fn feature_names(&self, include_pa: bool) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.name != self.target_column)
            .filter(|c| include_pa || c.name != self.pa_column)
            .map(|c| c.name.clone())
            .collect()
    }

    /// Row indices of the protected group (PA = 1) and baseline group (PA = 0).
    pub fn group_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let pa = self.pa();
        let mut protected = Vec::new();
        let mut baseline = Vec::new();
        for (i, &g) in pa.iter().enumerate() {
            if g == 1.0 {
                protected.push(i);
            } else {
                baseline.push(i);
            }
        }
        (protected, baseline)
    }

    /// New dataset containing the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind,
                values: idx.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        Dataset {
            columns,
            pa_column: self.pa_column.clone(),
            target_column: self.target_column.clone(),
        }
    }

    /// Replace one column's values (same kind, same length).
    pub fn with_values(&self, name: &str, values: Vec<f64>) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(Error::SchemaMismatch(format!(
                "replacement for {name:?} has {} rows, expected {}",
                values.len(),
                self.n_rows()
            )));
        }
        let mut out = self.clone();
        let col = out
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("no column named {name:?}")))?;
        col.values = values;
        // re-validate through the constructor so kind invariants still hold
        Dataset::new(out.columns, &out.pa_column, &out.target_column)
    }

    /// Stack two datasets with identical schema, `self` rows first.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if !self.schema_matches(other) {
            return Err(Error::SchemaMismatch(
                "cannot concatenate datasets with different schemas".into(),
            ));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| Column {
                name: a.name.clone(),
                kind: a.kind,
                values: a.values.iter().chain(&b.values).copied().collect(),
            })
            .collect();
        Ok(Dataset {
            columns,
            pa_column: self.pa_column.clone(),
            target_column: self.target_column.clone(),
        })
    }

    /// Same column names, kinds, order, and roles.
    pub fn schema_matches(&self, other: &Dataset) -> bool {
        self.pa_column == other.pa_column
            && self.target_column == other.target_column
            && self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }

    pub fn schema(&self) -> DatasetSchema {
        DatasetSchema {
            pa_column: self.pa_column.clone(),
            target_column: self.target_column.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| ColumnSchema {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
        }
    }
}

/// Sidecar schema stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub pa_column: String,
    pub target_column: String,
    pub columns: Vec<ColumnSchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

/// Conventional sidecar location for a dataset CSV: `data.csv` ->
/// `data.schema.json`.
pub fn sidecar_path(csv_path: impl AsRef<Path>) -> PathBuf {
    csv_path.as_ref().with_extension("schema.json")
}

/// Write the dataset as CSV plus its schema sidecar.
pub fn save_csv(ds: &Dataset, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    if let Some(dir) = csv_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let mut w = csv::Writer::from_path(csv_path).map_err(Error::from)?;
    let names: Vec<&str> = ds.columns().iter().map(|c| c.name.as_str()).collect();
    w.write_record(&names)?;
    let mut record = Vec::with_capacity(names.len());
    for row in 0..ds.n_rows() {
        record.clear();
        for col in ds.columns() {
            let v = col.values[row];
            // integral values (all binary columns, counts) print without ".0"
            if v == v.trunc() && v.abs() < 1e15 {
                record.push(format!("{}", v as i64));
            } else {
                record.push(format!("{v}"));
            }
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| io_err(csv_path, e))?;
    jsonio::write_json(sidecar_path(csv_path), &ds.schema())
}

/// Load a dataset from CSV given its schema sidecar.
pub fn load_csv(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
    let schema: DatasetSchema = jsonio::read_json(schema_path)?;
    let csv_path = csv_path.as_ref();
    let mut r = csv::Reader::from_path(csv_path).map_err(Error::from)?;
    let header = r.headers()?.clone();
    if header.len() != schema.columns.len() {
        return Err(Error::SchemaMismatch(format!(
            "csv has {} columns, sidecar declares {}",
            header.len(),
            schema.columns.len()
        )));
    }
    for (h, c) in header.iter().zip(&schema.columns) {
        if h != c.name {
            return Err(Error::SchemaMismatch(format!(
                "csv header {h:?} does not match sidecar column {:?}",
                c.name
            )));
        }
    }
    let mut columns: Vec<Column> = schema
        .columns
        .iter()
        .map(|c| Column {
            name: c.name.clone(),
            kind: c.kind,
            values: Vec::new(),
        })
        .collect();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                detail: format!("expected {} fields, got {}", columns.len(), record.len()),
            });
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                row,
                column: col.name.clone(),
                detail: format!("{e}: {field:?}"),
            })?;
            if col.kind == ColumnKind::Binary && v != 0.0 && v != 1.0 {
                return Err(Error::Parse {
                    row,
                    column: col.name.clone(),
                    detail: format!("binary column holds {field:?}, expected 0 or 1"),
                });
            }
            col.values.push(v);
        }
    }
    Dataset::new(columns, &schema.pa_column, &schema.target_column)
}

/// How to split a dataset into train and test partitions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Split into (train, test) by a seeded uniform permutation.
///
/// Train size is `round(train_fraction * n)`, clamped so both sides stay
/// non-empty; the partition is disjoint and exhaustive.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config {
            field: "train_fraction".into(),
            detail: format!("must be in (0,1), got {}", spec.train_fraction),
        });
    }
    let n = ds.n_rows();
    if n < 10 {
        return Err(Error::TooFewRows { rows: n, min: 10 });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    idx.shuffle(&mut rng);
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let train = ds.select_rows(&idx[..n_train]);
    let test = ds.select_rows(&idx[n_train..]);
    Ok((train, test))
}
