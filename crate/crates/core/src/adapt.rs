//! Quantile adaptation of non-baseline rows onto the baseline group,
//! stratified by discretized parent values.
//!
//! For every column downstream of the protected attribute, the training
//! split is partitioned into strata over the column's other parents
//! (continuous parents are cut at pooled-sample quantiles, binary parents
//! keep their two levels). Within each stratum the per-group empirical
//! distributions are stored. A non-baseline row is then moved to the value
//! the baseline group holds at the same conditional rank: the rank is read
//! in the row's original stratum under the non-baseline distribution and
//! cashed out in the stratum formed by its already-adapted parents under
//! the baseline distribution. Binary columns translate ranks through a
//! randomized probability-integral coupling on the stratum rates.
//!
//! Strata unseen at fit time borrow the nearest populated stratum (smallest
//! L1 distance over bin indices, ties to the lexicographically smallest
//! index vector); such borrowings are counted and logged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjacency::AdjacencyInfo;
use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::seeding::{mix_seed, unit_from_seed};
use crate::stats::{ecdf_mid_rank, mean, quantile_sorted, rank_to_value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptOptions {
    /// Protected-attribute level whose rows stay untouched (0.0 or 1.0).
    pub baseline: f64,
    /// Number of quantile bins used to discretize continuous parents.
    pub bins: usize,
    /// Seeds the per-row coupling draws used for binary columns.
    pub seed: u64,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions { baseline: 0.0, bins: 10, seed: 0 }
    }
}

impl AdaptOptions {
    pub fn validate(&self) -> Result<()> {
        if self.baseline != 0.0 && self.baseline != 1.0 {
            return Err(Error::Config {
                field: "baseline".into(),
                detail: format!("must be 0 or 1, got {}", self.baseline),
            });
        }
        if self.bins < 2 {
            return Err(Error::Config {
                field: "bins".into(),
                detail: format!("must be at least 2, got {}", self.bins),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ParentBinning {
    /// Bin index is the value itself (0 or 1).
    Binary,
    /// Interior cut points from the pooled training sample; bin index is
    /// the number of cut points at or below the value.
    Quantile { edges: Vec<f64> },
}

fn bin_index(binning: &ParentBinning, v: f64) -> usize {
    match binning {
        ParentBinning::Binary => usize::from(v == 1.0),
        ParentBinning::Quantile { edges } => edges.partition_point(|e| *e <= v),
    }
}

fn stratum_key(binnings: &[ParentBinning], values: &[f64]) -> String {
    let parts: Vec<String> = binnings
        .iter()
        .zip(values)
        .map(|(b, &v)| bin_index(b, v).to_string())
        .collect();
    parts.join("|")
}

fn parse_key(key: &str) -> Vec<u64> {
    if key.is_empty() {
        return Vec::new();
    }
    key.split('|').map(|p| p.parse().expect("keys are bin indices")).collect()
}

/// Populated stratum for `key`, falling back to the nearest populated one.
fn stratum<'t>(
    table: &'t BTreeMap<String, Vec<f64>>,
    key: &str,
    fallbacks: &mut usize,
) -> &'t [f64] {
    if let Some(values) = table.get(key) {
        return values;
    }
    *fallbacks += 1;
    let want = parse_key(key);
    let best = table
        .iter()
        .map(|(k, v)| {
            let got = parse_key(k);
            let dist: u64 = want.iter().zip(&got).map(|(a, b)| a.abs_diff(*b)).sum();
            (dist, got, v)
        })
        .min_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)))
        .expect("fitted tables hold at least one stratum");
    best.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeAdapt {
    name: String,
    /// Stratifying features: the node's parents minus the protected attribute.
    parents: Vec<String>,
    binnings: Vec<ParentBinning>,
    binary: bool,
    /// Sorted in-stratum training values of the group being rewritten ...
    source: BTreeMap<String, Vec<f64>>,
    /// ... and of the baseline group supplying the target distribution.
    reference: BTreeMap<String, Vec<f64>>,
}

/// Fitted adaptation: per-column stratified empirical distributions, in
/// topological order so parents are rewritten before their children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptModel {
    baseline: f64,
    bins: usize,
    seed: u64,
    pa_column: String,
    nodes: Vec<NodeAdapt>,
}

impl AdaptModel {
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Names of the columns this model rewrites, in application order.
    pub fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }
}

fn role_rows(data: &Dataset, baseline: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    let pa = data.pa();
    let source: Vec<usize> = (0..data.n_rows()).filter(|&i| pa[i] != baseline).collect();
    let reference: Vec<usize> = (0..data.n_rows()).filter(|&i| pa[i] == baseline).collect();
    if source.is_empty() {
        return Err(Error::DegenerateGroup("source group has no rows".into()));
    }
    if reference.is_empty() {
        return Err(Error::DegenerateGroup("baseline group has no rows".into()));
    }
    Ok((source, reference))
}

/// Fit stratified per-group empirical distributions for every column
/// downstream of the protected attribute in `dag`.
pub fn adapt_fit(train: &Dataset, dag: &AdjacencyInfo, opts: &AdaptOptions) -> Result<AdaptModel> {
    opts.validate()?;
    if dag.pa() != train.pa_name() {
        return Err(Error::SchemaMismatch(format!(
            "graph treats {:?} as the protected attribute but the dataset uses {:?}",
            dag.pa(),
            train.pa_name()
        )));
    }
    let (source_rows, reference_rows) = role_rows(train, opts.baseline)?;

    let mut nodes = Vec::new();
    for name in dag.ordered_descendants() {
        let col = train.values(&name)?;
        let kind = train.column(&name).expect("values() checked existence").kind;
        let parents = dag.non_pa_parents(&name);
        let parent_cols: Vec<&[f64]> =
            parents.iter().map(|p| train.values(p)).collect::<Result<_>>()?;
        let binnings: Vec<ParentBinning> = parents
            .iter()
            .map(|p| {
                let c = train.column(p).expect("values() checked existence");
                match c.kind {
                    ColumnKind::Binary => ParentBinning::Binary,
                    ColumnKind::Numeric => {
                        let mut pooled = c.values.clone();
                        pooled.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                        let mut edges: Vec<f64> = (1..opts.bins)
                            .map(|k| quantile_sorted(&pooled, k as f64 / opts.bins as f64))
                            .collect();
                        edges.dedup();
                        ParentBinning::Quantile { edges }
                    }
                }
            })
            .collect();

        let mut tables: [BTreeMap<String, Vec<f64>>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for (t, rows) in tables.iter_mut().zip([&source_rows, &reference_rows]) {
            let mut x = vec![0.0; parents.len()];
            for &i in rows.iter() {
                for (j, c) in parent_cols.iter().enumerate() {
                    x[j] = c[i];
                }
                t.entry(stratum_key(&binnings, &x)).or_default().push(col[i]);
            }
            for values in t.values_mut() {
                values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }
        let [source, reference] = tables;

        nodes.push(NodeAdapt {
            name,
            parents,
            binnings,
            binary: kind == ColumnKind::Binary,
            source,
            reference,
        });
    }

    Ok(AdaptModel {
        baseline: opts.baseline,
        bins: opts.bins,
        seed: opts.seed,
        pa_column: train.pa_name().to_string(),
        nodes,
    })
}

/// Rewrite the non-baseline rows of `data` under `model`.
///
/// Ranks are read in the stratum of the row's observed parent values and
/// cashed out in the stratum of its already-adapted parent values, so each
/// column sees consistent upstream context. Baseline rows, the protected
/// attribute, and columns not downstream of it are returned untouched.
pub fn adapt_apply(model: &AdaptModel, data: &Dataset) -> Result<Dataset> {
    if model.pa_column != data.pa_name() {
        return Err(Error::SchemaMismatch(format!(
            "adaptation was fitted with protected attribute {:?} but the dataset uses {:?}",
            model.pa_column,
            data.pa_name()
        )));
    }
    let (source_rows, _) = role_rows(data, model.baseline)?;

    let mut working: Vec<Column> = data.columns().to_vec();
    let index: BTreeMap<String, usize> = working
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.clone(), i))
        .collect();
    let position = |name: &str| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::SchemaMismatch(format!("dataset lacks column {name:?}")))
    };

    for (node_idx, node) in model.nodes.iter().enumerate() {
        let col_pos = position(&node.name)?;
        if node.binary != (working[col_pos].kind == ColumnKind::Binary) {
            return Err(Error::SchemaMismatch(format!(
                "column {:?} kind differs between adaptation and dataset",
                node.name
            )));
        }
        let original_child = data.values(&node.name)?;
        let original_parents: Vec<&[f64]> =
            node.parents.iter().map(|p| data.values(p)).collect::<Result<_>>()?;
        let parent_pos: Vec<usize> =
            node.parents.iter().map(|p| position(p)).collect::<Result<_>>()?;

        let node_seed = mix_seed(model.seed, node_idx as u64);
        let mut fallbacks = 0usize;
        let mut x_orig = vec![0.0; node.parents.len()];
        let mut x_adapted = vec![0.0; node.parents.len()];
        for &i in &source_rows {
            for (j, c) in original_parents.iter().enumerate() {
                x_orig[j] = c[i];
            }
            for (j, &p) in parent_pos.iter().enumerate() {
                x_adapted[j] = working[p].values[i];
            }
            let src = stratum(&node.source, &stratum_key(&node.binnings, &x_orig), &mut fallbacks);
            let reference = stratum(
                &node.reference,
                &stratum_key(&node.binnings, &x_adapted),
                &mut fallbacks,
            );
            let v = original_child[i];
            let new_value = if node.binary {
                let p_src = mean(src);
                let draw = unit_from_seed(mix_seed(node_seed, i as u64));
                // randomized PIT: spread the two atoms over (0,1)
                let u = if v == 0.0 {
                    draw * (1.0 - p_src)
                } else {
                    (1.0 - p_src) + draw * p_src
                };
                let p_ref = mean(reference);
                f64::from(u >= 1.0 - p_ref)
            } else {
                rank_to_value(reference, ecdf_mid_rank(src, v))
            };
            working[col_pos].values[i] = new_value;
        }
        if fallbacks > 0 {
            log::warn!(
                "column {:?}: {fallbacks} stratum lookups fell back to the nearest populated stratum",
                node.name
            );
        }
    }

    Dataset::new(working, data.pa_name(), data.target_name())
}
