//! Residual-based warping of protected-group rows onto the baseline group.
//!
//! For every column downstream of the protected attribute, two per-group
//! location models are fitted on the column's other parents. A source-group
//! row keeps its *rank*: its residual under the source model (at the row's
//! observed parent values) is converted to a mid-rank, and the new value is
//! emitted at that rank under the reference model, evaluated at the row's
//! already-warped parent values. Continuous columns use least squares on the
//! log scale when strictly positive (identity scale otherwise); binary
//! columns use logistic models joined by a randomized probability-integral
//! coupling so that ranks survive the discreteness.
//!
//! Columns that do not descend from the protected attribute, all rows of the
//! reference group, and the protected attribute itself pass through
//! bit-for-bit unchanged.

use serde::{Deserialize, Serialize};

use crate::adjacency::AdjacencyInfo;
use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::glm::{LinearModel, LogisticModel};
use crate::seeding::{mix_seed, unit_from_seed};
use crate::stats::{ecdf_mid_rank, rank_to_value};

/// Which group's rows are rewritten, and which group supplies the target
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpDirection {
    /// Rewrite rows with `pa = 1` to look like the `pa = 0` group.
    #[default]
    ProtectedToBaseline,
    /// Rewrite rows with `pa = 0` to look like the `pa = 1` group.
    BaselineToProtected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpOptions {
    pub direction: WarpDirection,
    /// Seeds the per-row coupling draws used for binary columns.
    pub seed: u64,
}

impl Default for WarpOptions {
    fn default() -> Self {
        WarpOptions { direction: WarpDirection::ProtectedToBaseline, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeModel {
    Continuous {
        /// Residuals live on the log scale when true.
        log_link: bool,
        source: LinearModel,
        reference: LinearModel,
        /// Sorted in-group residuals; source ranks are read here ...
        source_residuals: Vec<f64>,
        /// ... and cashed out here.
        reference_residuals: Vec<f64>,
    },
    Binary {
        source: LogisticModel,
        reference: LogisticModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeWarp {
    name: String,
    /// Model features: the node's parents minus the protected attribute.
    parents: Vec<String>,
    model: NodeModel,
}

/// Fitted warp: one per-group model pair per downstream column, in
/// topological order so parents are rewritten before their children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpModel {
    direction: WarpDirection,
    seed: u64,
    pa_column: String,
    nodes: Vec<NodeWarp>,
}

impl WarpModel {
    pub fn direction(&self) -> WarpDirection {
        self.direction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Names of the columns this model rewrites, in application order.
    pub fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }
}

/// Split group row indices into (rows to rewrite, rows giving the target).
fn role_rows(data: &Dataset, direction: WarpDirection) -> Result<(Vec<usize>, Vec<usize>)> {
    let (protected, baseline) = data.group_indices();
    let (source, reference) = match direction {
        WarpDirection::ProtectedToBaseline => (protected, baseline),
        WarpDirection::BaselineToProtected => (baseline, protected),
    };
    if source.is_empty() {
        return Err(Error::DegenerateGroup("source group has no rows".into()));
    }
    if reference.is_empty() {
        return Err(Error::DegenerateGroup("reference group has no rows".into()));
    }
    Ok((source, reference))
}

fn sorted_residuals(
    cols: &[&[f64]],
    z: &[f64],
    rows: &[usize],
    model: &LinearModel,
) -> Vec<f64> {
    let mut x = vec![0.0; cols.len()];
    let mut out: Vec<f64> = rows
        .iter()
        .map(|&i| {
            for (j, c) in cols.iter().enumerate() {
                x[j] = c[i];
            }
            z[i] - model.predict(&x)
        })
        .collect();
    out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Fit per-group location models for every column downstream of the
/// protected attribute in `dag`, using observed values throughout.
pub fn warp_fit(train: &Dataset, dag: &AdjacencyInfo, opts: &WarpOptions) -> Result<WarpModel> {
    if dag.pa() != train.pa_name() {
        return Err(Error::SchemaMismatch(format!(
            "graph treats {:?} as the protected attribute but the dataset uses {:?}",
            dag.pa(),
            train.pa_name()
        )));
    }
    let (source_rows, reference_rows) = role_rows(train, opts.direction)?;

    let mut nodes = Vec::new();
    for name in dag.ordered_descendants() {
        let col = train.values(&name)?;
        let kind = train.column(&name).expect("values() checked existence").kind;
        let parents = dag.non_pa_parents(&name);
        let parent_cols: Vec<&[f64]> =
            parents.iter().map(|p| train.values(p)).collect::<Result<_>>()?;

        let model = match kind {
            ColumnKind::Binary => {
                for (label, rows) in [("source", &source_rows), ("reference", &reference_rows)] {
                    let first = col[rows[0]];
                    if rows.iter().all(|&i| col[i] == first) {
                        return Err(Error::DegenerateGroup(format!(
                            "column {name:?} is constant within the {label} group"
                        )));
                    }
                }
                NodeModel::Binary {
                    source: LogisticModel::fit(&parent_cols, col, &source_rows)?,
                    reference: LogisticModel::fit(&parent_cols, col, &reference_rows)?,
                }
            }
            ColumnKind::Numeric => {
                let log_link = col.iter().all(|v| *v > 0.0);
                let z: Vec<f64> = if log_link {
                    col.iter().map(|v| v.ln()).collect()
                } else {
                    col.to_vec()
                };
                let source = LinearModel::fit(&parent_cols, &z, &source_rows)?;
                let reference = LinearModel::fit(&parent_cols, &z, &reference_rows)?;
                let source_residuals = sorted_residuals(&parent_cols, &z, &source_rows, &source);
                let reference_residuals =
                    sorted_residuals(&parent_cols, &z, &reference_rows, &reference);
                NodeModel::Continuous {
                    log_link,
                    source,
                    reference,
                    source_residuals,
                    reference_residuals,
                }
            }
        };
        nodes.push(NodeWarp { name, parents, model });
    }

    Ok(WarpModel {
        direction: opts.direction,
        seed: opts.seed,
        pa_column: train.pa_name().to_string(),
        nodes,
    })
}

/// Rewrite the source-group rows of `data` under `model`.
///
/// Residual ranks are computed against the row's observed parent values and
/// cashed out at the already-warped parent values, so each column sees
/// consistent upstream context. Everything else is returned untouched.
pub fn warp_apply(model: &WarpModel, data: &Dataset) -> Result<Dataset> {
    if model.pa_column != data.pa_name() {
        return Err(Error::SchemaMismatch(format!(
            "warp model was fitted with protected attribute {:?} but the dataset uses {:?}",
            model.pa_column,
            data.pa_name()
        )));
    }
    let (source_rows, _) = role_rows(data, model.direction)?;

    let mut working: Vec<Column> = data.columns().to_vec();
    let index: std::collections::BTreeMap<String, usize> = working
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
        let expect_binary = matches!(node.model, NodeModel::Binary { .. });
        let is_binary = working[col_pos].kind == ColumnKind::Binary;
        if expect_binary != is_binary {
            return Err(Error::SchemaMismatch(format!(
                "column {:?} kind differs between warp model and dataset",
                node.name
            )));
        }
        let original_child = data.values(&node.name)?;
        let original_parents: Vec<&[f64]> =
            node.parents.iter().map(|p| data.values(p)).collect::<Result<_>>()?;
        let parent_pos: Vec<usize> =
            node.parents.iter().map(|p| position(p)).collect::<Result<_>>()?;

        let node_seed = mix_seed(model.seed, node_idx as u64);
        let mut x_orig = vec![0.0; node.parents.len()];
        let mut x_warp = vec![0.0; node.parents.len()];
        for &i in &source_rows {
            for (j, c) in original_parents.iter().enumerate() {
                x_orig[j] = c[i];
            }
            for (j, &p) in parent_pos.iter().enumerate() {
                x_warp[j] = working[p].values[i];
            }
            let new_value = match &node.model {
                NodeModel::Continuous {
                    log_link,
                    source,
                    reference,
                    source_residuals,
                    reference_residuals,
                } => {
                    let v = original_child[i];
                    if *log_link && v <= 0.0 {
                        return Err(Error::SchemaMismatch(format!(
                            "column {:?} has a non-positive value but was log-scale at fit time",
                            node.name
                        )));
                    }
                    let z = if *log_link { v.ln() } else { v };
                    let r = z - source.predict(&x_orig);
                    let u = ecdf_mid_rank(source_residuals, r);
                    let out = reference.predict(&x_warp) + rank_to_value(reference_residuals, u);
                    if *log_link {
                        out.exp()
                    } else {
                        out
                    }
                }
                NodeModel::Binary { source, reference } => {
                    let p_src = source.prob(&x_orig);
                    let draw = unit_from_seed(mix_seed(node_seed, i as u64));
                    // randomized PIT: spread the two atoms over (0,1)
                    let u = if original_child[i] == 0.0 {
                        draw * (1.0 - p_src)
                    } else {
                        (1.0 - p_src) + draw * p_src
                    };
                    let p_ref = reference.prob(&x_warp);
                    if u >= 1.0 - p_ref {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            working[col_pos].values[i] = new_value;
        }
    }

    Dataset::new(working, data.pa_name(), data.target_name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjacency::DagConfig;
    use crate::stats::{ks_critical, ks_statistic, mean, sample_sd, sigmoid, spearman};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Gamma};
    use std::collections::BTreeMap;

    fn dag(pairs: &[(&str, &[&str])], pa: &str) -> AdjacencyInfo {
        let parents: BTreeMap<String, Vec<String>> = pairs
            .iter()
            .map(|(n, ps)| (n.to_string(), ps.iter().map(|p| p.to_string()).collect()))
            .collect();
        AdjacencyInfo::new(&DagConfig { parents, pa: pa.into() }).unwrap()
    }

    fn gamma_draws(n: usize, shape: f64, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gamma::new(shape, 1.0 / scale).unwrap();
        (0..n).map(|_| g.inverse_cdf(rng.random::<f64>())).collect()
    }

    fn bern(p: f64, rng: &mut ChaCha8Rng) -> f64 {
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }

    fn build(cols: Vec<(&str, ColumnKind, Vec<f64>)>, pa: &str, target: &str) -> Dataset {
        let columns = cols
            .into_iter()
            .map(|(name, kind, values)| Column { name: name.into(), kind, values })
            .collect();
        Dataset::new(columns, pa, target).unwrap()
    }

    /// Groups drawn from one distribution: the warp should be near-identity.
    fn exchangeable(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gamma_draws(n, 3.0, 2.0, seed ^ 0xA5);
        let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let d: Vec<f64> = x.iter().map(|&v| bern(sigmoid(0.5 * v - 1.0), &mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&d)
            .map(|(&v, &dv)| bern(sigmoid(0.8 * dv + 0.2 * v - 1.0), &mut rng))
            .collect();
        build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("x", ColumnKind::Numeric, x),
                ("d", ColumnKind::Binary, d),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        )
    }

    fn exchangeable_dag() -> AdjacencyInfo {
        dag(&[("x", &["a"]), ("d", &["a", "x"]), ("y", &["a", "x", "d"])], "a")
    }

    /// Group 1 ~ Gamma(4, scale 2.5), group 0 ~ Gamma(4, scale 2): the exact
    /// transport map is v -> 0.8 v.
    fn two_gamma(n_each: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![1.0; n_each];
        a.extend(vec![0.0; n_each]);
        let mut x = gamma_draws(n_each, 4.0, 2.5, seed ^ 0x11);
        x.extend(gamma_draws(n_each, 4.0, 2.0, seed ^ 0x22));
        let y: Vec<f64> = x.iter().map(|&v| bern(sigmoid(0.3 * v - 2.0), &mut rng)).collect();
        build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("x", ColumnKind::Numeric, x),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        )
    }

    fn two_gamma_dag() -> AdjacencyInfo {
        dag(&[("x", &["a"]), ("y", &["x"])], "a")
    }

    #[test]
    fn fits_exactly_the_downstream_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400;
        let z = gamma_draws(n, 2.0, 1.0, 9);
        let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let x: Vec<f64> = z.iter().map(|&v| v + rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|&v| bern(sigmoid(0.3 * v - 1.0), &mut rng)).collect();
        let ds = build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("z", ColumnKind::Numeric, z),
                ("x", ColumnKind::Numeric, x),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        );
        // z is exogenous: only x and y descend from the protected attribute
        let dag = dag(&[("x", &["a", "z"]), ("y", &["a", "x"])], "a");
        let model = warp_fit(&ds, &dag, &WarpOptions::default()).unwrap();
        assert_eq!(model.node_names(), vec!["x", "y"]);
    }

    #[test]
    fn single_group_data_is_degenerate() {
        let ds = build(
            vec![
                ("a", ColumnKind::Binary, vec![1.0; 20]),
                ("x", ColumnKind::Numeric, (1..=20).map(f64::from).collect()),
                ("y", ColumnKind::Binary, (0..20).map(|i| (i % 2) as f64).collect()),
            ],
            "a",
            "y",
        );
        let err = warp_fit(&ds, &two_gamma_dag(), &WarpOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "degenerate_group");
    }

    #[test]
    fn binary_constant_in_one_group_is_degenerate() {
        let n = 40;
        let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        // d is identically zero inside group 1, mixed inside group 0
        let d: Vec<f64> = (0..n).map(|i| if i % 2 == 1 && i % 4 == 3 { 1.0 } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i / 2) % 2) as f64).collect();
        let ds = build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("d", ColumnKind::Binary, d),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        );
        let dg = dag(&[("d", &["a"]), ("y", &["a", "d"])], "a");
        let err = warp_fit(&ds, &dg, &WarpOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "degenerate_group");
        assert!(err.to_string().contains("\"d\""), "{err}");
    }

    #[test]
    fn exchangeable_groups_give_near_identity_warp() {
        let ds = exchangeable(6000, 3);
        let model = warp_fit(&ds, &exchangeable_dag(), &WarpOptions::default()).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (source, _) = ds.group_indices();

        let x0 = ds.values("x").unwrap();
        let x1 = out.values("x").unwrap();
        let sd = sample_sd(x0);
        let mad = mean(&source.iter().map(|&i| (x1[i] - x0[i]).abs()).collect::<Vec<_>>());
        assert!(mad < 0.05 * sd, "mean abs deviation {mad} vs sd {sd}");

        for bin_col in ["d", "y"] {
            let b0 = ds.values(bin_col).unwrap();
            let b1 = out.values(bin_col).unwrap();
            let flips = source.iter().filter(|&&i| b0[i] != b1[i]).count();
            let rate = flips as f64 / source.len() as f64;
            assert!(rate < 0.05, "column {bin_col}: flip rate {rate}");
        }
    }

    #[test]
    fn gamma_scale_shift_recovers_closed_form_map() {
        let n_each = 5000;
        let ds = two_gamma(n_each, 1);
        let model = warp_fit(&ds, &two_gamma_dag(), &WarpOptions::default()).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (source, reference) = ds.group_indices();

        let x0 = ds.values("x").unwrap();
        let x1 = out.values("x").unwrap();
        assert!(source.iter().all(|&i| x1[i] > 0.0));

        // pointwise against the exact transport map v -> 0.8 v
        let dev = mean(
            &source.iter().map(|&i| (x1[i] - 0.8 * x0[i]).abs()).collect::<Vec<_>>(),
        );
        let target_sd = 4.0; // Gamma(4, scale 2): sd = 2 * 2
        assert!(dev < 0.05 * target_sd, "mean abs deviation {dev}");

        // distributional: warped source vs actual reference sample
        let warped: Vec<f64> = source.iter().map(|&i| x1[i]).collect();
        let ref_x: Vec<f64> = reference.iter().map(|&i| x0[i]).collect();
        let ks = ks_statistic(&warped, &ref_x);
        let crit = ks_critical(0.01, warped.len(), ref_x.len());
        assert!(ks < crit, "ks {ks} vs critical {crit}");
    }

    #[test]
    fn reverse_direction_maps_baseline_up() {
        let ds = two_gamma(4000, 2);
        let opts = WarpOptions { direction: WarpDirection::BaselineToProtected, seed: 0 };
        let model = warp_fit(&ds, &two_gamma_dag(), &opts).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (protected, baseline) = ds.group_indices();

        let x0 = ds.values("x").unwrap();
        let x1 = out.values("x").unwrap();
        // protected rows untouched, baseline rows scaled by ~1.25
        assert!(protected.iter().all(|&i| x1[i].to_bits() == x0[i].to_bits()));
        let dev = mean(
            &baseline.iter().map(|&i| (x1[i] - 1.25 * x0[i]).abs()).collect::<Vec<_>>(),
        );
        assert!(dev < 0.05 * 5.0, "mean abs deviation {dev}"); // Gamma(4, 2.5): sd = 5
    }

    #[test]
    fn ranks_survive_within_source_group() {
        let ds = two_gamma(2000, 4);
        let model = warp_fit(&ds, &two_gamma_dag(), &WarpOptions::default()).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (source, _) = ds.group_indices();
        let x0 = ds.values("x").unwrap();
        let x1 = out.values("x").unwrap();
        let orig: Vec<f64> = source.iter().map(|&i| x0[i]).collect();
        let warped: Vec<f64> = source.iter().map(|&i| x1[i]).collect();
        let rho = spearman(&orig, &warped);
        assert!(rho > 1.0 - 1e-12, "spearman {rho}");
    }

    #[test]
    fn untouched_parts_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 500;
        let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let z = gamma_draws(n, 2.0, 3.0, 8);
        let x: Vec<f64> = z.iter().enumerate().map(|(i, &v)| v + a[i] + rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|&v| bern(sigmoid(0.2 * v - 1.0), &mut rng)).collect();
        let ds = build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("z", ColumnKind::Numeric, z),
                ("x", ColumnKind::Numeric, x),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        );
        let dg = dag(&[("x", &["a"]), ("y", &["x", "z"])], "a");
        let model = warp_fit(&ds, &dg, &WarpOptions::default()).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (_, reference) = ds.group_indices();

        let bits = |d: &Dataset, c: &str, i: usize| d.values(c).unwrap()[i].to_bits();
        for i in 0..n {
            assert_eq!(bits(&ds, "a", i), bits(&out, "a", i));
            assert_eq!(bits(&ds, "z", i), bits(&out, "z", i), "exogenous column moved");
        }
        for &i in &reference {
            assert_eq!(bits(&ds, "x", i), bits(&out, "x", i));
            assert_eq!(bits(&ds, "y", i), bits(&out, "y", i));
        }
    }

    #[test]
    fn binary_rate_transfers_to_reference_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 4000;
        let a: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let d: Vec<f64> = a.iter().map(|&g| bern(if g == 1.0 { 0.3 } else { 0.6 }, &mut rng)).collect();
        let y: Vec<f64> = d.iter().map(|&v| bern(0.3 + 0.4 * v, &mut rng)).collect();
        let ds = build(
            vec![
                ("a", ColumnKind::Binary, a),
                ("d", ColumnKind::Binary, d),
                ("y", ColumnKind::Binary, y),
            ],
            "a",
            "y",
        );
        let dg = dag(&[("d", &["a"]), ("y", &["a", "d"])], "a");
        let model = warp_fit(&ds, &dg, &WarpOptions::default()).unwrap();
        let out = warp_apply(&model, &ds).unwrap();
        let (source, reference) = ds.group_indices();

        let d1 = out.values("d").unwrap();
        let warped_rate = mean(&source.iter().map(|&i| d1[i]).collect::<Vec<_>>());
        let d0 = ds.values("d").unwrap();
        let ref_rate = mean(&reference.iter().map(|&i| d0[i]).collect::<Vec<_>>());
        assert!(
            (warped_rate - ref_rate).abs() < 0.04,
            "warped rate {warped_rate} vs reference {ref_rate}"
        );
    }

    #[test]
    fn apply_is_deterministic_and_seed_sensitive() {
        let ds = exchangeable(1500, 12);
        let dg = exchangeable_dag();
        let model = warp_fit(&ds, &dg, &WarpOptions::default()).unwrap();
        let out1 = warp_apply(&model, &ds).unwrap();
        let out2 = warp_apply(&model, &ds).unwrap();
        assert_eq!(out1, out2);

        let other = warp_fit(&ds, &dg, &WarpOptions { seed: 1, ..Default::default() }).unwrap();
        let out3 = warp_apply(&other, &ds).unwrap();
        // continuous path is draw-free; binary couplings move with the seed
        assert_eq!(out1.values("x").unwrap(), out3.values("x").unwrap());
        let d1 = out1.values("d").unwrap();
        let d3 = out3.values("d").unwrap();
        assert!(d1 != d3, "coupling draws should depend on the seed");
    }

    #[test]
    fn model_json_roundtrip_reproduces_output() {
        let ds = exchangeable(800, 14);
        let model = warp_fit(&ds, &exchangeable_dag(), &WarpOptions::default()).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: WarpModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(warp_apply(&back, &ds).unwrap(), warp_apply(&model, &ds).unwrap());
    }

    #[test]
    fn rank_to_value_inverts_mid_rank() {
        let sorted = vec![-2.0, -0.5, 0.1, 0.4, 3.0];
        for (i, &v) in sorted.iter().enumerate() {
            let u = ecdf_mid_rank(&sorted, v);
            assert_eq!(rank_to_value(&sorted, u), v, "order statistic {i}");
        }
        // beyond the support: clamps to the extreme order statistics
        assert_eq!(rank_to_value(&sorted, ecdf_mid_rank(&sorted, -10.0)), -2.0);
        assert_eq!(rank_to_value(&sorted, ecdf_mid_rank(&sorted, 10.0)), 3.0);
    }
}
