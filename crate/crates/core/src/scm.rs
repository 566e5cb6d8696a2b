//! Structural causal models and paired-world simulation.
//!
//! An [`ScmSpec`] declares a DAG of nodes, each sampled from a Bernoulli or
//! Gamma distribution whose parameters come from a link-transformed linear
//! predictor over the node's parents. Simulation walks the DAG in
//! topological order and draws one exogenous uniform per node per row,
//! converting it through the inverse CDF of the node's distribution. Because
//! the uniforms depend only on `(seed, node, row)`, simulating the same spec
//! twice — once as-is ("real" world) and once with the protected attribute
//! silenced in every child equation — yields row-aligned counterfactual
//! pairs ([`paired_worlds`]).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::adjacency::{self, AdjacencyInfo, DagConfig};
use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::seeding::mix_seed;
use crate::stats::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bernoulli,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Logit,
    Log,
    Identity,
}

/// Which world to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    /// Evaluate all structural equations as declared.
    Real,
    /// Evaluate every equation with the protected attribute set to the
    /// baseline value 0; the PA node itself keeps its real marginal.
    Find,
}

/// Coefficients of a linear predictor: the key `"intercept"` plus one key
/// per parent the term applies to.
pub type CoefMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub family: Family,
    pub link: Link,
    /// Bernoulli only: success-probability coefficients (logit scale).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefMap>,
    /// Gamma only: shape coefficients (log scale).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<CoefMap>,
    /// Gamma only: scale coefficients (log scale).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<CoefMap>,
}

impl NodeSpec {
    fn check_coef_keys(&self, which: &str, map: &CoefMap) -> Result<()> {
        for key in map.keys() {
            if key != "intercept" && !self.parents.iter().any(|p| p == key) {
                return Err(Error::Spec(format!(
                    "node {:?}: {which} coefficient {key:?} is not a declared parent",
                    self.name
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        match (self.family, self.link) {
            (Family::Bernoulli, Link::Logit) | (Family::Gamma, Link::Log) => {}
            (f, l) => {
                return Err(Error::Spec(format!(
                    "node {:?}: link {l:?} not supported for family {f:?}",
                    self.name
                )))
            }
        }
        match self.family {
            Family::Bernoulli => {
                let coef = self.coefficients.as_ref().ok_or_else(|| {
                    Error::Spec(format!("node {:?}: missing coefficients", self.name))
                })?;
                if self.shape.is_some() || self.scale.is_some() {
                    return Err(Error::Spec(format!(
                        "node {:?}: shape/scale maps only apply to gamma nodes",
                        self.name
                    )));
                }
                self.check_coef_keys("probability", coef)
            }
            Family::Gamma => {
                let shape = self.shape.as_ref().ok_or_else(|| {
                    Error::Spec(format!("node {:?}: missing shape coefficients", self.name))
                })?;
                let scale = self.scale.as_ref().ok_or_else(|| {
                    Error::Spec(format!("node {:?}: missing scale coefficients", self.name))
                })?;
                if self.coefficients.is_some() {
                    return Err(Error::Spec(format!(
                        "node {:?}: plain coefficients only apply to bernoulli nodes",
                        self.name
                    )));
                }
                self.check_coef_keys("shape", shape)?;
                self.check_coef_keys("scale", scale)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    pub nodes: Vec<NodeSpec>,
    pub protected_node: String,
    pub target_node: String,
}

impl ScmSpec {
    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Parent map of the declared graph.
    pub fn parent_map(&self) -> BTreeMap<String, Vec<String>> {
        self.nodes
            .iter()
            .map(|n| (n.name.clone(), n.parents.clone()))
            .collect()
    }

    /// Adjacency view (parents, topological order, PA descendants).
    pub fn adjacency(&self) -> Result<AdjacencyInfo> {
        AdjacencyInfo::new(&DagConfig {
            parents: self.parent_map(),
            pa: self.protected_node.clone(),
        })
    }
}

/// Validate the spec and return a topological order of node names.
pub fn validate_dag(spec: &ScmSpec) -> Result<Vec<String>> {
    if spec.nodes.is_empty() {
        return Err(Error::Spec("model declares no nodes".into()));
    }
    let mut names: Vec<String> = Vec::with_capacity(spec.nodes.len());
    for n in &spec.nodes {
        if n.name.is_empty() {
            return Err(Error::Spec("node with empty name".into()));
        }
        if names.contains(&n.name) {
            return Err(Error::Spec(format!("duplicate node name {:?}", n.name)));
        }
        names.push(n.name.clone());
    }
    let order = adjacency::topo_sort(&names, &spec.parent_map())?;
    let pa = spec.node(&spec.protected_node).ok_or_else(|| {
        Error::Spec(format!(
            "protected node {:?} is not declared",
            spec.protected_node
        ))
    })?;
    if !pa.parents.is_empty() {
        return Err(Error::Spec(format!(
            "protected node {:?} must be a root node",
            spec.protected_node
        )));
    }
    if pa.family != Family::Bernoulli {
        return Err(Error::Spec(format!(
            "protected node {:?} must be bernoulli",
            spec.protected_node
        )));
    }
    let target = spec.node(&spec.target_node).ok_or_else(|| {
        Error::Spec(format!("target node {:?} is not declared", spec.target_node))
    })?;
    if target.family != Family::Bernoulli {
        return Err(Error::Spec(format!(
            "target node {:?} must be bernoulli",
            spec.target_node
        )));
    }
    for n in &spec.nodes {
        n.validate()?;
    }
    Ok(order)
}

fn eval_lp(coef: &CoefMap, get: &impl Fn(&str) -> f64) -> f64 {
    let mut lp = coef.get("intercept").copied().unwrap_or(0.0);
    for (k, &c) in coef {
        if k != "intercept" {
            lp += c * get(k);
        }
    }
    lp
}

/// Simulate `n` rows from the spec in the given world.
///
/// Every node draws its exogenous uniforms from a ChaCha stream seeded by
/// `(seed, node declaration index)`, so the draws are identical across
/// worlds and independent across nodes.
pub fn simulate(spec: &ScmSpec, world: WorldKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config {
            field: "n".into(),
            detail: "sample size must be positive".into(),
        });
    }
    let order = validate_dag(spec)?;
    let decl_index: BTreeMap<&str, usize> = spec
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.name.as_str(), i))
        .collect();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    for name in &order {
        let node = spec.node(name).expect("validated");
        let silence_pa = world == WorldKind::Find && node.name != spec.protected_node;
        // resolve parent columns once; the PA parent reads as 0 when silenced
        let parent_cols: BTreeMap<&str, &[f64]> = node
            .parents
            .iter()
            .map(|p| (p.as_str(), values[p].as_slice()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, decl_index[name.as_str()] as u64));
        let mut col = Vec::with_capacity(n);
        for row in 0..n {
            let u: f64 = rng.random();
            let get = |p: &str| -> f64 {
                if silence_pa && p == spec.protected_node {
                    0.0
                } else {
                    parent_cols[p][row]
                }
            };
            let v = match node.family {
                Family::Bernoulli => {
                    let lp = eval_lp(node.coefficients.as_ref().expect("validated"), &get);
                    if !lp.is_finite() {
                        return Err(Error::InvalidParam {
                            node: name.clone(),
                            family: "bernoulli",
                            row,
                            detail: format!("non-finite linear predictor {lp}"),
                        });
                    }
                    if u < sigmoid(lp) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Family::Gamma => {
                    let shape = eval_lp(node.shape.as_ref().expect("validated"), &get).exp();
                    let scale = eval_lp(node.scale.as_ref().expect("validated"), &get).exp();
                    if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
                        return Err(Error::InvalidParam {
                            node: name.clone(),
                            family: "gamma",
                            row,
                            detail: format!("shape {shape}, scale {scale} after log link"),
                        });
                    }
                    let dist = Gamma::new(shape, 1.0 / scale).map_err(|e| Error::InvalidParam {
                        node: name.clone(),
                        family: "gamma",
                        row,
                        detail: e.to_string(),
                    })?;
                    dist.inverse_cdf(u)
                }
            };
            col.push(v);
        }
        values.insert(name.clone(), col);
    }

    let columns = spec
        .nodes
        .iter()
        .map(|node| Column {
            name: node.name.clone(),
            kind: match node.family {
                Family::Bernoulli => ColumnKind::Binary,
                Family::Gamma => ColumnKind::Numeric,
            },
            values: values.remove(&node.name).expect("simulated"),
        })
        .collect();
    Dataset::new(columns, &spec.protected_node, &spec.target_node)
}

/// Simulate the real and silenced worlds from common random numbers.
///
/// Rows are counterfactual pairs: the PA column is identical in both outputs
/// and baseline-group rows coincide entirely.
pub fn paired_worlds(spec: &ScmSpec, n: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    Ok((
        simulate(spec, WorldKind::Real, n, seed)?,
        simulate(spec, WorldKind::Find, n, seed)?,
    ))
}

fn coef(pairs: &[(&str, f64)]) -> CoefMap {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Default credit-style data-generating process.
///
/// A binary protected attribute `a` influences a salary-like amount `x_a`,
/// a payment-default flag `x_d`, and the approval target `y`; an age-like
/// confounder `x_c` feeds all three. Coefficients are frozen so that the
/// real world shows a clear group gap in approval rates (roughly 0.76 vs
/// 0.57) while silencing `a` removes it.
pub fn default_credit_spec() -> ScmSpec {
    ScmSpec {
        nodes: vec![
            NodeSpec {
                name: "a".into(),
                parents: vec![],
                family: Family::Bernoulli,
                link: Link::Logit,
                coefficients: Some(coef(&[("intercept", 0.0)])),
                shape: None,
                scale: None,
            },
            NodeSpec {
                name: "x_c".into(),
                parents: vec![],
                family: Family::Gamma,
                link: Link::Log,
                coefficients: None,
                shape: Some(coef(&[("intercept", 1.1817271953786161)])), // ln 3.26
                scale: Some(coef(&[("intercept", 2.3896797998449792)])), // ln 10.91
            },
            NodeSpec {
                name: "x_a".into(),
                parents: vec!["x_c".into(), "a".into()],
                family: Family::Gamma,
                link: Link::Log,
                coefficients: None,
                shape: Some(coef(&[("intercept", 0.6931471805599453)])), // ln 2
                scale: Some(coef(&[("intercept", 2.0), ("x_c", 0.01), ("a", 0.5)])),
            },
            NodeSpec {
                name: "x_d".into(),
                parents: vec!["x_c".into(), "a".into()],
                family: Family::Bernoulli,
                link: Link::Logit,
                coefficients: Some(coef(&[
                    ("intercept", 1.8),
                    ("x_c", 0.02),
                    ("a", -1.5),
                ])),
                shape: None,
                scale: None,
            },
            NodeSpec {
                name: "y".into(),
                parents: vec!["x_a".into(), "x_d".into(), "x_c".into(), "a".into()],
                family: Family::Bernoulli,
                link: Link::Logit,
                coefficients: Some(coef(&[
                    ("intercept", -2.88),
                    ("x_a", 0.01),
                    ("x_d", -0.3),
                    ("x_c", 0.10),
                    ("a", 1.03),
                ])),
                shape: None,
                scale: None,
            },
        ],
        protected_node: "a".into(),
        target_node: "y".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic, mean};

    fn bern(name: &str, parents: &[&str], coefs: &[(&str, f64)]) -> NodeSpec {
        NodeSpec {
            name: name.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            family: Family::Bernoulli,
            link: Link::Logit,
            coefficients: Some(coef(coefs)),
            shape: None,
            scale: None,
        }
    }

    fn chain_spec() -> ScmSpec {
        ScmSpec {
            nodes: vec![
                bern("a", &[], &[("intercept", 0.0)]),
                bern("x", &["a"], &[("intercept", 0.3), ("a", 1.0)]),
                bern("y", &["x"], &[("intercept", -0.2), ("x", 0.8)]),
            ],
            protected_node: "a".into(),
            target_node: "y".into(),
        }
    }

    #[test]
    fn chain_topological_order() {
        assert_eq!(validate_dag(&chain_spec()).unwrap(), vec!["a", "x", "y"]);
    }

    #[test]
    fn default_spec_order_respects_parents() {
        let order = validate_dag(&default_credit_spec()).unwrap();
        let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
        assert!(pos("a") < pos("x_a") && pos("x_c") < pos("x_a"));
        assert!(pos("x_d") < pos("y") && pos("x_a") < pos("y"));
    }

    #[test]
    fn two_cycle_rejected() {
        let mut spec = chain_spec();
        spec.nodes[0].parents = vec!["x".into()];
        spec.nodes[0].coefficients = Some(coef(&[("intercept", 0.0), ("x", 1.0)]));
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "cycle");
    }

    #[test]
    fn unknown_parent_rejected() {
        let mut spec = chain_spec();
        spec.nodes[2].parents.push("ghost".into());
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "unknown_parent");
    }

    #[test]
    fn pa_with_parents_rejected() {
        let mut spec = chain_spec();
        spec.protected_node = "x".into();
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "spec");
    }

    #[test]
    fn bad_link_and_missing_maps_rejected() {
        let mut spec = chain_spec();
        spec.nodes[1].link = Link::Log;
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "spec");

        let mut spec = default_credit_spec();
        let xc = spec.nodes.iter_mut().find(|n| n.name == "x_c").unwrap();
        xc.scale = None;
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "spec");
    }

    #[test]
    fn stray_coefficient_rejected() {
        let mut spec = chain_spec();
        spec.nodes[2]
            .coefficients
            .as_mut()
            .unwrap()
            .insert("a".into(), 0.5); // a is not a parent of y here
        assert_eq!(validate_dag(&spec).unwrap_err().kind(), "spec");
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = default_credit_spec();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: ScmSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = default_credit_spec();
        let a = simulate(&spec, WorldKind::Real, 500, 11).unwrap();
        let b = simulate(&spec, WorldKind::Real, 500, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, WorldKind::Real, 500, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pa_marginal_near_half() {
        let ds = simulate(&default_credit_spec(), WorldKind::Real, 10_000, 5).unwrap();
        let p = mean(ds.pa());
        assert!((p - 0.5).abs() < 0.02, "P(a=1) = {p}");
    }

    #[test]
    fn silencing_is_identity_when_pa_has_no_effect() {
        let mut spec = default_credit_spec();
        for node in &mut spec.nodes {
            for map in [&mut node.coefficients, &mut node.shape, &mut node.scale] {
                if let Some(m) = map.as_mut() {
                    if let Some(c) = m.get_mut("a") {
                        *c = 0.0;
                    }
                }
            }
        }
        let (real, find) = paired_worlds(&spec, 2_000, 9).unwrap();
        assert_eq!(real, find);
    }

    #[test]
    fn paired_worlds_share_pa_and_baseline_rows() {
        let spec = default_credit_spec();
        let (real, find) = paired_worlds(&spec, 3_000, 21).unwrap();
        assert_eq!(real.pa(), find.pa());
        for col in real.columns() {
            let f = find.values(&col.name).unwrap();
            for (i, &g) in real.pa().iter().enumerate() {
                if g == 0.0 {
                    assert_eq!(
                        col.values[i], f[i],
                        "baseline row {i} differs in column {}",
                        col.name
                    );
                }
            }
        }
    }

    #[test]
    fn silenced_world_equalizes_base_rates() {
        let spec = default_credit_spec();
        let find = simulate(&spec, WorldKind::Find, 10_000, 33).unwrap();
        let (prot, base) = find.group_indices();
        let rate = |idx: &[usize]| {
            idx.iter().map(|&i| find.target()[i]).sum::<f64>() / idx.len() as f64
        };
        let gap = (rate(&prot) - rate(&base)).abs();
        assert!(gap < 0.03, "silenced-world base-rate gap = {gap}");
    }

    #[test]
    fn silenced_world_groups_match_distributionally() {
        let spec = default_credit_spec();
        let find = simulate(&spec, WorldKind::Find, 10_000, 7).unwrap();
        let (prot, base) = find.group_indices();
        for col in find.columns() {
            if col.name == "a" {
                continue;
            }
            let xa: Vec<f64> = prot.iter().map(|&i| col.values[i]).collect();
            let xb: Vec<f64> = base.iter().map(|&i| col.values[i]).collect();
            let d = ks_statistic(&xa, &xb);
            let crit = ks_critical(0.01, xa.len(), xb.len());
            assert!(d < crit, "column {}: ks {d} >= critical {crit}", col.name);
        }
    }

    #[test]
    fn gamma_root_moments_match_family() {
        // x_c ~ Gamma(shape 3.26, scale 10.91): mean 35.567, var 388.03
        let spec = ScmSpec {
            nodes: vec![
                bern("a", &[], &[("intercept", 0.0)]),
                NodeSpec {
                    name: "x_c".into(),
                    parents: vec![],
                    family: Family::Gamma,
                    link: Link::Log,
                    coefficients: None,
                    shape: Some(coef(&[("intercept", 1.1817271953786161)])),
                    scale: Some(coef(&[("intercept", 2.3896797998449792)])),
                },
                bern("y", &[], &[("intercept", 0.0)]),
            ],
            protected_node: "a".into(),
            target_node: "y".into(),
        };
        let n = 100_000;
        let ds = simulate(&spec, WorldKind::Real, n, 2).unwrap();
        let xs = ds.values("x_c").unwrap();
        let m = mean(xs);
        let (alpha, theta) = (3.26, 10.91);
        let se = (alpha * theta * theta / n as f64).sqrt();
        assert!(
            (m - alpha * theta).abs() < 3.0 * se,
            "sample mean {m} vs {:.4} (se {se:.4})",
            alpha * theta
        );
        assert!(xs.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gamma_overflow_is_invalid_param() {
        let mut spec = default_credit_spec();
        let xc = spec.nodes.iter_mut().find(|n| n.name == "x_c").unwrap();
        xc.shape.as_mut().unwrap().insert("intercept".into(), 800.0);
        let err = simulate(&spec, WorldKind::Real, 10, 1).unwrap_err();
        assert_eq!(err.kind(), "invalid_param");
    }
}
