//! Causal adjacency information shared by the pre-processing transforms.
//!
//! Both transforms only need to know, for each column, who its parents are,
//! which columns descend from the protected attribute, and a topological
//! order to process them in. [`AdjacencyInfo`] captures exactly that and can
//! be built either from a structural-model spec or from a bare parent map
//! supplied as JSON (for observed data where no structural equations exist).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Topologically sort `names` given a parent map (edges parent -> child).
///
/// Processes nodes in the given declaration order among ties, so the result
/// is deterministic. On a cycle, reports one edge that closes it.
pub fn topo_sort(names: &[String], parents: &BTreeMap<String, Vec<String>>) -> Result<Vec<String>> {
    let name_set: BTreeSet<&str> = names.iter().map(|s| s.as_str()).collect();
    for (node, ps) in parents {
        for p in ps {
            if !name_set.contains(p.as_str()) {
                return Err(Error::UnknownParent {
                    node: node.clone(),
                    parent: p.clone(),
                });
            }
        }
    }
    let empty: Vec<String> = Vec::new();
    let mut remaining: BTreeMap<&str, usize> = BTreeMap::new();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for name in names {
        let ps = parents.get(name).unwrap_or(&empty);
        remaining.insert(name, ps.len());
        for p in ps {
            children.entry(p).or_default().push(name);
        }
    }
    let mut order: Vec<String> = Vec::with_capacity(names.len());
    let mut ready: Vec<&str> = names
        .iter()
        .filter(|n| remaining[n.as_str()] == 0)
        .map(|n| n.as_str())
        .collect();
    let mut next_ready: Vec<&str> = Vec::new();
    while !ready.is_empty() {
        next_ready.clear();
        for &n in &ready {
            order.push(n.to_string());
            for &c in children.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
                let r = remaining.get_mut(c).expect("child is a declared node");
                *r -= 1;
                if *r == 0 {
                    next_ready.push(c);
                }
            }
        }
        std::mem::swap(&mut ready, &mut next_ready);
    }
    if order.len() == names.len() {
        return Ok(order);
    }
    // Cycle: walk parent links inside the residual set until a node repeats.
    let residual: BTreeSet<&str> = remaining
        .iter()
        .filter(|(_, &r)| r > 0)
        .map(|(&n, _)| n)
        .collect();
    let mut walk: Vec<&str> = Vec::new();
    let mut cur = *residual.iter().next().expect("residual non-empty on cycle");
    loop {
        if walk.contains(&cur) {
            // revisiting cur means the edge cur -> walk[last] lies on a cycle
            let to = *walk.last().expect("walk non-empty");
            return Err(Error::Cycle {
                from: cur.to_string(),
                to: to.to_string(),
            });
        }
        walk.push(cur);
        cur = parents[cur]
            .iter()
            .map(|p| p.as_str())
            .find(|p| residual.contains(p))
            .expect("residual node has a residual parent");
    }
}

/// Parent map plus protected-attribute name, as accepted from JSON config.
///
/// Keys are nodes, values their parents. Nodes that only appear as parents
/// are implied roots and need no entry of their own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagConfig {
    pub parents: BTreeMap<String, Vec<String>>,
    pub pa: String,
}

/// Resolved adjacency structure: parents, topological order, and the set of
/// columns that (transitively) descend from the protected attribute.
#[derive(Debug, Clone)]
pub struct AdjacencyInfo {
    parents: BTreeMap<String, Vec<String>>,
    pa: String,
    order: Vec<String>,
    descendants: BTreeSet<String>,
}

impl AdjacencyInfo {
    pub fn new(config: &DagConfig) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for (node, ps) in &config.parents {
            if seen.insert(node) {
                names.push(node.clone());
            }
            for p in ps {
                if seen.insert(p) {
                    names.push(p.clone());
                }
            }
        }
        if seen.insert(&config.pa) {
            names.push(config.pa.clone());
        }
        let mut parents = config.parents.clone();
        for n in &names {
            parents.entry(n.clone()).or_default();
        }
        if !parents[&config.pa].is_empty() {
            return Err(Error::Spec(format!(
                "protected attribute {:?} must be a root node",
                config.pa
            )));
        }
        let order = topo_sort(&names, &parents)?;

        // transitive descendants of the PA, via child lists
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (node, ps) in &parents {
            for p in ps {
                children.entry(p).or_default().push(node);
            }
        }
        let mut descendants: BTreeSet<String> = BTreeSet::new();
        let mut stack = vec![config.pa.as_str()];
        while let Some(n) = stack.pop() {
            for &c in children.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
                if descendants.insert(c.to_string()) {
                    stack.push(c);
                }
            }
        }
        Ok(AdjacencyInfo {
            parents,
            pa: config.pa.clone(),
            order,
            descendants,
        })
    }

    pub fn pa(&self) -> &str {
        &self.pa
    }

    pub fn parents_of(&self, node: &str) -> &[String] {
        self.parents.get(node).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Parents of `node` excluding the protected attribute itself.
    pub fn non_pa_parents(&self, node: &str) -> Vec<String> {
        self.parents_of(node)
            .iter()
            .filter(|p| p.as_str() != self.pa)
            .cloned()
            .collect()
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    /// Columns descending from the PA, in topological order.
    pub fn ordered_descendants(&self) -> Vec<String> {
        self.order
            .iter()
            .filter(|n| self.descendants.contains(*n))
            .cloned()
            .collect()
    }

    pub fn is_descendant(&self, node: &str) -> bool {
        self.descendants.contains(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &[&str])], pa: &str) -> DagConfig {
        DagConfig {
            parents: pairs
                .iter()
                .map(|(n, ps)| (n.to_string(), ps.iter().map(|p| p.to_string()).collect()))
                .collect(),
            pa: pa.to_string(),
        }
    }

    #[test]
    fn chain_has_unique_order() {
        let names = vec!["a".to_string(), "x".to_string(), "y".to_string()];
        let parents: BTreeMap<String, Vec<String>> = [
            ("a".to_string(), vec![]),
            ("x".to_string(), vec!["a".to_string()]),
            ("y".to_string(), vec!["x".to_string()]),
        ]
        .into_iter()
        .collect();
        assert_eq!(topo_sort(&names, &parents).unwrap(), names);
    }

    #[test]
    fn two_cycle_reports_back_edge() {
        let names = vec!["a".to_string(), "x".to_string()];
        let parents: BTreeMap<String, Vec<String>> = [
            ("a".to_string(), vec!["x".to_string()]),
            ("x".to_string(), vec!["a".to_string()]),
        ]
        .into_iter()
        .collect();
        match topo_sort(&names, &parents).unwrap_err() {
            Error::Cycle { from, to } => {
                // the reported edge must exist in the graph
                assert!(parents[&to].contains(&from), "edge {from} -> {to}");
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn unknown_parent_detected() {
        let names = vec!["x".to_string()];
        let parents: BTreeMap<String, Vec<String>> =
            [("x".to_string(), vec!["ghost".to_string()])].into_iter().collect();
        match topo_sort(&names, &parents).unwrap_err() {
            Error::UnknownParent { node, parent } => {
                assert_eq!((node.as_str(), parent.as_str()), ("x", "ghost"));
            }
            other => panic!("expected unknown parent, got {other:?}"),
        }
    }

    #[test]
    fn descendants_are_transitive() {
        // a -> xa -> y, xc -> xa, xc -> xd, xd -> y; xc is no descendant
        let info = AdjacencyInfo::new(&cfg(
            &[
                ("xa", &["xc", "a"]),
                ("xd", &["xc"]),
                ("y", &["xa", "xd"]),
            ],
            "a",
        ))
        .unwrap();
        assert!(info.is_descendant("xa"));
        assert!(info.is_descendant("y"));
        assert!(!info.is_descendant("xc"));
        assert!(!info.is_descendant("xd"));
        assert_eq!(info.ordered_descendants(), vec!["xa", "y"]);
        assert_eq!(info.non_pa_parents("xa"), vec!["xc"]);
    }

    #[test]
    fn pa_must_be_root() {
        let err = AdjacencyInfo::new(&cfg(&[("a", &["x"]), ("y", &["a"])], "a")).unwrap_err();
        assert_eq!(err.kind(), "spec");
    }

    #[test]
    fn order_puts_parents_first() {
        let info = AdjacencyInfo::new(&cfg(
            &[("y", &["xa", "xd"]), ("xa", &["a", "xc"]), ("xd", &["a", "xc"])],
            "a",
        ))
        .unwrap();
        let pos: BTreeMap<&str, usize> = info
            .order()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        for (node, ps) in [("y", vec!["xa", "xd"]), ("xa", vec!["a", "xc"])] {
            for p in ps {
                assert!(pos[p] < pos[node], "{p} should precede {node}");
            }
        }
    }
}
