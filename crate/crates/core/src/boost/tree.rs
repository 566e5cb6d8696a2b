//! Regression trees for second-order boosting.
//!
//! Growth is level-wise exact greedy: every feature is scanned in sorted
//! order once per level, accumulating gradient/hessian prefix sums per
//! frontier node. Split candidates sit at midpoints between distinct
//! adjacent values; ties in gain resolve to the lowest feature index and
//! threshold, so growth is fully deterministic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree; `nodes[0]` is the root, leaf values are log-odds
/// increments (learning rate already applied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Evaluate the tree on one row, reading features by index.
    pub fn predict(&self, feature: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature: f,
                    threshold,
                    left,
                    right,
                } => {
                    at = if feature(f) < threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf_weight: f64,
    pub eta: f64,
}

#[derive(Clone, Copy)]
struct NodeStats {
    g: f64,
    h: f64,
    count: usize,
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    left: NodeStats,
}

#[derive(Clone, Copy)]
struct Scratch {
    run_g: f64,
    run_h: f64,
    run_cnt: usize,
    prev: f64,
}

fn score(g: f64, h: f64, min_leaf_weight: f64) -> f64 {
    g * g / (h + min_leaf_weight)
}

/// Grow one tree against per-row gradients/hessians.
///
/// Writes each row's (eta-scaled) leaf value into `row_out`, so the caller
/// can update scores without re-walking the tree.
pub(crate) fn grow(
    cols: &[&[f64]],
    presorted: &[Vec<u32>],
    grad: &[f64],
    hess: &[f64],
    p: &GrowParams,
    row_out: &mut [f64],
) -> Tree {
    let n = grad.len();
    debug_assert!(cols.iter().all(|c| c.len() == n));
    let root_stats = NodeStats {
        g: grad.iter().sum(),
        h: hess.iter().sum(),
        count: n,
    };
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let mut node_of: Vec<u32> = vec![0; n];
    // frontier: node ids still eligible for splitting, with their stats
    let mut frontier: Vec<(usize, NodeStats)> = vec![(0, root_stats)];
    // slot of each node id within the frontier, -1 when inactive
    let mut slot_of: Vec<i32> = vec![0];

    for _depth in 0..p.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut best: Vec<Option<BestSplit>> = vec![None; frontier.len()];
        let mut scratch: Vec<Scratch> = vec![
            Scratch { run_g: 0.0, run_h: 0.0, run_cnt: 0, prev: 0.0 };
            frontier.len()
        ];
        for (f, order) in presorted.iter().enumerate() {
            for s in scratch.iter_mut() {
                *s = Scratch { run_g: 0.0, run_h: 0.0, run_cnt: 0, prev: 0.0 };
            }
            let col = cols[f];
            for &i32row in order {
                let i = i32row as usize;
                let slot = slot_of[node_of[i] as usize];
                if slot < 0 {
                    continue;
                }
                let slot = slot as usize;
                let v = col[i];
                let st = &mut scratch[slot];
                if st.run_cnt > 0 && v != st.prev {
                    let total = frontier[slot].1;
                    let threshold = st.prev + (v - st.prev) / 2.0;
                    let gain = score(st.run_g, st.run_h, p.min_leaf_weight)
                        + score(total.g - st.run_g, total.h - st.run_h, p.min_leaf_weight)
                        - score(total.g, total.h, p.min_leaf_weight);
                    let better = match best[slot] {
                        None => gain > 1e-12,
                        Some(b) => gain > b.gain,
                    };
                    if better {
                        best[slot] = Some(BestSplit {
                            gain,
                            feature: f,
                            threshold,
                            left: NodeStats {
                                g: st.run_g,
                                h: st.run_h,
                                count: st.run_cnt,
                            },
                        });
                    }
                }
                st.run_g += grad[i];
                st.run_h += hess[i];
                st.run_cnt += 1;
                st.prev = v;
            }
        }

        // realize splits, finalize the rest as leaves
        let mut next_frontier: Vec<(usize, NodeStats)> = Vec::new();
        for (slot, &(node_id, stats)) in frontier.iter().enumerate() {
            match best[slot] {
                Some(b) => {
                    let left_id = nodes.len();
                    let right_id = nodes.len() + 1;
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    slot_of.push(-1);
                    slot_of.push(-1);
                    nodes[node_id] = TreeNode::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left: left_id,
                        right: right_id,
                    };
                    let right = NodeStats {
                        g: stats.g - b.left.g,
                        h: stats.h - b.left.h,
                        count: stats.count - b.left.count,
                    };
                    next_frontier.push((left_id, b.left));
                    next_frontier.push((right_id, right));
                }
                None => {
                    nodes[node_id] = TreeNode::Leaf {
                        value: -p.eta * stats.g / (stats.h + p.min_leaf_weight),
                    };
                }
            }
        }
        for s in slot_of.iter_mut() {
            *s = -1;
        }
        for (new_slot, &(node_id, _)) in next_frontier.iter().enumerate() {
            slot_of[node_id] = new_slot as i32;
        }
        // move rows of freshly split nodes into their children
        for i in 0..n {
            let nid = node_of[i] as usize;
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = nodes[nid]
            {
                node_of[i] = if cols[feature][i] < threshold {
                    left as u32
                } else {
                    right as u32
                };
            }
        }
        frontier = next_frontier;
    }

    // depth limit reached: finalize any remaining frontier nodes
    for &(node_id, stats) in &frontier {
        nodes[node_id] = TreeNode::Leaf {
            value: -p.eta * stats.g / (stats.h + p.min_leaf_weight),
        };
    }
    for i in 0..n {
        if let TreeNode::Leaf { value } = nodes[node_of[i] as usize] {
            row_out[i] = value;
        } else {
            unreachable!("rows always end in leaves");
        }
    }
    Tree { nodes }
}

/// Sorted row indices per feature column (ties broken by row index).
pub(crate) fn presort(cols: &[&[f64]]) -> Vec<Vec<u32>> {
    cols.iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..col.len() as u32).collect();
            idx.sort_unstable_by(|&a, &b| {
                col[a as usize]
                    .partial_cmp(&col[b as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect()
}
