use serde::Serialize;

use super::split::{scan_feature, NodeStats, Split};
use crate::data::{Dataset, Task};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Impurity decrease weighted by the node's share of the tree's rows.
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// P(y = 1) for classification, mean target for regression.
        value: f64,
        samples: usize,
    },
}

/// A decision tree stored as a node array with the root at index 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Builds a tree from raw nodes. Panics if a child index does not point
    /// forward into the array, which would make traversal non-terminating.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        assert!(!nodes.is_empty(), "a tree needs a root");
        for (i, node) in nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = *node {
                assert!(left > i && right > i && left < nodes.len() && right < nodes.len());
            }
        }
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Leaf value reached by row `row` of `ds`.
    #[inline]
    pub fn predict_row(&self, ds: &Dataset, row: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if ds.column(feature)[row] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub(crate) fn add_gains(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = *node {
                out[feature] += gain;
            }
        }
    }
}

pub(crate) struct GrowLimits {
    pub num_leaves: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

/// A frontier node waiting to be split. `lists[k]` holds the node's rows
/// sorted by feature `features[k]`.
struct Pending {
    node: usize,
    depth: usize,
    lists: Vec<Vec<u32>>,
    stats: NodeStats,
    split: Option<(usize, Split)>,
}

/// Grows one tree best-first on the rows flagged in `in_bag`, using only the
/// (ascending) `features`. The frontier node with the largest weighted gain
/// is split next until `num_leaves` is reached or nothing can be split.
pub(crate) fn grow(ds: &Dataset, in_bag: &[bool], features: &[usize], limits: &GrowLimits) -> Tree {
    let y = ds.target();
    let lists: Vec<Vec<u32>> = features
        .iter()
        .map(|&f| {
            ds.column_handle(f)
                .sorted_order()
                .iter()
                .copied()
                .filter(|&r| in_bag[r as usize])
                .collect()
        })
        .collect();
    let stats = NodeStats::from_rows(
        y,
        (0..in_bag.len()).filter(|&i| in_bag[i]),
    );
    let total = stats.n.max(1) as f64;

    let mut nodes = vec![leaf(&stats)];
    let mut frontier = vec![make_pending(ds, features, limits, 0, 0, lists, stats)];
    let mut leaves = 1;
    let mut left_mask = vec![false; in_bag.len()];

    while leaves < limits.num_leaves {
        // highest weighted gain; earlier nodes win ties
        let mut pick: Option<(usize, f64)> = None;
        for (k, p) in frontier.iter().enumerate() {
            if let Some((_, s)) = &p.split {
                let w = s.gain * p.stats.n as f64;
                if pick.is_none_or(|(_, best)| w > best) {
                    pick = Some((k, w));
                }
            }
        }
        let Some((k, _)) = pick else { break };
        let parent = frontier.swap_remove(k);
        let (pos, split) = parent.split.expect("picked node has a split");

        let split_list = &parent.lists[pos];
        let left_stats = NodeStats::from_rows(y, split_list[..split.n_left].iter().map(|&r| r as usize));
        let right_stats = NodeStats {
            n: parent.stats.n - left_stats.n,
            sum: parent.stats.sum - left_stats.sum,
            sumsq: parent.stats.sumsq - left_stats.sumsq,
        };
        leaves += 1;
        let depth = parent.depth + 1;
        // children that can never be split need no sorted lists
        let more = leaves < limits.num_leaves && depth < limits.max_depth;
        let grow_left = more && splittable(&left_stats, ds.task(), limits);
        let grow_right = more && splittable(&right_stats, ds.task(), limits);

        let mut left_lists = Vec::new();
        let mut right_lists = Vec::new();
        if grow_left || grow_right {
            for &r in &split_list[..split.n_left] {
                left_mask[r as usize] = true;
            }
            for list in &parent.lists {
                let mut l = Vec::with_capacity(if grow_left { split.n_left } else { 0 });
                let mut r = Vec::with_capacity(if grow_right { split.n_right } else { 0 });
                for &row in list {
                    if left_mask[row as usize] {
                        if grow_left {
                            l.push(row);
                        }
                    } else if grow_right {
                        r.push(row);
                    }
                }
                left_lists.push(l);
                right_lists.push(r);
            }
            for &r in &split_list[..split.n_left] {
                left_mask[r as usize] = false;
            }
        }

        let left_id = nodes.len();
        nodes.push(leaf(&left_stats));
        let right_id = nodes.len();
        nodes.push(leaf(&right_stats));
        nodes[parent.node] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain * parent.stats.n as f64 / total,
            left: left_id,
            right: right_id,
        };
        if grow_left {
            frontier.push(make_pending(ds, features, limits, left_id, depth, left_lists, left_stats));
        }
        if grow_right {
            frontier.push(make_pending(ds, features, limits, right_id, depth, right_lists, right_stats));
        }
        // restore creation order so gain ties resolve towards older nodes
        frontier.sort_by_key(|p| p.node);
    }
    Tree { nodes }
}

fn splittable(stats: &NodeStats, task: Task, limits: &GrowLimits) -> bool {
    stats.n >= 2 * limits.min_samples_leaf.max(1) && stats.impurity(task) > 0.0
}

fn leaf(stats: &NodeStats) -> TreeNode {
    TreeNode::Leaf {
        value: stats.mean(),
        samples: stats.n,
    }
}

fn make_pending(
    ds: &Dataset,
    features: &[usize],
    limits: &GrowLimits,
    node: usize,
    depth: usize,
    lists: Vec<Vec<u32>>,
    stats: NodeStats,
) -> Pending {
    let mut best = None;
    let mut best_pos = 0;
    if depth < limits.max_depth && stats.n >= 2 && stats.impurity(ds.task()) > 0.0 {
        for (pos, (&f, list)) in features.iter().zip(&lists).enumerate() {
            let before = best.as_ref().map(|s: &Split| s.feature);
            scan_feature(
                f,
                ds.column(f),
                ds.target(),
                list,
                ds.task(),
                &stats,
                limits.min_samples_leaf,
                &mut best,
            );
            if best.as_ref().map(|s| s.feature) != before {
                best_pos = pos;
            }
        }
    }
    Pending {
        node,
        depth,
        lists,
        stats,
        split: best.map(|s| (best_pos, s)),
    }
}
