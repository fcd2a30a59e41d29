//! Weighted Gini decision trees, grown greedily one depth level at a time.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Improvements smaller than this (relative to the total sample weight)
/// count as ties, which are resolved in favour of the earlier candidate.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Node statistics captured at training time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSummary {
    /// Training rows that reached the node.
    pub samples: usize,
    /// Share of the tree's total sample weight that reached the node.
    pub weight: f64,
    /// Weighted Gini impurity of the node.
    pub gini: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Weighted fraction of positive rows in the leaf.
        class_score: f64,
        summary: NodeSummary,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        summary: NodeSummary,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class_score, .. } => return *class_score,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn summary(&self) -> &NodeSummary {
        match self {
            TreeNode::Leaf { summary, .. } | TreeNode::Split { summary, .. } => summary,
        }
    }

    /// Number of split levels; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Calls `f` on every split node, parents before children.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64, &NodeSummary, &TreeNode, &TreeNode)) {
        if let TreeNode::Split {
            feature,
            threshold,
            summary,
            left,
            right,
        } = self
        {
            f(*feature, *threshold, summary, left, right);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        match self {
            TreeNode::Leaf {
                class_score,
                summary,
            } => writeln!(
                f,
                "{pad}leaf score = {class_score:.4}  gini = {:.4}  samples = {}",
                summary.gini, summary.samples
            ),
            TreeNode::Split {
                feature,
                threshold,
                summary,
                left,
                right,
            } => {
                writeln!(
                    f,
                    "{pad}X[{feature}] <= {threshold:.6}  gini = {:.4}  samples = {}",
                    summary.gini, summary.samples
                )?;
                left.fmt_indented(f, indent + 1)?;
                right.fmt_indented(f, indent + 1)
            }
        }
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

/// Weighted impurity `W * gini` of a node holding `pos` and `neg` weight.
#[inline]
fn weighted_gini(pos: f64, neg: f64) -> f64 {
    let pos = pos.max(0.0);
    let neg = neg.max(0.0);
    let total = pos + neg;
    if total > 0.0 {
        2.0 * pos * neg / total
    } else {
        0.0
    }
}

/// Threshold strictly between two consecutive distinct values, so that
/// `lo <= t < hi` holds even when the arithmetic midpoint rounds to `hi`.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Row indices sorted by each feature's value; built once per training set
/// and shared by every boosting round.
pub(crate) struct SortedFeatures {
    order: Vec<Vec<u32>>,
}

impl SortedFeatures {
    pub(crate) fn new(x: &Matrix) -> Self {
        let order = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
                idx
            })
            .collect();
        Self { order }
    }
}

struct ProtoNode {
    pos: f64,
    neg: f64,
    samples: usize,
    split: Option<(usize, f64, usize, usize)>,
}

impl ProtoNode {
    fn is_pure(&self) -> bool {
        self.pos <= 0.0 || self.neg <= 0.0
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
    found: bool,
}

#[derive(Clone, Copy, Default)]
struct Running {
    pos: f64,
    neg: f64,
    last: f64,
    started: bool,
}

const NO_SLOT: u32 = u32::MAX;

/// Grows a tree and returns it with the leaf score reached by every
/// training row (saves a prediction pass per boosting round).
pub(crate) fn grow(
    x: &Matrix,
    y: &[u8],
    w: &[f64],
    sorted: &SortedFeatures,
    max_depth: usize,
) -> (TreeNode, Vec<f64>) {
    let n = x.rows();
    let (mut pos, mut neg) = (0.0, 0.0);
    for (&yi, &wi) in y.iter().zip(w) {
        if yi == 1 {
            pos += wi;
        } else {
            neg += wi;
        }
    }
    let total_weight = pos + neg;
    let tol = TIE_TOLERANCE * total_weight;

    let mut nodes = vec![ProtoNode {
        pos,
        neg,
        samples: n,
        split: None,
    }];
    let mut node_of = vec![0u32; n];
    let mut frontier: Vec<usize> = if nodes[0].is_pure() { vec![] } else { vec![0] };

    for depth in 0..max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot = vec![NO_SLOT; nodes.len()];
        for (k, &id) in frontier.iter().enumerate() {
            slot[id] = k as u32;
        }
        let mut best: Vec<Candidate> = frontier
            .iter()
            .map(|&id| Candidate {
                impurity: weighted_gini(nodes[id].pos, nodes[id].neg),
                feature: 0,
                threshold: 0.0,
                found: false,
            })
            .collect();

        let mut running = vec![Running::default(); frontier.len()];
        for (f, order) in sorted.order.iter().enumerate() {
            running.fill(Running::default());
            for &i in order {
                let i = i as usize;
                let k = slot[node_of[i] as usize];
                if k == NO_SLOT {
                    continue;
                }
                let k = k as usize;
                let v = x.get(i, f);
                let r = &mut running[k];
                if r.started && v > r.last {
                    let node = &nodes[frontier[k]];
                    let imp = weighted_gini(r.pos, r.neg)
                        + weighted_gini(node.pos - r.pos, node.neg - r.neg);
                    let b = &mut best[k];
                    if imp < b.impurity - tol {
                        *b = Candidate {
                            impurity: imp,
                            feature: f,
                            threshold: midpoint(r.last, v),
                            found: true,
                        };
                    }
                }
                if y[i] == 1 {
                    r.pos += w[i];
                } else {
                    r.neg += w[i];
                }
                r.last = v;
                r.started = true;
            }
        }

        // Children get fresh ids; rows of unsplit nodes keep pointing at them.
        let mut children_of = vec![None; frontier.len()];
        for (k, &id) in frontier.iter().enumerate() {
            let b = best[k];
            if !b.found {
                continue;
            }
            let left = nodes.len();
            let right = left + 1;
            for _ in 0..2 {
                nodes.push(ProtoNode {
                    pos: 0.0,
                    neg: 0.0,
                    samples: 0,
                    split: None,
                });
            }
            nodes[id].split = Some((b.feature, b.threshold, left, right));
            children_of[k] = Some((b.feature, b.threshold, left, right));
        }
        for i in 0..n {
            let k = slot[node_of[i] as usize];
            if k == NO_SLOT {
                continue;
            }
            if let Some((f, t, left, right)) = children_of[k as usize] {
                let child = if x.get(i, f) <= t { left } else { right };
                node_of[i] = child as u32;
                let c = &mut nodes[child];
                c.samples += 1;
                if y[i] == 1 {
                    c.pos += w[i];
                } else {
                    c.neg += w[i];
                }
            }
        }

        let mut next = Vec::new();
        if depth + 1 < max_depth {
            for &(_, _, left, right) in children_of.iter().flatten() {
                for child in [left, right] {
                    if !nodes[child].is_pure() {
                        next.push(child);
                    }
                }
            }
        }
        frontier = next;
    }

    let tree = assemble(&nodes, 0, total_weight);
    let scores = node_of
        .iter()
        .map(|&id| {
            let node = &nodes[id as usize];
            class_score(node.pos, node.neg)
        })
        .collect();
    (tree, scores)
}

fn class_score(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total > 0.0 {
        pos / total
    } else {
        0.0
    }
}

fn assemble(nodes: &[ProtoNode], id: usize, total_weight: f64) -> TreeNode {
    let node = &nodes[id];
    let mass = node.pos + node.neg;
    let summary = NodeSummary {
        samples: node.samples,
        weight: if total_weight > 0.0 { mass / total_weight } else { 0.0 },
        gini: if mass > 0.0 {
            weighted_gini(node.pos, node.neg) / mass
        } else {
            0.0
        },
    };
    match node.split {
        None => TreeNode::Leaf {
            class_score: class_score(node.pos, node.neg),
            summary,
        },
        Some((feature, threshold, left, right)) => TreeNode::Split {
            feature,
            threshold,
            summary,
            left: Box::new(assemble(nodes, left, total_weight)),
            right: Box::new(assemble(nodes, right, total_weight)),
        },
    }
}

pub(crate) fn check_inputs(x: &Matrix, y: &[u8], w: Option<&[f64]>) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if let Some(w) = w {
        if w.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: w.len(),
            });
        }
        if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("sample weights must be positive".into()));
        }
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("features must be finite".into()));
    }
    Ok(())
}

/// Fits a weighted Gini tree of at most `max_depth` split levels.
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each feature. A node is split on the candidate with the lowest weighted
/// child impurity, ties going to the lowest feature index and then the
/// lowest threshold. Growth stops at `max_depth`, at pure nodes, or when no
/// candidate lowers the impurity.
pub fn fit_tree(x: &Matrix, y: &[u8], w: &[f64], max_depth: usize) -> Result<TreeNode> {
    check_inputs(x, y, Some(w))?;
    let sorted = SortedFeatures::new(x);
    Ok(grow(x, y, w, &sorted, max_depth).0)
}
