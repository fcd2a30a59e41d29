//! Discrete AdaBoost over depth-limited Gini trees.
//!
//! The default weak learner is a decision stump (`max_depth = 1`). Each
//! round fits a tree on the current sample weights, scores its hard votes
//! (`leaf score > 0.5`) by weighted error `e`, gives it weight
//! `alpha = ln((1 - e) / e) / 2`, and multiplies the weights of misclassified
//! rows by `exp(alpha)` and of correct rows by `exp(-alpha)`.

mod auc;
mod tree;

use std::fmt::Write as _;

pub use auc::auc;
pub use tree::{fit_tree, NodeSummary, TreeNode};

use crate::data::LabeledSplit;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_N_ESTIMATORS: usize = 50;

/// Weighted error is clamped into `[ERROR_FLOOR, 1 - ERROR_FLOOR]` before
/// computing alpha so that a perfect round still has a finite weight.
const ERROR_FLOOR: f64 = 1e-10;

/// Gini impurity `1 - sum(p_i^2)` of a class distribution.
pub fn gini(class_fractions: &[f64]) -> Result<f64> {
    if class_fractions.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidArgument("class fractions must be nonnegative".into()));
    }
    let sum: f64 = class_fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::FractionsNotNormalized(sum));
    }
    Ok(1.0 - class_fractions.iter().map(|p| p * p).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub estimators: Vec<TreeNode>,
    pub alphas: Vec<f64>,
    pub n_series: usize,
    pub max_depth: usize,
    pub n_estimators: usize,
}

impl BoostedModel {
    /// Trains on raw arrays; see [`fit_adaboost`].
    pub fn fit(x: &Matrix, y: &[u8], n_estimators: usize, max_depth: usize) -> Result<Self> {
        tree::check_inputs(x, y, None)?;
        if n_estimators == 0 {
            return Err(Error::InvalidArgument("n_estimators must be at least 1".into()));
        }
        let n_pos = y.iter().filter(|&&v| v == 1).count();
        if n_pos == 0 || n_pos == y.len() {
            return Err(Error::SingleClass);
        }

        let n = x.rows();
        let sorted = tree::SortedFeatures::new(x);
        let mut w = vec![1.0 / n as f64; n];
        let mut estimators = Vec::new();
        let mut alphas = Vec::new();

        for _ in 0..n_estimators {
            let (tree, scores) = tree::grow(x, y, &w, &sorted, max_depth);
            let wrong: Vec<bool> = scores
                .iter()
                .zip(y)
                .map(|(&s, &yi)| (s > 0.5) != (yi == 1))
                .collect();
            let error: f64 = w.iter().zip(&wrong).filter(|(_, &m)| m).map(|(wi, _)| wi).sum();

            if error >= 0.5 {
                // No better than chance. A lone estimator is still kept so the
                // model can score; its weight does not affect a one-tree vote.
                if estimators.is_empty() {
                    estimators.push(tree);
                    alphas.push(1.0);
                }
                break;
            }
            let e = error.clamp(ERROR_FLOOR, 1.0 - ERROR_FLOOR);
            let alpha = 0.5 * ((1.0 - e) / e).ln();
            estimators.push(tree);
            alphas.push(alpha);
            if error <= 0.0 {
                break;
            }

            let (up, down) = (alpha.exp(), (-alpha).exp());
            let mut total = 0.0;
            for (wi, &m) in w.iter_mut().zip(&wrong) {
                *wi *= if m { up } else { down };
                total += *wi;
            }
            for wi in &mut w {
                *wi /= total;
            }
        }

        Ok(Self {
            estimators,
            alphas,
            n_series: x.cols(),
            max_depth,
            n_estimators,
        })
    }

    /// Alpha-weighted mean of the leaf scores reached in each tree, in [0, 1].
    pub fn predict_score(&self, row: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (tree, &a) in self.estimators.iter().zip(&self.alphas) {
            num += a * tree.predict(row);
            den += a;
        }
        if den > 0.0 {
            num / den
        } else {
            0.5
        }
    }

    /// Weighted majority vote.
    pub fn predict_label(&self, row: &[f64]) -> u8 {
        u8::from(self.predict_score(row) > 0.5)
    }

    pub fn predict_scores(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_score(r)).collect()
    }

    pub fn predict_labels(&self, x: &Matrix) -> Vec<u8> {
        x.iter_rows().map(|r| self.predict_label(r)).collect()
    }

    /// Alpha-weighted impurity decrease per feature, normalized to sum to 1.
    ///
    /// Each tree's decreases are first normalized to unit total, so for stump
    /// ensembles a feature's importance is the share of alpha held by stumps
    /// splitting on it. Unused features get exactly 0. An ensemble of bare
    /// leaves has no splits and yields all zeros.
    pub fn feature_importances(&self) -> Result<Vec<f64>> {
        if self.alphas.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroAlphas);
        }
        let mut importances = vec![0.0; self.n_series];
        let mut per_tree = vec![0.0; self.n_series];
        for (tree, &a) in self.estimators.iter().zip(&self.alphas) {
            per_tree.fill(0.0);
            tree.for_each_split(&mut |feature, _, node, left, right| {
                let (l, r) = (left.summary(), right.summary());
                let gain = node.weight * node.gini - l.weight * l.gini - r.weight * r.gini;
                per_tree[feature] += gain.max(0.0);
            });
            let total: f64 = per_tree.iter().sum();
            if total > 0.0 {
                for (imp, g) in importances.iter_mut().zip(&per_tree) {
                    *imp += a * g / total;
                }
            }
        }
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            for imp in &mut importances {
                *imp /= total;
            }
        }
        Ok(importances)
    }

    /// Human-readable listing of every estimator.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, (tree, a)) in self.estimators.iter().zip(&self.alphas).enumerate() {
            let _ = writeln!(out, "estimator {i}  alpha = {a:.6}");
            for line in tree.to_string().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        out
    }
}

/// Classic discrete AdaBoost on the training half of `split`. Starts from
/// uniform weights and stops early when a round's weighted error reaches 0.5
/// (that round is dropped) or 0 (that round is kept). Deterministic.
pub fn fit_adaboost(
    split: &LabeledSplit,
    n_estimators: usize,
    max_depth: usize,
) -> Result<BoostedModel> {
    BoostedModel::fit(&split.train_x, &split.train_y, n_estimators, max_depth)
}

pub fn predict_score(model: &BoostedModel, row: &[f64]) -> f64 {
    model.predict_score(row)
}

pub fn feature_importances(model: &BoostedModel) -> Result<Vec<f64>> {
    model.feature_importances()
}
