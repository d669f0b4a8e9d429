//! Variable-usage statistics over an ensemble of fitted trees.
//!
//! Importance tells how much a predictor relies on a variable; usage tells
//! how often the trees actually touch it. A strong predictor with weak usage
//! is the signature of hidden (pairwise-hiding) variables, which is why
//! these statistics are reported side by side with importance.

use serde::Serialize;

use crate::cart::{tree_structure_report, RegressionTree};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Split tallies of one construction step across the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OperationUsage {
    /// 1-based construction step.
    pub operation_index: u32,
    /// Trees whose node at this step was split (rather than terminated).
    pub splitting_trees: u32,
    /// Among those, trees that split on a watched variable.
    pub watched_splits: u32,
}

impl OperationUsage {
    /// Proportion of watched splits among splitting trees; `None` when no
    /// tree split at this step.
    pub fn proportion(&self) -> Option<f64> {
        (self.splitting_trees > 0).then(|| self.watched_splits as f64 / self.splitting_trees as f64)
    }
}

/// Per-tree leaf-involvement shares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeUsage {
    pub tree: usize,
    pub n_leaves: usize,
    /// Share of leaves involving the k-th watched variable and no other
    /// watched variable.
    pub alone: Vec<f64>,
    /// Share of leaves involving the k-th watched variable at all.
    pub any: Vec<f64>,
    /// Share of leaves involving every watched variable jointly.
    pub joint: f64,
    /// Share of training rows residing in those joint leaves.
    pub data_fraction_joint: f64,
}

/// Ensemble-level usage statistics of a watched variable set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageReport {
    pub watched: Vec<usize>,
    /// Split-order profile, indexed by operation step.
    pub profile: Vec<OperationUsage>,
    pub trees: Vec<TreeUsage>,
    /// Mean over trees of the per-tree joint-leaf data fraction.
    pub data_fraction_joint: f64,
    /// Mean over trees of each watched variable's any-involvement share.
    pub mean_any: Vec<f64>,
    /// Mean over trees of the joint-involvement share.
    pub mean_joint: f64,
}

impl UsageReport {
    /// Pooled share of watched splits among all splits with operation index
    /// in `[from, to]` (inclusive).
    pub fn pooled_watched_share(&self, from: u32, to: u32) -> Option<f64> {
        let mut splits = 0u64;
        let mut watched = 0u64;
        for op in &self.profile {
            if op.operation_index >= from && op.operation_index <= to {
                splits += op.splitting_trees as u64;
                watched += op.watched_splits as u64;
            }
        }
        (splits > 0).then(|| watched as f64 / splits as f64)
    }

    /// Pooled watched share over the middle half of the construction,
    /// operation indices in `[K/4, 3K/4]` for the largest observed step `K`.
    pub fn mid_construction_share(&self) -> Option<f64> {
        let k = self.profile.iter().rev().find(|op| op.splitting_trees > 0)?.operation_index;
        self.pooled_watched_share(k / 4, 3 * k / 4)
    }

    /// Median over trees of the joint-involvement share.
    pub fn median_joint(&self) -> f64 {
        let mut shares: Vec<f64> = self.trees.iter().map(|t| t.joint).collect();
        shares.sort_unstable_by(f64::total_cmp);
        let n = shares.len();
        if n % 2 == 1 {
            shares[n / 2]
        } else {
            0.5 * (shares[n / 2 - 1] + shares[n / 2])
        }
    }
}

/// Aggregate per-tree structure reports into ensemble usage statistics.
///
/// `train` is the dataset the trees were grown on; it fixes the feature
/// dimension the watched set is validated against.
pub fn usage_statistics(
    trees: &[RegressionTree],
    watched: &[usize],
    train: &Dataset,
) -> Result<UsageReport> {
    if trees.is_empty() {
        return Err(Error::InvalidParams("usage statistics need at least one tree".into()));
    }
    let mut watched: Vec<usize> = watched.to_vec();
    watched.sort_unstable();
    watched.dedup();
    if watched.is_empty() {
        return Err(Error::InvalidParams("watched variable set is empty".into()));
    }
    if let Some(&bad) = watched.iter().find(|&&j| j >= train.n_features()) {
        return Err(Error::InvalidParams(format!(
            "watched variable {bad} out of range for {} features",
            train.n_features()
        )));
    }

    let mut profile: Vec<OperationUsage> = Vec::new();
    let mut tree_usage = Vec::with_capacity(trees.len());
    for (t, tree) in trees.iter().enumerate() {
        let report = tree_structure_report(tree);
        for op in &report.operations {
            let k = op.operation_index as usize;
            if profile.len() < k {
                profile.resize(
                    k,
                    OperationUsage { operation_index: 0, splitting_trees: 0, watched_splits: 0 },
                );
            }
            let slot = &mut profile[k - 1];
            slot.operation_index = op.operation_index;
            if let Some(feature) = op.split_feature {
                slot.splitting_trees += 1;
                if watched.binary_search(&feature).is_ok() {
                    slot.watched_splits += 1;
                }
            }
        }

        let n_leaves = report.leaves.len();
        let mut alone = vec![0usize; watched.len()];
        let mut any = vec![0usize; watched.len()];
        let mut joint = 0usize;
        let mut joint_rows = 0u64;
        let mut total_rows = 0u64;
        for leaf in &report.leaves {
            total_rows += leaf.n_rows as u64;
            let mut hits = 0usize;
            let mut hit_k = usize::MAX;
            for (k, &w) in watched.iter().enumerate() {
                if leaf.involved.binary_search(&w).is_ok() {
                    hits += 1;
                    hit_k = k;
                    any[k] += 1;
                }
            }
            if hits == 1 {
                alone[hit_k] += 1;
            }
            if hits == watched.len() {
                joint += 1;
                joint_rows += leaf.n_rows as u64;
            }
        }
        let share = |c: usize| c as f64 / n_leaves as f64;
        tree_usage.push(TreeUsage {
            tree: t,
            n_leaves,
            alone: alone.into_iter().map(share).collect(),
            any: any.into_iter().map(share).collect(),
            joint: share(joint),
            data_fraction_joint: joint_rows as f64 / total_rows as f64,
        });
    }

    // Operation indices are dense 1..=K across the ensemble, since every
    // tree numbers its operations consecutively from 1.
    debug_assert!(profile.iter().enumerate().all(|(i, op)| op.operation_index as usize == i + 1));

    let n_trees = trees.len() as f64;
    let mean_over = |f: &dyn Fn(&TreeUsage) -> f64| {
        tree_usage.iter().map(|t| f(t)).sum::<f64>() / n_trees
    };
    let mean_any: Vec<f64> = (0..watched.len())
        .map(|k| tree_usage.iter().map(|t| t.any[k]).sum::<f64>() / n_trees)
        .collect();
    let data_fraction_joint = mean_over(&|t| t.data_fraction_joint);
    let mean_joint = mean_over(&|t| t.joint);

    Ok(UsageReport { watched, profile, trees: tree_usage, data_fraction_joint, mean_any, mean_joint })
}
