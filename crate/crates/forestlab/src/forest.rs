//! Bagged tree ensembles and their partitioned ("armed") variant.
//!
//! A [`Forest`] averages trees fit on independent resamples. An
//! [`ArmedForest`] first routes every row through a deterministic arm
//! function and trains one forest per cell of the induced partition, plus a
//! fallback forest on all rows for arm labels never seen in training. When
//! the arm function recovers the hidden structure of the data-generating
//! process, each arm sees a homogeneous regression problem that ordinary
//! greedy splitting handles well.
//!
//! Fitting is reproducible bit for bit regardless of the worker count:
//! every tree draws from its own RNG seeded by `(master seed, tree index)`,
//! and every arm derives its own master from `(master seed, arm label)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cart::{FitInput, RegressionTree, RowGrouping, TreeParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::order_insensitive_mean;
use crate::predictor::{ColumnProfile, Jump, Predictor};
use crate::rng::{derive_seed, derive_seed2, rng_from_seed, streams};

/// Model-document format version.
pub const FOREST_FORMAT_VERSION: u32 = 1;

/// How each tree's training sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resample {
    /// Bootstrap with replacement, same size as the training set.
    Bootstrap,
    /// Without replacement, keeping the given fraction of rows.
    Subsample { fraction: f64 },
}

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `max(1, floor(d / 3))`.
    pub mtry: Option<usize>,
    pub min_node_distinct: usize,
    pub max_nodes: Option<usize>,
    pub resample: Resample,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        ForestParams {
            n_trees: 1000,
            mtry: None,
            min_node_distinct: 5,
            max_nodes: None,
            resample: Resample::Bootstrap,
            seed,
        }
    }

    pub fn with_n_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_mtry(mut self, mtry: usize) -> Self {
        self.mtry = Some(mtry);
        self
    }

    /// Resolve the per-split candidate count for a given dimension.
    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry.unwrap_or_else(|| (d / 3).max(1))
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParams("n_trees must be at least 1".into()));
        }
        let mtry = self.resolved_mtry(d);
        if mtry == 0 || mtry > d {
            return Err(Error::InvalidParams(format!("mtry must lie in 1..={d}, got {mtry}")));
        }
        if let Resample::Subsample { fraction } = self.resample {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "subsample fraction must lie in (0, 1], got {fraction}"
                )));
            }
        }
        Ok(())
    }
}

/// Multiplicity of each training row in one tree's resample.
fn draw_resample(rows: &[u32], resample: Resample, n_total: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut counts = vec![0u32; n_total];
    match resample {
        Resample::Bootstrap => {
            for _ in 0..rows.len() {
                counts[rows[rng.random_range(0..rows.len())] as usize] += 1;
            }
        }
        Resample::Subsample { fraction } => {
            let k = ((fraction * rows.len() as f64).round() as usize).clamp(1, rows.len());
            let mut pool: Vec<u32> = rows.to_vec();
            for i in 0..k {
                let j = i + rng.random_range(0..pool.len() - i);
                pool.swap(i, j);
                counts[pool[i] as usize] = 1;
            }
        }
    }
    counts
}

/// A fitted bagged ensemble. Prediction is the arithmetic mean of the tree
/// predictions, accumulated in an order-insensitive way so permuting the
/// trees cannot change the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub version: u32,
    pub params: ForestParams,
    /// Feature dimension the forest was trained on.
    pub d: usize,
    /// Row count of the dataset the forest was fit from.
    pub n_data_rows: usize,
    /// Rows the forest was trained on (dataset row ids).
    pub train_rows: Vec<u32>,
    pub trees: Vec<RegressionTree>,
}

impl Forest {
    /// Fit a forest on the whole dataset.
    pub fn fit(data: &Dataset, params: &ForestParams) -> Result<Forest> {
        let grouping = RowGrouping::build(data);
        let rows: Vec<u32> = (0..data.n_rows() as u32).collect();
        Self::fit_with_grouping(data, &grouping, rows, params)
    }

    pub(crate) fn fit_with_grouping(
        data: &Dataset,
        grouping: &RowGrouping,
        train_rows: Vec<u32>,
        params: &ForestParams,
    ) -> Result<Forest> {
        let d = data.n_features();
        params.validate(d)?;
        if train_rows.is_empty() {
            return Err(Error::InvalidParams("cannot fit a forest on zero rows".into()));
        }
        let tree_params = TreeParams {
            mtry: params.resolved_mtry(d),
            min_node_distinct: params.min_node_distinct,
            max_nodes: params.max_nodes,
            seed: 0, // per-tree RNG passed explicitly below
        };
        let trees: Result<Vec<RegressionTree>> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(params.seed, streams::TREE + t as u64));
                let counts = draw_resample(&train_rows, params.resample, data.n_rows(), &mut rng);
                let input = FitInput::from_grouping(data, grouping, &counts);
                RegressionTree::fit_prepared(input, &tree_params, &mut rng)
            })
            .collect();
        Ok(Forest {
            version: FOREST_FORMAT_VERSION,
            params: params.clone(),
            d,
            n_data_rows: data.n_rows(),
            train_rows,
            trees: trees?,
        })
    }

    /// Regenerate the resample row multiplicities used by tree `t`, indexed
    /// by dataset row id.
    ///
    /// The draw is a pure function of `(seed, t)`, so the indices are not
    /// stored with the model; this replays the exact draw made at fit time.
    pub fn resample_counts(&self, t: usize) -> Vec<u32> {
        let mut rng = rng_from_seed(derive_seed(self.params.seed, streams::TREE + t as u64));
        draw_resample(&self.train_rows, self.params.resample, self.n_data_rows, &mut rng)
    }

    /// Checked single-row prediction.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {j} in prediction input")));
        }
        if x.len() != self.d {
            return Err(Error::InvalidParams(format!(
                "expected {} features, got {}",
                self.d,
                x.len()
            )));
        }
        Ok(self.predict_row(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Forest> {
        let forest: Forest = serde_json::from_str(text)?;
        if forest.version != FOREST_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported forest format version {}", forest.version)));
        }
        if forest.trees.is_empty() {
            return Err(Error::Parse("forest has no trees".into()));
        }
        for tree in &forest.trees {
            tree.validate()?;
        }
        Ok(forest)
    }
}

/// Row-block size of the tree-major batch sweeps.
const ROW_BLOCK: usize = 512;

impl Predictor for Forest {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict_row(x)).collect();
        order_insensitive_mean(&preds)
    }

    /// Tree-major batch prediction: each tree sweeps a whole row block, then
    /// every row's per-tree predictions are averaged exactly like
    /// `predict_row` (sorted, compensated), so the results match it bit for
    /// bit.
    fn predict_rows(&self, rows: &[&[f64]]) -> Vec<f64> {
        let n_trees = self.trees.len();
        let mut out = Vec::with_capacity(rows.len());
        let mut matrix = vec![0.0f64; ROW_BLOCK * n_trees];
        for block in rows.chunks(ROW_BLOCK) {
            let stripe = &mut matrix[..block.len() * n_trees];
            stripe
                .par_chunks_mut(block.len())
                .zip(self.trees.par_iter())
                .for_each(|(slot, tree)| {
                    for (bi, x) in block.iter().enumerate() {
                        slot[bi] = tree.predict_row(x);
                    }
                });
            let block_len = block.len();
            let stripe: &[f64] = stripe;
            out.par_extend((0..block_len).into_par_iter().map(|bi| {
                let mut preds: Vec<f64> =
                    (0..n_trees).map(|t| stripe[t * block_len + bi]).collect();
                preds.sort_unstable_by(f64::total_cmp);
                crate::numeric::compensated_sum(&preds) / n_trees as f64
            }));
        }
        out
    }

    fn column_profile(&self, x: &[f64], column: usize) -> Option<ColumnProfile> {
        if column >= self.d {
            return None;
        }
        let mut base = 0.0;
        let mut jumps = Vec::new();
        for tree in &self.trees {
            base += tree_column_profile(tree, x, column, &mut jumps);
        }
        Some(ColumnProfile { base, scale: 1.0 / self.trees.len() as f64, jumps })
    }

    /// Tree-major batch profiles, bit-identical to the per-row method
    /// (per-row bases accumulate and jumps append in tree order either way).
    fn column_profiles(&self, rows: &[&[f64]], column: usize) -> Option<Vec<ColumnProfile>> {
        if column >= self.d {
            return None;
        }
        let scale = 1.0 / self.trees.len() as f64;
        let mut out: Vec<ColumnProfile> = rows
            .iter()
            .map(|_| ColumnProfile { base: 0.0, scale, jumps: Vec::new() })
            .collect();
        for tree in &self.trees {
            for (profile, x) in out.iter_mut().zip(rows) {
                profile.base += tree_column_profile(tree, x, column, &mut profile.jumps);
            }
        }
        Some(out)
    }
}

/// Walk one tree with coordinate `column` treated as a free variable `v`.
/// Returns the prediction at `v = -inf` and appends one jump per reachable
/// split on the profiled column.
fn tree_column_profile(
    tree: &RegressionTree,
    x: &[f64],
    column: usize,
    jumps: &mut Vec<Jump>,
) -> f64 {
    // Stack of (node, v-interval `(lo, hi]` routed here). Intervals are
    // visited left to right because the right child is pushed first.
    let mut stack: Vec<(u32, f64, f64)> = vec![(tree.root, f64::NEG_INFINITY, f64::INFINITY)];
    let mut base = f64::NAN;
    let mut prev_value = 0.0;
    while let Some((id, lo, hi)) = stack.pop() {
        let node = &tree.nodes[id as usize];
        if node.is_leaf() {
            if base.is_nan() {
                base = node.value;
            } else {
                let delta = node.value - prev_value;
                if delta != 0.0 {
                    jumps.push(Jump { at: lo, delta });
                }
            }
            prev_value = node.value;
            continue;
        }
        let j = node.feature as usize;
        if j == column {
            // Left piece covers v <= threshold, right piece v > threshold.
            // Fitted trees always split inside the interval, but documents
            // loaded from JSON may not; prune empty sides.
            if node.threshold >= hi {
                stack.push((node.left as u32, lo, hi));
            } else if node.threshold <= lo {
                stack.push((node.right as u32, lo, hi));
            } else {
                stack.push((node.right as u32, node.threshold, hi));
                stack.push((node.left as u32, lo, node.threshold));
            }
        } else if x[j] <= node.threshold {
            stack.push((node.left as u32, lo, hi));
        } else {
            stack.push((node.right as u32, lo, hi));
        }
    }
    base
}

/// Deterministic map from feature vectors to arm labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmSpec {
    /// One bit per pair: bit `k` is set when `x[a_k] == x[b_k]`.
    /// A single pair yields the two-armed split on the agreement indicator.
    Delta { pairs: Vec<(usize, usize)> },
    /// Every row maps to the same arm (degenerate partition).
    Constant,
}

impl ArmSpec {
    /// Agreement indicator over one pair of columns (0-based).
    pub fn delta(a: usize, b: usize) -> ArmSpec {
        ArmSpec::Delta { pairs: vec![(a, b)] }
    }

    pub fn label(&self, x: &[f64]) -> u64 {
        match self {
            ArmSpec::Constant => 0,
            ArmSpec::Delta { pairs } => {
                let mut label = 0u64;
                for (k, &(a, b)) in pairs.iter().enumerate() {
                    if x[a] == x[b] {
                        label |= 1 << k;
                    }
                }
                label
            }
        }
    }

    /// Whether the arm label can depend on column `j`.
    pub fn depends_on(&self, j: usize) -> bool {
        match self {
            ArmSpec::Constant => false,
            ArmSpec::Delta { pairs } => pairs.iter().any(|&(a, b)| a == j || b == j),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if let ArmSpec::Delta { pairs } = self {
            if pairs.is_empty() {
                return Err(Error::InvalidParams("delta arm needs at least one pair".into()));
            }
            if pairs.len() > 63 {
                return Err(Error::InvalidParams("delta arm supports at most 63 pairs".into()));
            }
            for &(a, b) in pairs {
                if a >= d || b >= d {
                    return Err(Error::InvalidParams(format!(
                        "delta arm pair ({a}, {b}) out of range for {d} features"
                    )));
                }
                if a == b {
                    return Err(Error::InvalidParams(format!("delta arm pair ({a}, {a}) is trivial")));
                }
            }
        }
        Ok(())
    }
}

/// Fit summary of one arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: u64,
    pub n_rows: usize,
    /// True when the arm had fewer rows than `min_node_distinct` and was
    /// therefore trained as a single-leaf (mean) forest.
    pub degenerate: bool,
}

/// A partition of the feature space with one forest per training cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmedForest {
    pub version: u32,
    pub arm: ArmSpec,
    pub arms: BTreeMap<u64, Forest>,
    /// Trained on all rows; predicts arm labels unseen in training.
    pub fallback: Forest,
    pub report: Vec<ArmSummary>,
}

impl ArmedForest {
    /// Partition the rows by arm label and fit one forest per non-empty cell
    /// plus the fallback. Arm `k` uses master seed `derive(seed, ARM, k)`;
    /// the fallback uses `derive(seed, FALLBACK)`.
    pub fn fit(data: &Dataset, arm: ArmSpec, params: &ForestParams) -> Result<ArmedForest> {
        arm.validate(data.n_features())?;
        params.validate(data.n_features())?;
        let grouping = RowGrouping::build(data);
        let mut cells: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for i in 0..data.n_rows() {
            cells.entry(arm.label(data.row(i))).or_default().push(i as u32);
        }
        let mut arms = BTreeMap::new();
        let mut report = Vec::new();
        for (label, rows) in cells {
            let mut arm_params = params.clone();
            arm_params.seed = derive_seed2(params.seed, streams::ARM, label);
            let n_rows = rows.len();
            let forest = Forest::fit_with_grouping(data, &grouping, rows, &arm_params)?;
            report.push(ArmSummary {
                label,
                n_rows,
                degenerate: n_rows < params.min_node_distinct,
            });
            arms.insert(label, forest);
        }
        let mut fallback_params = params.clone();
        fallback_params.seed = derive_seed(params.seed, streams::FALLBACK);
        let all_rows: Vec<u32> = (0..data.n_rows() as u32).collect();
        let fallback = Forest::fit_with_grouping(data, &grouping, all_rows, &fallback_params)?;
        Ok(ArmedForest { version: FOREST_FORMAT_VERSION, arm, arms, fallback, report })
    }

    /// The forest that predicts for feature vector `x`.
    pub fn forest_for(&self, x: &[f64]) -> &Forest {
        self.arms.get(&self.arm.label(x)).unwrap_or(&self.fallback)
    }

    /// Checked single-row prediction.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {j} in prediction input")));
        }
        Ok(self.predict_row(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<ArmedForest> {
        let armed: ArmedForest = serde_json::from_str(text)?;
        if armed.version != FOREST_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported forest format version {}", armed.version)));
        }
        for tree in armed.arms.values().flat_map(|f| &f.trees).chain(&armed.fallback.trees) {
            tree.validate()?;
        }
        Ok(armed)
    }
}

impl ArmedForest {
    /// Row indices grouped by the forest that serves them, in arm order.
    fn group_rows<'a>(&self, rows: &[&'a [f64]]) -> Vec<(&Forest, Vec<usize>, Vec<&'a [f64]>)> {
        let mut groups: BTreeMap<Option<u64>, (Vec<usize>, Vec<&[f64]>)> = BTreeMap::new();
        for (i, x) in rows.iter().enumerate() {
            let label = self.arm.label(x);
            let key = self.arms.contains_key(&label).then_some(label);
            let slot = groups.entry(key).or_default();
            slot.0.push(i);
            slot.1.push(x);
        }
        groups
            .into_iter()
            .map(|(key, (idx, xs))| {
                let forest = key.map(|label| &self.arms[&label]).unwrap_or(&self.fallback);
                (forest, idx, xs)
            })
            .collect()
    }
}

impl Predictor for ArmedForest {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.forest_for(x).predict_row(x)
    }

    fn predict_rows(&self, rows: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0f64; rows.len()];
        for (forest, indices, xs) in self.group_rows(rows) {
            for (i, pred) in indices.into_iter().zip(forest.predict_rows(&xs)) {
                out[i] = pred;
            }
        }
        out
    }

    fn column_profile(&self, x: &[f64], column: usize) -> Option<ColumnProfile> {
        // Valid only when the arm routing cannot change with this column.
        if self.arm.depends_on(column) {
            return None;
        }
        self.forest_for(x).column_profile(x, column)
    }

    fn column_profiles(&self, rows: &[&[f64]], column: usize) -> Option<Vec<ColumnProfile>> {
        if self.arm.depends_on(column) {
            return None;
        }
        let mut out: Vec<Option<ColumnProfile>> = vec![None; rows.len()];
        for (forest, indices, xs) in self.group_rows(rows) {
            let profiles = forest.column_profiles(&xs, column)?;
            for (i, profile) in indices.into_iter().zip(profiles) {
                out[i] = Some(profile);
            }
        }
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_model8, BetaChoice, Model8Params};

    fn small_data(n: usize, seed: u64) -> Dataset {
        simulate_model8(n, &Model8Params::new(BetaChoice::ThreeQuarterAlpha), &mut rng_from_seed(seed))
            .unwrap()
    }

    #[test]
    fn default_mtry_is_a_third_of_dimension() {
        let params = ForestParams::new(1);
        assert_eq!(params.resolved_mtry(10), 3);
        assert_eq!(params.resolved_mtry(2), 1);
        assert_eq!(params.with_mtry(7).resolved_mtry(10), 7);
    }

    #[test]
    fn single_tree_full_subsample_equals_that_tree() {
        let data = small_data(300, 1);
        let params = ForestParams {
            n_trees: 1,
            mtry: Some(3),
            min_node_distinct: 5,
            max_nodes: None,
            resample: Resample::Subsample { fraction: 1.0 },
            seed: 77,
        };
        let forest = Forest::fit(&data, &params).unwrap();
        assert_eq!(forest.trees.len(), 1);
        for i in 0..data.n_rows() {
            let x = data.row(i);
            assert_eq!(forest.predict_row(x), forest.trees[0].predict_row(x));
        }
    }

    #[test]
    fn mean_of_two_constant_trees() {
        let data = small_data(100, 2);
        let mut forest = Forest::fit(&data, &ForestParams::new(5).with_n_trees(2)).unwrap();
        // Replace both trees by single leaves predicting 1.0 and 3.0.
        for (tree, value) in forest.trees.iter_mut().zip([1.0, 3.0]) {
            tree.nodes.truncate(1);
            tree.nodes[0].feature = -1;
            tree.nodes[0].left = -1;
            tree.nodes[0].right = -1;
            tree.nodes[0].value = value;
        }
        assert_eq!(forest.predict_row(data.row(0)), 2.0);
    }

    #[test]
    fn prediction_is_invariant_under_tree_permutation() {
        let data = small_data(400, 3);
        let params = ForestParams::new(9).with_n_trees(24).with_mtry(3);
        let forest = Forest::fit(&data, &params).unwrap();
        let mut shuffled = forest.clone();
        shuffled.trees.reverse();
        shuffled.trees.swap(1, 17);
        for i in 0..50 {
            let a = forest.predict_row(data.row(i));
            let b = shuffled.predict_row(data.row(i));
            assert_eq!(a.to_bits(), b.to_bits(), "row {i}");
        }
    }

    #[test]
    fn fit_is_identical_for_any_worker_count() {
        let data = small_data(500, 4);
        let params = ForestParams::new(12).with_n_trees(16).with_mtry(3);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| Forest::fit(&data, &params)).unwrap();
        let b = four.install(|| Forest::fit(&data, &params)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resample_counts_replay_the_fit_draw() {
        let data = small_data(200, 5);
        let params = ForestParams::new(3).with_n_trees(4).with_mtry(2);
        let forest = Forest::fit(&data, &params).unwrap();
        for t in 0..4 {
            let counts = forest.resample_counts(t);
            assert_eq!(counts.iter().map(|&c| c as usize).sum::<usize>(), data.n_rows());
            // Refitting the tree from the replayed counts reproduces it.
            let grouping = RowGrouping::build(&data);
            let mut rng = rng_from_seed(derive_seed(params.seed, streams::TREE + t as u64));
            let replay = draw_resample(
                &(0..data.n_rows() as u32).collect::<Vec<_>>(),
                params.resample,
                data.n_rows(),
                &mut rng,
            );
            assert_eq!(counts, replay);
            let input = FitInput::from_grouping(&data, &grouping, &replay);
            let tree_params = TreeParams {
                mtry: 2,
                min_node_distinct: 5,
                max_nodes: None,
                seed: 0,
            };
            let tree = RegressionTree::fit_prepared(input, &tree_params, &mut rng).unwrap();
            assert_eq!(tree, forest.trees[t]);
        }
    }

    #[test]
    fn subsample_draws_expected_count_without_replacement() {
        let rows: Vec<u32> = (0..100).collect();
        let mut rng = rng_from_seed(8);
        let counts = draw_resample(&rows, Resample::Subsample { fraction: 0.37 }, 100, &mut rng);
        assert!(counts.iter().all(|&c| c <= 1));
        assert_eq!(counts.iter().sum::<u32>(), 37);
    }

    #[test]
    fn forest_json_round_trip() {
        let data = small_data(150, 6);
        let params = ForestParams::new(21).with_n_trees(3).with_mtry(2);
        let forest = Forest::fit(&data, &params).unwrap();
        let back = Forest::from_json(&forest.to_json().unwrap()).unwrap();
        assert_eq!(forest, back);
        let mut doc: serde_json::Value = serde_json::from_str(&forest.to_json().unwrap()).unwrap();
        doc["version"] = serde_json::json!(999);
        assert!(Forest::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn armed_forest_routes_and_falls_back() {
        let data = small_data(600, 7);
        let params = ForestParams::new(31).with_n_trees(8).with_mtry(3);
        let armed = ArmedForest::fit(&data, ArmSpec::delta(0, 1), &params).unwrap();
        assert_eq!(armed.arms.len(), 2);
        assert_eq!(armed.report.len(), 2);
        assert_eq!(armed.report.iter().map(|a| a.n_rows).sum::<usize>(), data.n_rows());
        // Rows route to the forest of their own label.
        let x = data.row(0);
        let label = armed.arm.label(x);
        assert_eq!(armed.predict_row(x), armed.arms[&label].predict_row(x));
        // A label unseen in training falls back to the global forest.
        let mut impossible = ArmedForest {
            version: FOREST_FORMAT_VERSION,
            arm: ArmSpec::delta(0, 1),
            arms: BTreeMap::new(),
            fallback: armed.fallback.clone(),
            report: Vec::new(),
        };
        impossible.arms.insert(99, armed.arms[&0].clone());
        assert_eq!(impossible.predict_row(x), impossible.fallback.predict_row(x));
    }

    #[test]
    fn constant_arm_equals_plain_forest_with_derived_seed() {
        let data = small_data(300, 8);
        let params = ForestParams::new(17).with_n_trees(5).with_mtry(3);
        let armed = ArmedForest::fit(&data, ArmSpec::Constant, &params).unwrap();
        let mut plain_params = params.clone();
        plain_params.seed = derive_seed2(params.seed, streams::ARM, 0);
        let plain = Forest::fit(&data, &plain_params).unwrap();
        assert_eq!(armed.arms[&0], plain);
        for i in 0..20 {
            assert_eq!(armed.predict_row(data.row(i)), plain.predict_row(data.row(i)));
        }
    }

    #[test]
    fn tiny_arm_becomes_flagged_mean_predictor() {
        // Construct data where one arm has just two rows.
        let mut features = Vec::new();
        let mut response = Vec::new();
        for i in 0..40 {
            let (a, b) = if i < 2 { (1.0, 1.0) } else { (0.0, 1.0) };
            features.extend_from_slice(&[a, b, i as f64]);
            response.push(if i < 2 { 10.0 + i as f64 } else { i as f64 });
        }
        let data = Dataset::new(features, response, Dataset::default_names(3)).unwrap();
        let params = ForestParams {
            n_trees: 3,
            mtry: Some(1),
            min_node_distinct: 5,
            max_nodes: None,
            resample: Resample::Bootstrap,
            seed: 2,
        };
        let armed = ArmedForest::fit(&data, ArmSpec::delta(0, 1), &params).unwrap();
        let tiny = armed.report.iter().find(|a| a.label == 1).unwrap();
        assert_eq!(tiny.n_rows, 2);
        assert!(tiny.degenerate);
        for tree in &armed.arms[&1].trees {
            assert_eq!(tree.nodes.len(), 1);
        }
        let big = armed.report.iter().find(|a| a.label == 0).unwrap();
        assert!(!big.degenerate);
    }

    #[test]
    fn armed_rejects_bad_specs() {
        let data = small_data(50, 9);
        let params = ForestParams::new(1).with_n_trees(1);
        assert!(ArmedForest::fit(&data, ArmSpec::delta(0, 12), &params).is_err());
        assert!(ArmedForest::fit(&data, ArmSpec::delta(3, 3), &params).is_err());
        assert!(ArmedForest::fit(&data, ArmSpec::Delta { pairs: vec![] }, &params).is_err());
    }

    #[test]
    fn column_profile_matches_direct_substitution() {
        let data = small_data(400, 10);
        let params = ForestParams::new(23).with_n_trees(12).with_mtry(3);
        let forest = Forest::fit(&data, &params).unwrap();
        let column = 4;
        let values = data.column(column);
        for i in (0..data.n_rows()).step_by(37) {
            let profile = forest.column_profile(data.row(i), column).unwrap().merge();
            let mut x = data.row(i).to_vec();
            for &v in values.iter().step_by(29) {
                x[column] = v;
                let direct = forest.predict_row(&x);
                let fast = profile.eval(v);
                assert!(
                    (direct - fast).abs() < 1e-9,
                    "row {i}, v {v}: {direct} vs {fast}"
                );
            }
        }
    }

    #[test]
    fn armed_profile_refuses_arm_columns() {
        let data = small_data(200, 11);
        let params = ForestParams::new(3).with_n_trees(2).with_mtry(3);
        let armed = ArmedForest::fit(&data, ArmSpec::delta(0, 1), &params).unwrap();
        assert!(armed.column_profile(data.row(0), 0).is_none());
        assert!(armed.column_profile(data.row(0), 1).is_none());
        assert!(armed.column_profile(data.row(0), 5).is_some());
    }
}
