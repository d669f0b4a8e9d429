//! Regression trees grown by greedy variance reduction.
//!
//! Nodes are processed in first-in-first-out order, so the recorded
//! `operation_index` of a node tells at which step of the construction it was
//! split or terminated; the diagnostics module turns that into split-order
//! profiles. At each node `mtry` candidate features are drawn without
//! replacement, every midpoint between consecutive distinct values of a
//! candidate is scored by the reduction in summed squared error, and the node
//! is split when a strictly positive reduction exists and it still holds
//! enough distinct observations.
//!
//! Rows with identical feature vectors can never be separated by an axis
//! split, so the engine folds them (and repeated bootstrap draws) into
//! weighted entries; "distinct observations" is then simply the entry count
//! of a node. Each feature keeps a value-sorted entry order that is
//! stably partitioned at every split, which avoids per-node sorting.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Tree-growing parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Candidate features drawn (without replacement) at every node.
    pub mtry: usize,
    /// Minimum number of distinct observations a node must hold to be split.
    pub min_node_distinct: usize,
    /// Optional cap on the total number of nodes.
    pub max_nodes: Option<usize>,
    /// Seed of the node-level feature draws.
    pub seed: u64,
}

impl TreeParams {
    pub fn new(mtry: usize, seed: u64) -> Self {
        TreeParams { mtry, min_node_distinct: 5, max_nodes: None, seed }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.mtry == 0 || self.mtry > d {
            return Err(Error::InvalidParams(format!(
                "mtry must lie in 1..={d}, got {}",
                self.mtry
            )));
        }
        if self.min_node_distinct < 2 {
            return Err(Error::InvalidParams("min_node_distinct must be at least 2".into()));
        }
        Ok(())
    }
}

/// One node of a fitted tree. Leaves carry `feature == -1` and no children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature index, `-1` for leaves.
    pub feature: i32,
    /// Split threshold; rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Child node ids, `-1` for leaves.
    pub left: i32,
    pub right: i32,
    /// Mean response of the (weighted) training rows routed here.
    pub value: f64,
    /// Number of training rows routed here, counting bootstrap multiplicity.
    pub n_rows: u32,
    /// 1-based processing order; the k-th processed node has index k.
    pub operation_index: u32,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.feature < 0
    }
}

/// A fitted regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub root: u32,
}

/// Best split of a row set: feature, threshold, and the reduction in total
/// squared error it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub sse_gain: f64,
}

/// Rows grouped by identical feature vectors, with per-feature value orders.
/// Built once per dataset and shared by every tree of a forest.
pub(crate) struct RowGrouping {
    /// Group id of each dataset row.
    group_of: Vec<u32>,
    /// Representative dataset row of each group.
    rep: Vec<u32>,
    /// Per feature: group ids sorted by the feature value (ties by group id).
    order: Vec<Vec<u32>>,
}

impl RowGrouping {
    pub(crate) fn build(data: &Dataset) -> Self {
        let n = data.n_rows();
        let mut sorted_rows: Vec<u32> = (0..n as u32).collect();
        sorted_rows.sort_unstable_by(|&a, &b| {
            let ra = data.row(a as usize);
            let rb = data.row(b as usize);
            for (x, y) in ra.iter().zip(rb) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        });
        let mut group_of = vec![0u32; n];
        let mut rep: Vec<u32> = Vec::new();
        for &i in &sorted_rows {
            let is_new = match rep.last() {
                None => true,
                Some(&prev) => data.row(prev as usize) != data.row(i as usize),
            };
            if is_new {
                rep.push(i);
            }
            group_of[i as usize] = (rep.len() - 1) as u32;
        }
        let order = (0..data.n_features())
            .map(|j| {
                let mut idx: Vec<u32> = (0..rep.len() as u32).collect();
                idx.sort_unstable_by(|&a, &b| {
                    data.row(rep[a as usize] as usize)[j]
                        .total_cmp(&data.row(rep[b as usize] as usize)[j])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        RowGrouping { group_of, rep, order }
    }

    pub(crate) fn n_groups(&self) -> usize {
        self.rep.len()
    }
}

/// A feature value paired with the entry it belongs to, kept inline so split
/// scans stream through memory.
#[derive(Clone, Copy)]
struct SortedEntry {
    value: f64,
    entry: u32,
}

/// Weighted, deduplicated training rows of one tree fit.
pub(crate) struct FitInput<'a> {
    data: &'a Dataset,
    /// Representative dataset row of each entry.
    row: Vec<u32>,
    weight: Vec<f64>,
    wy: Vec<f64>,
    sorted: Vec<Vec<SortedEntry>>,
}

impl<'a> FitInput<'a> {
    /// Fold row multiplicities into weighted entries. `counts[i]` is the
    /// multiplicity of dataset row `i`; rows with count zero are dropped.
    pub(crate) fn from_grouping(
        data: &'a Dataset,
        grouping: &RowGrouping,
        counts: &[u32],
    ) -> Self {
        debug_assert_eq!(counts.len(), data.n_rows());
        let n_groups = grouping.n_groups();
        let mut g_weight = vec![0.0f64; n_groups];
        let mut g_wy = vec![0.0f64; n_groups];
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                let g = grouping.group_of[i] as usize;
                let w = c as f64;
                g_weight[g] += w;
                g_wy[g] += w * data.response()[i];
            }
        }
        let mut entry_of = vec![u32::MAX; n_groups];
        let mut row = Vec::new();
        let mut weight = Vec::new();
        let mut wy = Vec::new();
        for g in 0..n_groups {
            if g_weight[g] > 0.0 {
                entry_of[g] = row.len() as u32;
                row.push(grouping.rep[g]);
                weight.push(g_weight[g]);
                wy.push(g_wy[g]);
            }
        }
        let sorted = grouping
            .order
            .iter()
            .enumerate()
            .map(|(j, order)| {
                order
                    .iter()
                    .filter(|&&g| entry_of[g as usize] != u32::MAX)
                    .map(|&g| SortedEntry {
                        value: data.row(grouping.rep[g as usize] as usize)[j],
                        entry: entry_of[g as usize],
                    })
                    .collect()
            })
            .collect();
        FitInput { data, row, weight, wy, sorted }
    }

    pub(crate) fn from_counts(data: &'a Dataset, counts: &[u32]) -> Self {
        let grouping = RowGrouping::build(data);
        Self::from_grouping(data, &grouping, counts)
    }

    fn n_entries(&self) -> usize {
        self.row.len()
    }
}

/// Tolerance below which a squared-error reduction counts as zero. Scaled by
/// the node's squared-sum magnitude so constant responses never split on
/// rounding noise.
fn gain_tolerance(scale: f64) -> f64 {
    1e-9 * (1.0 + scale.abs())
}

/// Band within which two gains count as tied, so the documented tie-break
/// (lowest feature, then smallest threshold) wins even when the two
/// candidates induce the same partition and differ only by summation
/// rounding.
fn tie_band(scale: f64) -> f64 {
    1e-12 * (1.0 + scale.abs())
}

struct NodeTask {
    node_id: usize,
    lo: usize,
    hi: usize,
    sum_w: f64,
    sum_y: f64,
}

/// Working state of one tree fit. Node `[lo, hi)` occupies the same index
/// range in every per-feature order; splits stably partition those ranges.
struct TreeBuilder<'a> {
    input: &'a FitInput<'a>,
    d: usize,
    sorted: Vec<Vec<SortedEntry>>,
    scratch: Vec<SortedEntry>,
    goes_left: Vec<bool>,
    candidates: Vec<usize>,
    feature_pool: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn new(input: &'a FitInput<'a>, sorted: Vec<Vec<SortedEntry>>) -> Self {
        let d = input.data.n_features();
        let m = input.n_entries();
        TreeBuilder {
            input,
            d,
            sorted,
            scratch: Vec::with_capacity(m),
            goes_left: vec![false; m],
            candidates: Vec::with_capacity(d),
            feature_pool: (0..d).collect(),
        }
    }

    /// Draw `mtry` candidate features uniformly without replacement.
    fn draw_candidates(&mut self, mtry: usize, rng: &mut impl Rng) {
        let d = self.d;
        let take = mtry.min(d);
        for k in 0..take {
            let j = k + rng.random_range(0..d - k);
            self.feature_pool.swap(k, j);
        }
        self.candidates.clear();
        self.candidates.extend_from_slice(&self.feature_pool[..take]);
        // Ascending evaluation order makes the lowest-index feature win ties.
        self.candidates.sort_unstable();
    }

    /// Scan one feature's sorted range for its best threshold.
    fn scan_feature(
        &self,
        j: usize,
        lo: usize,
        hi: usize,
        sum_w: f64,
        sum_y: f64,
    ) -> Option<(f64, f64)> {
        let order = &self.sorted[j][lo..hi];
        let parent_score = sum_y * sum_y / sum_w;
        let tol = gain_tolerance(parent_score);
        let band = tie_band(parent_score);
        let mut best: Option<(f64, f64)> = None;
        let mut wl = 0.0;
        let mut yl = 0.0;
        let mut prev_value = order[0].value;
        for se in order {
            if se.value > prev_value {
                // Candidate threshold between two distinct values.
                let wr = sum_w - wl;
                let yr = sum_y - yl;
                let gain = yl * yl / wl + yr * yr / wr - parent_score;
                let better = match best {
                    None => gain > tol,
                    Some((_, g)) => gain > g + band,
                };
                if better {
                    let mid = 0.5 * (prev_value + se.value);
                    // Keep the threshold strictly below the upper value so
                    // both children stay non-empty under the <= routing rule.
                    let threshold = if mid < se.value { mid } else { prev_value };
                    best = Some((threshold, gain));
                }
                prev_value = se.value;
            }
            let e = se.entry as usize;
            wl += self.input.weight[e];
            yl += self.input.wy[e];
        }
        best.filter(|&(_, g)| g > tol)
    }

    /// Best split over the drawn candidates; ties go to the lowest feature
    /// index and then the smallest threshold (candidates are scanned in
    /// ascending feature order with ascending thresholds, and a later
    /// candidate must be strictly better to replace the incumbent).
    fn best_split(&self, lo: usize, hi: usize, sum_w: f64, sum_y: f64) -> Option<Split> {
        let band = tie_band(sum_y * sum_y / sum_w);
        let mut best: Option<Split> = None;
        for &j in &self.candidates {
            if let Some((threshold, gain)) = self.scan_feature(j, lo, hi, sum_w, sum_y) {
                let better = match &best {
                    None => true,
                    Some(b) => gain > b.sse_gain + band,
                };
                if better {
                    best = Some(Split { feature: j, threshold, sse_gain: gain });
                }
            }
        }
        best
    }

    /// Stably partition every feature order of `[lo, hi)` into rows routed
    /// left and right of the split; returns the left entry count and the
    /// left weight/response sums.
    fn apply_split(&mut self, lo: usize, hi: usize, split: &Split) -> (usize, f64, f64) {
        let mut n_left = 0usize;
        let mut wl = 0.0;
        let mut yl = 0.0;
        for se in &self.sorted[split.feature][lo..hi] {
            let left = se.value <= split.threshold;
            self.goes_left[se.entry as usize] = left;
            if left {
                n_left += 1;
                wl += self.input.weight[se.entry as usize];
                yl += self.input.wy[se.entry as usize];
            }
        }
        for j in 0..self.d {
            self.scratch.clear();
            let range = &mut self.sorted[j][lo..hi];
            let mut write = 0usize;
            for k in 0..range.len() {
                let se = range[k];
                if self.goes_left[se.entry as usize] {
                    range[write] = se;
                    write += 1;
                } else {
                    self.scratch.push(se);
                }
            }
            range[write..].copy_from_slice(&self.scratch);
        }
        (n_left, wl, yl)
    }
}

impl RegressionTree {
    /// Fit a tree on the whole dataset (each row with weight one).
    pub fn fit(data: &Dataset, params: &TreeParams) -> Result<RegressionTree> {
        let counts = vec![1u32; data.n_rows()];
        let input = FitInput::from_counts(data, &counts);
        Self::fit_prepared(input, params, &mut rng_from_seed(params.seed))
    }

    /// Fit on prepared weighted entries with an explicit RNG (the forest
    /// layer owns resampling and seed derivation).
    pub(crate) fn fit_prepared(
        mut input: FitInput<'_>,
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> Result<RegressionTree> {
        params.validate(input.data.n_features())?;
        if input.n_entries() == 0 {
            return Err(Error::InvalidParams("cannot fit a tree on zero rows".into()));
        }
        let sorted = std::mem::take(&mut input.sorted);
        let mut builder = TreeBuilder::new(&input, sorted);
        let total_w: f64 = input.weight.iter().sum();
        let total_y: f64 = input.wy.iter().sum();

        let mut nodes: Vec<Node> = Vec::new();
        nodes.push(Node {
            feature: -1,
            threshold: 0.0,
            left: -1,
            right: -1,
            value: total_y / total_w,
            n_rows: total_w as u32,
            operation_index: 0,
        });
        let mut queue = VecDeque::new();
        queue.push_back(NodeTask {
            node_id: 0,
            lo: 0,
            hi: input.n_entries(),
            sum_w: total_w,
            sum_y: total_y,
        });

        let mut op = 0u32;
        while let Some(task) = queue.pop_front() {
            op += 1;
            nodes[task.node_id].operation_index = op;
            builder.draw_candidates(params.mtry, rng);
            let distinct = task.hi - task.lo;
            let capped = params.max_nodes.is_some_and(|cap| nodes.len() + 2 > cap);
            if distinct < params.min_node_distinct || capped {
                continue;
            }
            let Some(split) = builder.best_split(task.lo, task.hi, task.sum_w, task.sum_y) else {
                continue;
            };
            let (n_left, wl, yl) = builder.apply_split(task.lo, task.hi, &split);
            debug_assert!(n_left > 0 && n_left < distinct);
            let (wr, yr) = (task.sum_w - wl, task.sum_y - yl);
            let left_id = nodes.len();
            nodes.push(Node {
                feature: -1,
                threshold: 0.0,
                left: -1,
                right: -1,
                value: yl / wl,
                n_rows: wl as u32,
                operation_index: 0,
            });
            let right_id = nodes.len();
            nodes.push(Node {
                feature: -1,
                threshold: 0.0,
                left: -1,
                right: -1,
                value: yr / wr,
                n_rows: wr as u32,
                operation_index: 0,
            });
            let node = &mut nodes[task.node_id];
            node.feature = split.feature as i32;
            node.threshold = split.threshold;
            node.left = left_id as i32;
            node.right = right_id as i32;
            queue.push_back(NodeTask {
                node_id: left_id,
                lo: task.lo,
                hi: task.lo + n_left,
                sum_w: wl,
                sum_y: yl,
            });
            queue.push_back(NodeTask {
                node_id: right_id,
                lo: task.lo + n_left,
                hi: task.hi,
                sum_w: wr,
                sum_y: yr,
            });
        }
        Ok(RegressionTree { nodes, root: 0 })
    }

    /// Route a feature vector to its leaf and return the leaf mean.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {j} in prediction input")));
        }
        Ok(self.predict_row(x))
    }

    /// Infallible routing; inputs are assumed finite (dataset-backed callers
    /// have already validated them).
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_of(x)].value
    }

    /// Leaf node id a feature vector routes to.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut id = self.root as usize;
        loop {
            let n = &self.nodes[id];
            if n.is_leaf() {
                return id;
            }
            id = if x[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Serialize as a JSON document (node array with explicit child indices).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<RegressionTree> {
        let tree: RegressionTree = serde_json::from_str(text)?;
        tree.validate()?;
        Ok(tree)
    }

    /// Structural checks used when deserializing untrusted documents.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Parse("tree has no nodes".into()));
        }
        if self.root as usize >= self.nodes.len() {
            return Err(Error::Parse("root index out of range".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.value.is_finite() {
                return Err(Error::Parse(format!("node {i} has non-finite value")));
            }
            if n.is_leaf() {
                if n.left != -1 || n.right != -1 {
                    return Err(Error::Parse(format!("leaf {i} has children")));
                }
            } else {
                if !n.threshold.is_finite() {
                    return Err(Error::Parse(format!("split {i} has non-finite threshold")));
                }
                for child in [n.left, n.right] {
                    if child < 0 || child as usize >= self.nodes.len() {
                        return Err(Error::Parse(format!("split {i} has bad child {child}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Best split over an explicit candidate set on a plain (unit-weight) row
/// subset. Returns `None` when no candidate strictly reduces squared error.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    candidate_features: &[usize],
) -> Result<Option<Split>> {
    if rows.is_empty() {
        return Err(Error::InvalidParams("best_split needs at least one row".into()));
    }
    for &j in candidate_features {
        if j >= data.n_features() {
            return Err(Error::InvalidParams(format!("candidate feature {j} out of range")));
        }
    }
    let mut counts = vec![0u32; data.n_rows()];
    for &r in rows {
        counts[r] += 1;
    }
    let mut input = FitInput::from_counts(data, &counts);
    let sorted = std::mem::take(&mut input.sorted);
    let builder = TreeBuilder::new(&input, sorted);
    let sum_w: f64 = input.weight.iter().sum();
    let sum_y: f64 = input.wy.iter().sum();
    let mut features: Vec<usize> = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();
    let band = tie_band(sum_y * sum_y / sum_w);
    let mut best: Option<Split> = None;
    for &j in &features {
        if let Some((threshold, gain)) = builder.scan_feature(j, 0, input.n_entries(), sum_w, sum_y)
        {
            let better = match &best {
                None => true,
                Some(b) => gain > b.sse_gain + band,
            };
            if better {
                best = Some(Split { feature: j, threshold, sse_gain: gain });
            }
        }
    }
    Ok(best)
}

/// Per-operation split record of a fitted tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationRecord {
    pub operation_index: u32,
    /// Feature split at this operation, or `None` if the node terminated.
    pub split_feature: Option<usize>,
}

/// Per-leaf record: the features on the root-to-leaf path and the leaf size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafRecord {
    pub node_id: usize,
    /// Sorted, deduplicated feature indices appearing on the path.
    pub involved: Vec<usize>,
    pub n_rows: u32,
}

/// Split-order sequence and per-leaf involvement sets of a fitted tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeStructureReport {
    pub operations: Vec<OperationRecord>,
    pub leaves: Vec<LeafRecord>,
}

/// Walk a fitted tree and report, per operation, whether it split and on
/// which feature, and per leaf, the set of features on its path.
pub fn tree_structure_report(tree: &RegressionTree) -> TreeStructureReport {
    let mut operations: Vec<OperationRecord> = tree
        .nodes
        .iter()
        .map(|n| OperationRecord {
            operation_index: n.operation_index,
            split_feature: if n.is_leaf() { None } else { Some(n.feature as usize) },
        })
        .collect();
    operations.sort_unstable_by_key(|r| r.operation_index);

    let mut leaves = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(tree.root as usize, Vec::new())];
    while let Some((id, path)) = stack.pop() {
        let node = &tree.nodes[id];
        if node.is_leaf() {
            leaves.push(LeafRecord { node_id: id, involved: path, n_rows: node.n_rows });
        } else {
            let mut next = path.clone();
            let f = node.feature as usize;
            if let Err(pos) = next.binary_search(&f) {
                next.insert(pos, f);
            }
            stack.push((node.right as usize, next.clone()));
            stack.push((node.left as usize, next));
        }
    }
    leaves.sort_unstable_by_key(|l| l.node_id);
    TreeStructureReport { operations, leaves }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_from(rows: &[(&[f64], f64)]) -> Dataset {
        let d = rows[0].0.len();
        let mut features = Vec::new();
        let mut response = Vec::new();
        for (x, y) in rows {
            features.extend_from_slice(x);
            response.push(*y);
        }
        Dataset::new(features, response, Dataset::default_names(d)).unwrap()
    }

    #[test]
    fn two_point_split_is_perfect() {
        let data = data_from(&[(&[0.0], 0.0), (&[1.0], 1.0)]);
        let split = best_split(&data, &[0, 1], &[0]).unwrap().unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 0.5);
        // Parent SSE is 0.5, both children are pure.
        assert!((split.sse_gain - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_response_yields_no_split() {
        let data = data_from(&[(&[0.0], 3.3), (&[1.0], 3.3), (&[2.0], 3.3)]);
        assert!(best_split(&data, &[0, 1, 2], &[0]).unwrap().is_none());
    }

    #[test]
    fn xor_data_hides_from_single_feature() {
        let data = data_from(&[
            (&[0.0, 0.0], 0.0),
            (&[0.0, 1.0], 1.0),
            (&[1.0, 0.0], 1.0),
            (&[1.0, 1.0], 0.0),
        ]);
        // Either feature alone gives zero gain; both children keep mean 1/2.
        assert!(best_split(&data, &[0, 1, 2, 3], &[0]).unwrap().is_none());
        assert!(best_split(&data, &[0, 1, 2, 3], &[1]).unwrap().is_none());
    }

    #[test]
    fn ties_break_to_lowest_feature_then_smallest_threshold() {
        // Both features separate the response equally well.
        let data = data_from(&[(&[0.0, 0.0], 0.0), (&[1.0, 1.0], 1.0)]);
        let split = best_split(&data, &[0, 1], &[1, 0]).unwrap().unwrap();
        assert_eq!(split.feature, 0);
        // A feature offering two equally good thresholds takes the smaller.
        let data = data_from(&[
            (&[0.0], 0.0),
            (&[1.0], 1.0),
            (&[2.0], 1.0),
            (&[3.0], 2.0),
        ]);
        let split = best_split(&data, &[0, 1, 2, 3], &[0]).unwrap().unwrap();
        assert_eq!(split.threshold, 0.5);
    }

    #[test]
    fn stopping_rule_fires_below_min_distinct() {
        let data = data_from(&[
            (&[0.0], 0.0),
            (&[1.0], 1.0),
            (&[2.0], 2.0),
            (&[3.0], 3.0),
        ]);
        let params = TreeParams::new(1, 7);
        let tree = RegressionTree::fit(&data, &params).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert!(tree.nodes[0].is_leaf());
        assert_eq!(tree.nodes[0].value, 1.5);
        assert_eq!(tree.nodes[0].operation_index, 1);
    }

    #[test]
    fn full_mtry_interpolates_distinct_rows() {
        let data = data_from(&[
            (&[0.0, 5.0], 1.0),
            (&[1.0, 4.0], 2.0),
            (&[2.0, 3.0], -1.0),
            (&[3.0, 2.0], 4.0),
            (&[4.0, 1.0], 0.5),
            (&[5.0, 0.0], 3.0),
        ]);
        let params = TreeParams { mtry: 2, min_node_distinct: 2, max_nodes: None, seed: 1 };
        let tree = RegressionTree::fit(&data, &params).unwrap();
        for i in 0..data.n_rows() {
            let pred = tree.predict_row(data.row(i));
            assert_eq!(pred, data.response()[i]);
        }
    }

    #[test]
    fn duplicate_rows_fold_into_weighted_leaves() {
        // Two identical feature vectors with different responses cannot be
        // separated; the leaf predicts their weighted mean.
        let data = data_from(&[
            (&[1.0], 2.0),
            (&[1.0], 4.0),
            (&[0.0], 0.0),
        ]);
        let params = TreeParams { mtry: 1, min_node_distinct: 2, max_nodes: None, seed: 0 };
        let tree = RegressionTree::fit(&data, &params).unwrap();
        assert_eq!(tree.predict_row(&[1.0]), 3.0);
        assert_eq!(tree.predict_row(&[0.0]), 0.0);
        let total: u32 = tree.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.n_rows).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn repeated_fits_with_same_seed_are_identical() {
        let data = crate::sim::simulate_model8(
            200,
            &crate::sim::Model8Params::new(crate::sim::BetaChoice::ThreeQuarterAlpha),
            &mut rng_from_seed(5),
        )
        .unwrap();
        let params = TreeParams::new(3, 99);
        let a = RegressionTree::fit(&data, &params).unwrap();
        let b = RegressionTree::fit(&data, &params).unwrap();
        assert_eq!(a, b);
        let different = RegressionTree::fit(&data, &TreeParams::new(3, 100)).unwrap();
        assert_ne!(a, different);
    }

    #[test]
    fn prediction_routes_by_threshold_with_left_ties() {
        let tree = RegressionTree {
            nodes: vec![
                Node {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    value: 0.5,
                    n_rows: 2,
                    operation_index: 1,
                },
                Node {
                    feature: -1,
                    threshold: 0.0,
                    left: -1,
                    right: -1,
                    value: 0.0,
                    n_rows: 1,
                    operation_index: 2,
                },
                Node {
                    feature: -1,
                    threshold: 0.0,
                    left: -1,
                    right: -1,
                    value: 1.0,
                    n_rows: 1,
                    operation_index: 3,
                },
            ],
            root: 0,
        };
        assert_eq!(tree.predict(&[0.0]).unwrap(), 0.0);
        assert_eq!(tree.predict(&[1.0]).unwrap(), 1.0);
        // Boundary value routes left.
        assert_eq!(tree.predict(&[0.5]).unwrap(), 0.0);
        assert!(tree.predict(&[f64::NAN]).is_err());
    }

    #[test]
    fn operation_indices_are_a_bfs_permutation() {
        let data = crate::sim::simulate_model8(
            500,
            &crate::sim::Model8Params::new(crate::sim::BetaChoice::ThreeQuarterAlpha),
            &mut rng_from_seed(6),
        )
        .unwrap();
        let tree = RegressionTree::fit(&data, &TreeParams::new(10, 4)).unwrap();
        let mut ops: Vec<u32> = tree.nodes.iter().map(|n| n.operation_index).collect();
        ops.sort_unstable();
        let expect: Vec<u32> = (1..=tree.nodes.len() as u32).collect();
        assert_eq!(ops, expect);
        // Children are processed after their parent.
        for n in &tree.nodes {
            if !n.is_leaf() {
                assert!(tree.nodes[n.left as usize].operation_index > n.operation_index);
                assert!(tree.nodes[n.right as usize].operation_index > n.operation_index);
            }
        }
    }

    #[test]
    fn leaf_counts_partition_the_sample() {
        let data = crate::sim::simulate_model8(
            777,
            &crate::sim::Model8Params::new(crate::sim::BetaChoice::NegAlpha),
            &mut rng_from_seed(8),
        )
        .unwrap();
        let tree = RegressionTree::fit(&data, &TreeParams::new(4, 2)).unwrap();
        let total: u32 = tree.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.n_rows).sum();
        assert_eq!(total as usize, data.n_rows());
        // Every row lands in exactly one leaf, and leaf counts match the
        // rows routed there.
        let mut routed = vec![0u32; tree.nodes.len()];
        for i in 0..data.n_rows() {
            routed[tree.leaf_of(data.row(i))] += 1;
        }
        for (id, n) in tree.nodes.iter().enumerate() {
            if n.is_leaf() {
                assert_eq!(routed[id], n.n_rows, "leaf {id}");
            } else {
                assert_eq!(routed[id], 0);
            }
        }
    }

    #[test]
    fn recorded_splits_strictly_reduce_sse() {
        let data = crate::sim::simulate_model8(
            600,
            &crate::sim::Model8Params::new(crate::sim::BetaChoice::ThreeQuarterAlpha),
            &mut rng_from_seed(12),
        )
        .unwrap();
        let tree = RegressionTree::fit(&data, &TreeParams::new(3, 1)).unwrap();
        // Recompute each node's SSE from the rows routed to it.
        let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for i in 0..data.n_rows() {
            let mut id = tree.root as usize;
            loop {
                rows_of[id].push(i);
                let n = &tree.nodes[id];
                if n.is_leaf() {
                    break;
                }
                id = if data.row(i)[n.feature as usize] <= n.threshold {
                    n.left
                } else {
                    n.right
                } as usize;
            }
        }
        let sse = |rows: &[usize]| {
            let m = rows.iter().map(|&i| data.response()[i]).sum::<f64>() / rows.len() as f64;
            rows.iter().map(|&i| (data.response()[i] - m).powi(2)).sum::<f64>()
        };
        for (id, n) in tree.nodes.iter().enumerate() {
            if !n.is_leaf() {
                let parent = sse(&rows_of[id]);
                let child = sse(&rows_of[n.left as usize]) + sse(&rows_of[n.right as usize]);
                assert!(child < parent, "split at node {id} did not reduce SSE");
            }
        }
    }

    #[test]
    fn max_nodes_caps_growth() {
        let data = crate::sim::simulate_model8(
            400,
            &crate::sim::Model8Params::new(crate::sim::BetaChoice::ThreeQuarterAlpha),
            &mut rng_from_seed(10),
        )
        .unwrap();
        let params = TreeParams { mtry: 10, min_node_distinct: 5, max_nodes: Some(9), seed: 5 };
        let tree = RegressionTree::fit(&data, &params).unwrap();
        assert!(tree.nodes.len() <= 9);
    }

    #[test]
    fn structure_report_handles_small_trees() {
        let data = data_from(&[(&[0.0], 1.0), (&[0.0], 1.0)]);
        let tree = RegressionTree::fit(&data, &TreeParams::new(1, 0)).unwrap();
        let report = tree_structure_report(&tree);
        assert_eq!(report.operations.len(), 1);
        assert_eq!(report.operations[0].split_feature, None);
        assert_eq!(report.leaves.len(), 1);
        assert!(report.leaves[0].involved.is_empty());

        // Root split on feature 2, left child split on feature 0.
        let data = data_from(&[
            (&[0.0, 0.0, 0.0], 0.0),
            (&[1.0, 0.0, 0.1], 1.0),
            (&[0.0, 0.0, 0.9], 5.0),
            (&[1.0, 0.0, 1.0], 5.0),
        ]);
        let params = TreeParams { mtry: 3, min_node_distinct: 2, max_nodes: None, seed: 3 };
        let tree = RegressionTree::fit(&data, &params).unwrap();
        let report = tree_structure_report(&tree);
        assert_eq!(report.operations[0].split_feature, Some(2));
        let mut sets: Vec<Vec<usize>> = report.leaves.iter().map(|l| l.involved.clone()).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![0, 2], vec![0, 2], vec![2]]);
    }

    #[test]
    fn json_round_trip_preserves_tree() {
        let data = data_from(&[
            (&[0.0, 1.0], 0.0),
            (&[1.0, 0.5], 1.0),
            (&[2.0, 0.25], 4.0),
            (&[3.0, 2.0], 9.0),
        ]);
        let params = TreeParams { mtry: 2, min_node_distinct: 2, max_nodes: None, seed: 11 };
        let tree = RegressionTree::fit(&data, &params).unwrap();
        let text = tree.to_json().unwrap();
        let back = RegressionTree::from_json(&text).unwrap();
        assert_eq!(tree, back);
        assert!(RegressionTree::from_json("{\"nodes\": [], \"root\": 0}").is_err());
    }
}
