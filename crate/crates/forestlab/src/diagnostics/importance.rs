//! Permutation variable importance.
//!
//! The importance of a variable is the percent increase in expected loss
//! when its column is replaced by an independent copy, estimated by randomly
//! permuting the column within the test set:
//!
//! `I_j = 100 * (mean permuted loss - e_hat) / e_hat`
//!
//! with `e_hat` the squared-error loss of the unpermuted test set and the
//! mean taken over `n_permutations` independent permutations.
//!
//! Permuting a column of a tree ensemble only moves predictions along a
//! piecewise-constant profile of that coordinate, so for ensembles the
//! evaluator precomputes each row's merged profile once (in row blocks, to
//! bound memory) and scores every permutation by binary search instead of
//! re-walking every tree. Binary and other small-support columns are handled
//! by tabulating the prediction at each distinct value, which also covers
//! predictors whose arm routing depends on the column. Everything else falls
//! back to direct prediction on substituted rows.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::predictor::{MergedProfile, Predictor};
use crate::rng::{derive_seed2, rng_from_seed, streams};

/// Columns with at most this many distinct values use the tabulated path.
const SMALL_SUPPORT: usize = 16;
/// Rows are processed in blocks of this size.
const ROW_BLOCK: usize = 512;

/// Importance of one variable.
#[derive(Debug, Clone, Serialize)]
pub struct VariableImportance {
    pub index: usize,
    pub name: String,
    /// `I_j` in percent.
    pub importance_pct: f64,
    /// Average loss over the permuted test sets, consistent with
    /// `importance_pct = 100 * (mean_permuted_loss - e_hat) / e_hat`.
    pub mean_permuted_loss: f64,
    /// Raw per-permutation losses, retained for dispersion estimates.
    pub permuted_losses: Vec<f64>,
}

/// Permutation-importance estimates for every test column.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceReport {
    /// Baseline squared-error loss on the unpermuted test set.
    pub e_hat: f64,
    pub n_permutations: usize,
    pub variables: Vec<VariableImportance>,
}

impl ImportanceReport {
    /// Variable indices sorted by decreasing importance.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.variables.len()).collect();
        order.sort_by(|&a, &b| {
            self.variables[b]
                .importance_pct
                .total_cmp(&self.variables[a].importance_pct)
                .then(a.cmp(&b))
        });
        order.into_iter().map(|k| self.variables[k].index).collect()
    }

    pub fn importance_of(&self, index: usize) -> Option<f64> {
        self.variables.iter().find(|v| v.index == index).map(|v| v.importance_pct)
    }
}

enum Strategy {
    Table,
    Profile,
    Direct,
}

/// Substitution-evaluation data of one row block.
enum BlockEval<'a> {
    /// `preds[bi * k + vi]`: prediction of block row `bi` with the column
    /// set to `distinct[vi]`.
    Table { distinct: &'a [f64], preds: Vec<f64> },
    Profiles(Vec<MergedProfile>),
    Direct,
}

impl BlockEval<'_> {
    #[inline]
    fn eval<P: Predictor + ?Sized>(
        &self,
        predictor: &P,
        row: &[f64],
        column: usize,
        bi: usize,
        v: f64,
        scratch: &mut Vec<f64>,
    ) -> f64 {
        match self {
            BlockEval::Table { distinct, preds } => {
                let vi = distinct
                    .binary_search_by(|probe| probe.total_cmp(&v))
                    .expect("substituted value comes from the column");
                preds[bi * distinct.len() + vi]
            }
            BlockEval::Profiles(profiles) => profiles[bi].eval(v),
            BlockEval::Direct => {
                scratch.clear();
                scratch.extend_from_slice(row);
                scratch[column] = v;
                predictor.predict_row(scratch)
            }
        }
    }
}

fn build_block_eval<'a, P: Predictor + ?Sized>(
    predictor: &P,
    block: &[&[f64]],
    column: usize,
    distinct: &'a [f64],
    strategy: &Strategy,
) -> BlockEval<'a> {
    match strategy {
        Strategy::Direct => BlockEval::Direct,
        Strategy::Profile => match predictor.column_profiles(block, column) {
            Some(profiles) => {
                BlockEval::Profiles(profiles.into_iter().map(|p| p.merge()).collect())
            }
            None => BlockEval::Direct,
        },
        Strategy::Table => {
            let k = distinct.len();
            let d = block[0].len();
            let mut preds = vec![0.0f64; block.len() * k];
            let mut substituted = vec![0.0f64; block.len() * d];
            for (vi, &v) in distinct.iter().enumerate() {
                for (bi, row) in block.iter().enumerate() {
                    let slot = &mut substituted[bi * d..(bi + 1) * d];
                    slot.copy_from_slice(row);
                    slot[column] = v;
                }
                let refs: Vec<&[f64]> =
                    substituted.chunks(d).collect();
                for (bi, pred) in predictor.predict_rows(&refs).into_iter().enumerate() {
                    preds[bi * k + vi] = pred;
                }
            }
            BlockEval::Table { distinct, preds }
        }
    }
}

/// Estimate the importance of every variable of `test` for `predictor`.
///
/// Scoring is deterministic in `(seed, n_permutations)` and independent of
/// the worker count: permutation `p` of variable `j` is generated from the
/// derived seed `(seed, PERMUTATION + j, p)` and scored by a single worker.
pub fn permutation_importance<P: Predictor + ?Sized>(
    predictor: &P,
    test: &Dataset,
    n_permutations: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if n_permutations == 0 {
        return Err(Error::InvalidParams("n_permutations must be at least 1".into()));
    }
    let n = test.n_rows();
    let response = test.response();
    let rows: Vec<&[f64]> = (0..n).map(|i| test.row(i)).collect();

    let baseline = predictor.predict_rows(&rows);
    let mut e_hat = 0.0;
    for (&p, &y) in baseline.iter().zip(response) {
        e_hat += (y - p) * (y - p);
    }
    e_hat /= n as f64;
    if e_hat <= 0.0 {
        return Err(Error::DegenerateBaseline);
    }

    let mut variables = Vec::with_capacity(test.n_features());
    for j in 0..test.n_features() {
        let column = test.column(j);
        let mut distinct = column.clone();
        distinct.sort_unstable_by(f64::total_cmp);
        distinct.dedup_by(|a, b| a.total_cmp(b).is_eq());
        let strategy = if distinct.len() <= SMALL_SUPPORT {
            Strategy::Table
        } else if predictor.column_profile(rows[0], j).is_some() {
            Strategy::Profile
        } else {
            Strategy::Direct
        };

        let perms: Vec<Vec<u32>> = (0..n_permutations)
            .into_par_iter()
            .map(|p| {
                let mut rng = rng_from_seed(derive_seed2(
                    seed,
                    streams::PERMUTATION + j as u64,
                    p as u64,
                ));
                let mut perm: Vec<u32> = (0..n as u32).collect();
                perm.shuffle(&mut rng);
                perm
            })
            .collect();

        // Baseline through the same evaluator path, accumulated alongside
        // the permuted losses with the same per-block summation shape.
        // Subtracting it (rather than e_hat, which may differ in the last
        // bits) makes the importance of a genuinely unused variable exactly
        // zero.
        let mut b0 = 0.0f64;
        let mut losses = vec![0.0f64; n_permutations];
        for (block_index, block) in rows.chunks(ROW_BLOCK).enumerate() {
            let start = block_index * ROW_BLOCK;
            let eval = build_block_eval(predictor, block, j, &distinct, &strategy);
            let mut scratch = Vec::new();
            let mut acc = 0.0;
            for (bi, row) in block.iter().enumerate() {
                let i = start + bi;
                let e = response[i] - eval.eval(predictor, row, j, bi, column[i], &mut scratch);
                acc += e * e;
            }
            b0 += acc;
            losses.par_iter_mut().zip(&perms).for_each(|(loss, perm)| {
                let mut scratch = Vec::new();
                let mut acc = 0.0;
                for (bi, row) in block.iter().enumerate() {
                    let i = start + bi;
                    let v = column[perm[i] as usize];
                    let e = response[i] - eval.eval(predictor, row, j, bi, v, &mut scratch);
                    acc += e * e;
                }
                *loss += acc;
            });
        }
        b0 /= n as f64;
        for loss in &mut losses {
            *loss /= n as f64;
        }

        let diffs: Vec<f64> = losses.iter().map(|&l| l - b0).collect();
        let mean_diff = compensated_sum(&diffs) / n_permutations as f64;
        variables.push(VariableImportance {
            index: j,
            name: test.column_names()[j].clone(),
            importance_pct: 100.0 * mean_diff / e_hat,
            mean_permuted_loss: e_hat + mean_diff,
            permuted_losses: losses,
        });
    }

    Ok(ImportanceReport { e_hat, n_permutations, variables })
}
