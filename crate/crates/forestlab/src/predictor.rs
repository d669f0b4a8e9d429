//! The prediction interface shared by forests, oracles, and diagnostics.

/// Anything that maps a feature row to a point prediction.
///
/// Inputs are assumed finite; dataset-backed callers have validated them at
/// construction. The checked `predict` methods on the concrete types reject
/// non-finite vectors.
pub trait Predictor: Sync {
    fn predict_row(&self, x: &[f64]) -> f64;

    /// Batch prediction. Semantically `rows.map(predict_row)`; ensembles
    /// override it with a tree-major sweep that keeps each tree hot in
    /// cache while producing bit-identical results.
    fn predict_rows(&self, rows: &[&[f64]]) -> Vec<f64> {
        rows.iter().map(|x| self.predict_row(x)).collect()
    }

    /// Piecewise-constant profile of the prediction in one coordinate,
    /// holding the rest of `x` fixed, when the predictor can produce it
    /// cheaply. Tree ensembles can; the default says no, and callers fall
    /// back to direct prediction.
    fn column_profile(&self, x: &[f64], column: usize) -> Option<ColumnProfile> {
        let _ = (x, column);
        None
    }

    /// Batch form of [`Predictor::column_profile`], one profile per row.
    /// Must return profiles equivalent to the per-row method.
    fn column_profiles(&self, rows: &[&[f64]], column: usize) -> Option<Vec<ColumnProfile>> {
        rows.iter().map(|x| self.column_profile(x, column)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for F {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A jump of a piecewise-constant function: for inputs strictly greater than
/// `at`, the value shifts by `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub delta: f64,
}

/// Prediction as a function of a single coordinate `v`:
/// `scale * (base + sum of deltas over jumps with at < v)`.
///
/// Tree routing sends `v <= threshold` left, so each split on the profiled
/// column contributes one jump at its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile {
    pub base: f64,
    pub scale: f64,
    pub jumps: Vec<Jump>,
}

impl ColumnProfile {
    /// Sort the jumps and precompute prefix sums for O(log k) evaluation.
    pub fn merge(self) -> MergedProfile {
        let ColumnProfile { base, scale, mut jumps } = self;
        jumps.sort_unstable_by(|a, b| a.at.total_cmp(&b.at));
        let mut ats = Vec::with_capacity(jumps.len());
        let mut cumulative = Vec::with_capacity(jumps.len());
        let mut acc = 0.0;
        for j in &jumps {
            acc += j.delta;
            ats.push(j.at);
            cumulative.push(acc);
        }
        MergedProfile { base, scale, ats, cumulative }
    }
}

/// Evaluation-ready form of a [`ColumnProfile`].
#[derive(Debug, Clone)]
pub struct MergedProfile {
    base: f64,
    scale: f64,
    ats: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MergedProfile {
    /// Prediction when the profiled coordinate is set to `v`.
    pub fn eval(&self, v: f64) -> f64 {
        let k = self.ats.partition_point(|&at| at < v);
        let shift = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        self.scale * (self.base + shift)
    }

    /// True when the prediction does not depend on the coordinate at all.
    pub fn is_constant(&self) -> bool {
        self.ats.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_profile_evaluates_step_function() {
        let profile = ColumnProfile {
            base: 1.0,
            scale: 0.5,
            jumps: vec![Jump { at: 2.0, delta: 4.0 }, Jump { at: -1.0, delta: -2.0 }],
        };
        let merged = profile.merge();
        assert_eq!(merged.eval(-5.0), 0.5);
        // At the boundary the left piece still applies (<= routing).
        assert_eq!(merged.eval(-1.0), 0.5);
        assert_eq!(merged.eval(0.0), -0.5);
        assert_eq!(merged.eval(2.0), -0.5);
        assert_eq!(merged.eval(2.1), 1.5);
        assert!(!merged.is_constant());
    }

    #[test]
    fn closures_are_predictors() {
        let p = |x: &[f64]| x[0] * 2.0;
        assert_eq!(p.predict_row(&[3.0]), 6.0);
        assert!(p.column_profile(&[3.0], 0).is_none());
    }
}
