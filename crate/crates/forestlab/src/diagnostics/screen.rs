//! Importance/usage discrepancy screen.
//!
//! Flags variables whose importance percentile exceeds their leaf-usage
//! percentile by a margin: the trees earn a lot from these variables on the
//! rare occasions they touch them, the signature of a hidden pair. For
//! flagged binary variables the screen proposes agreement-indicator arm
//! functions to try as the initial partition of an armed forest.

use serde::Serialize;

use crate::diagnostics::importance::ImportanceReport;
use crate::diagnostics::usage::UsageReport;
use crate::error::{Error, Result};
use crate::forest::ArmSpec;

/// Screen configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenConfig {
    /// Minimum importance-percentile minus usage-percentile gap to flag.
    pub percentile_margin: f64,
    /// Variables known to be binary in the data; candidate arm functions
    /// are built from agreement indicators over flagged binary pairs.
    pub binary_variables: Vec<usize>,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig { percentile_margin: 0.5, binary_variables: Vec::new() }
    }
}

/// One flagged variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenFinding {
    pub variable: usize,
    pub name: String,
    pub importance_percentile: f64,
    pub usage_percentile: f64,
    /// `importance_percentile - usage_percentile`.
    pub gap: f64,
}

/// Screen output: flagged variables ranked by gap, plus candidate arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenReport {
    pub flagged: Vec<ScreenFinding>,
    pub suggested_arms: Vec<ArmSpec>,
}

/// Fractional rank of each value in `[0, 1]`, ties averaged. A single value
/// gets 0.5.
fn percentiles(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    if m == 1 {
        return vec![0.5];
    }
    values
        .iter()
        .map(|&v| {
            let below = values.iter().filter(|&&o| o < v).count() as f64;
            let ties = values.iter().filter(|&&o| o == v).count() as f64 - 1.0;
            (below + 0.5 * ties) / (m as f64 - 1.0)
        })
        .collect()
}

/// Rank importance against usage over the watched variables and flag the
/// suspects. Both reports must cover the flagged variables: usage is taken
/// from the per-variable any-involvement means, importance from `I_j`.
pub fn discrepancy_screen(
    importance: &ImportanceReport,
    usage: &UsageReport,
    config: &ScreenConfig,
) -> Result<ScreenReport> {
    let mut shared: Vec<(usize, f64, f64, String)> = Vec::new();
    for (k, &variable) in usage.watched.iter().enumerate() {
        if let Some(v) = importance.variables.iter().find(|v| v.index == variable) {
            shared.push((variable, v.importance_pct, usage.mean_any[k], v.name.clone()));
        }
    }
    if shared.is_empty() {
        return Err(Error::InvalidParams(
            "importance and usage reports cover disjoint variables".into(),
        ));
    }
    let importance_pct = percentiles(&shared.iter().map(|s| s.1).collect::<Vec<_>>());
    let usage_pct = percentiles(&shared.iter().map(|s| s.2).collect::<Vec<_>>());
    let mut flagged: Vec<ScreenFinding> = shared
        .iter()
        .zip(importance_pct.iter().zip(&usage_pct))
        .filter_map(|((variable, _, _, name), (&ip, &up))| {
            let gap = ip - up;
            (gap >= config.percentile_margin).then(|| ScreenFinding {
                variable: *variable,
                name: name.clone(),
                importance_percentile: ip,
                usage_percentile: up,
                gap,
            })
        })
        .collect();
    flagged.sort_by(|a, b| b.gap.total_cmp(&a.gap).then(a.variable.cmp(&b.variable)));

    let binary_flagged: Vec<usize> = flagged
        .iter()
        .map(|f| f.variable)
        .filter(|v| config.binary_variables.contains(v))
        .collect();
    let mut suggested_arms = Vec::new();
    for (i, &a) in binary_flagged.iter().enumerate() {
        for &b in &binary_flagged[i + 1..] {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            suggested_arms.push(ArmSpec::delta(lo, hi));
        }
    }
    if binary_flagged.len() > 2 {
        // The full product of agreement indicators over all flagged pairs.
        let mut pairs = Vec::new();
        for (i, &a) in binary_flagged.iter().enumerate() {
            for &b in &binary_flagged[i + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                pairs.push((lo, hi));
            }
        }
        suggested_arms.push(ArmSpec::Delta { pairs });
    }

    Ok(ScreenReport { flagged, suggested_arms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::importance::VariableImportance;
    use crate::diagnostics::usage::{OperationUsage, TreeUsage, UsageReport};

    fn importance_from(values: &[f64]) -> ImportanceReport {
        ImportanceReport {
            e_hat: 1.0,
            n_permutations: 10,
            variables: values
                .iter()
                .enumerate()
                .map(|(i, &v)| VariableImportance {
                    index: i,
                    name: format!("x{}", i + 1),
                    importance_pct: v,
                    mean_permuted_loss: 1.0 + v / 100.0,
                    permuted_losses: vec![],
                })
                .collect(),
        }
    }

    fn usage_from(any: &[f64]) -> UsageReport {
        UsageReport {
            watched: (0..any.len()).collect(),
            profile: vec![OperationUsage {
                operation_index: 1,
                splitting_trees: 1,
                watched_splits: 0,
            }],
            trees: vec![TreeUsage {
                tree: 0,
                n_leaves: 1,
                alone: vec![0.0; any.len()],
                any: any.to_vec(),
                joint: 0.0,
                data_fraction_joint: 0.0,
            }],
            data_fraction_joint: 0.0,
            mean_any: any.to_vec(),
            mean_joint: 0.0,
        }
    }

    #[test]
    fn all_equal_reports_flag_nothing() {
        let imp = importance_from(&[10.0, 10.0, 10.0, 10.0]);
        let usage = usage_from(&[0.2, 0.2, 0.2, 0.2]);
        let report = discrepancy_screen(&imp, &usage, &ScreenConfig::default()).unwrap();
        assert!(report.flagged.is_empty());
        assert!(report.suggested_arms.is_empty());
    }

    #[test]
    fn high_importance_low_usage_is_flagged_with_arm_suggestions() {
        // Variables 0 and 1 are important but barely used.
        let imp = importance_from(&[90.0, 85.0, 10.0, 5.0, 2.0, 1.0]);
        let usage = usage_from(&[0.05, 0.06, 0.9, 0.8, 0.7, 0.6]);
        let config = ScreenConfig {
            percentile_margin: 0.5,
            binary_variables: vec![0, 1],
        };
        let report = discrepancy_screen(&imp, &usage, &config).unwrap();
        let flagged: Vec<usize> = report.flagged.iter().map(|f| f.variable).collect();
        assert_eq!(flagged, vec![0, 1]);
        assert_eq!(report.suggested_arms, vec![ArmSpec::delta(0, 1)]);
    }

    #[test]
    fn raising_the_margin_never_adds_flags() {
        let imp = importance_from(&[90.0, 60.0, 10.0, 5.0]);
        let usage = usage_from(&[0.1, 0.3, 0.9, 0.8]);
        let mut previous = usize::MAX;
        for margin in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let config = ScreenConfig { percentile_margin: margin, binary_variables: vec![] };
            let report = discrepancy_screen(&imp, &usage, &config).unwrap();
            assert!(report.flagged.len() <= previous);
            previous = report.flagged.len();
        }
    }

    #[test]
    fn disjoint_reports_error() {
        let imp = importance_from(&[1.0]);
        let mut usage = usage_from(&[0.5]);
        usage.watched = vec![7];
        assert!(discrepancy_screen(&imp, &usage, &ScreenConfig::default()).is_err());
    }
}
