//! Evaluation metrics, permutation importance, variable-usage statistics,
//! and the importance/usage discrepancy screen.

mod importance;
mod metrics;
mod screen;
mod usage;

pub use importance::{permutation_importance, ImportanceReport, VariableImportance};
pub use metrics::{evaluate, metrics_from_predictions, predict_dataset, MetricsReport};
pub use screen::{discrepancy_screen, ScreenConfig, ScreenFinding, ScreenReport};
pub use usage::{usage_statistics, OperationUsage, TreeUsage, UsageReport};
