//! Experiment configuration: JSON schema, semantic validation, bundled runs.
//!
//! Column references in configs are 1-based and match the CSV headers
//! (`x1` is column 1); they are converted to 0-based indices internally.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use forestlab::forest::ArmSpec;

/// Top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Training rows; required for simulated models, derived for CSV input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Marks long runs that execute only when `--large` is passed.
    #[serde(default)]
    pub large: bool,
    pub predictors: Vec<PredictorConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Model8 {
        beta: BetaConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_sd: Option<[f64; 3]>,
    },
    Model3 {
        #[serde(default = "default_d1")]
        d1: usize,
        #[serde(default = "default_d2")]
        d2: usize,
        #[serde(default = "default_d3")]
        d3: usize,
        #[serde(default = "default_c")]
        c0: f64,
        #[serde(default = "default_c")]
        c1: f64,
        #[serde(default = "default_c")]
        c2: f64,
        #[serde(default)]
        psi: PsiConfig,
    },
    Csv {
        train_path: String,
        test_path: String,
    },
}

fn default_d1() -> usize {
    2
}
fn default_d2() -> usize {
    3
}
fn default_d3() -> usize {
    5
}
fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaConfig {
    /// `"three_quarter_alpha"` or `"neg_alpha"`.
    Named(String),
    /// Explicit eight coefficients.
    Coefficients([f64; 8]),
}

/// Response map of the continuous model: `y = h + weights . x' + noise_sd * e`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    /// One weight per independent covariate; defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

fn default_noise_sd() -> f64 {
    1.0
}

impl Default for PsiConfig {
    fn default() -> Self {
        PsiConfig { weights: None, noise_sd: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictorConfig {
    Forest {
        name: String,
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mtry: Option<usize>,
        #[serde(default = "default_min_node_distinct")]
        min_node_distinct: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subsample_fraction: Option<f64>,
    },
    ArmedForest {
        name: String,
        arm: ArmConfig,
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mtry: Option<usize>,
        #[serde(default = "default_min_node_distinct")]
        min_node_distinct: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subsample_fraction: Option<f64>,
    },
    Oracle {
        name: String,
    },
    MarginalOracle {
        name: String,
    },
}

fn default_n_trees() -> usize {
    1000
}
fn default_min_node_distinct() -> usize {
    5
}

impl PredictorConfig {
    pub fn name(&self) -> &str {
        match self {
            PredictorConfig::Forest { name, .. }
            | PredictorConfig::ArmedForest { name, .. }
            | PredictorConfig::Oracle { name }
            | PredictorConfig::MarginalOracle { name } => name,
        }
    }
}

/// Arm function over 1-based column numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmConfig {
    /// Agreement indicators over column pairs, e.g. `[[1, 2]]`.
    Delta { pairs: Vec<(usize, usize)> },
    Constant,
}

impl ArmConfig {
    /// Convert to the 0-based engine spec. Only call after validation.
    pub fn to_spec(&self) -> ArmSpec {
        match self {
            ArmConfig::Constant => ArmSpec::Constant,
            ArmConfig::Delta { pairs } => ArmSpec::Delta {
                pairs: pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<UsageConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportanceConfig {
    #[serde(default = "default_permutations")]
    pub n_permutations: usize,
    /// Predictor names to diagnose; all of them when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictors: Option<Vec<String>>,
}

fn default_permutations() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageConfig {
    /// Watched columns, 1-based.
    pub watched: Vec<usize>,
    /// Forest predictors whose trees are profiled; all forests when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictors: Option<Vec<String>>,
}

/// One semantic violation, addressed by a JSON-ish field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Feature dimension implied by the model, when known before reading data.
    pub fn dimension(&self) -> Option<usize> {
        match &self.model {
            ModelConfig::Model8 { .. } => Some(10),
            ModelConfig::Model3 { d1, d2, d3, .. } => Some(d1 + d2 + d3),
            ModelConfig::Csv { .. } => None,
        }
    }

    /// Semantic validation; returns every violation with its field path.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(ConfigIssue { path: path.to_string(), message });
        };
        let d = self.dimension();

        match &self.model {
            ModelConfig::Model8 { beta, noise_sd } => {
                if let BetaConfig::Named(name) = beta {
                    if name != "three_quarter_alpha" && name != "neg_alpha" {
                        push(
                            "model.beta",
                            format!(
                                "unknown beta rule {name:?}; use \"three_quarter_alpha\", \
                                 \"neg_alpha\", or eight coefficients"
                            ),
                        );
                    }
                }
                if let Some(sd) = noise_sd {
                    if sd.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        push("model.noise_sd", "noise standard deviations must be >= 0".into());
                    }
                }
            }
            ModelConfig::Model3 { d1, d2, psi, d3, c0, c1, c2 } => {
                if *d1 == 0 || *d2 == 0 {
                    push("model.d1", "block dimensions must be at least 1".into());
                }
                for (name, c) in [("model.c0", c0), ("model.c1", c1), ("model.c2", c2)] {
                    if !(*c > 0.0) || !c.is_finite() {
                        push(name, "scale constants must be positive".into());
                    }
                }
                if let Some(w) = &psi.weights {
                    if w.len() != *d3 {
                        push(
                            "model.psi.weights",
                            format!("expected {d3} weights, found {}", w.len()),
                        );
                    }
                }
                if !(psi.noise_sd >= 0.0) {
                    push("model.psi.noise_sd", "noise_sd must be >= 0".into());
                }
            }
            ModelConfig::Csv { train_path, test_path } => {
                for (field, path) in
                    [("model.train_path", train_path), ("model.test_path", test_path)]
                {
                    if !Path::new(path).is_file() {
                        push(field, format!("file not found: {path}"));
                    }
                }
            }
        }

        let simulated = !matches!(self.model, ModelConfig::Csv { .. });
        match (simulated, self.n_train) {
            (true, None) => push("n_train", "required for simulated models".into()),
            (_, Some(0)) => push("n_train", "must be at least 1".into()),
            _ => {}
        }
        match (simulated, self.n_test) {
            (true, None) => push("n_test", "required for simulated models".into()),
            (_, Some(0)) => push("n_test", "must be at least 1".into()),
            _ => {}
        }

        if self.predictors.is_empty() {
            push("predictors", "at least one predictor is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        for (i, p) in self.predictors.iter().enumerate() {
            let base = format!("predictors[{i}]");
            if !seen.insert(p.name().to_string()) {
                push(&format!("{base}.name"), format!("duplicate predictor name {:?}", p.name()));
            }
            match p {
                PredictorConfig::Forest { n_trees, mtry, min_node_distinct, subsample_fraction, .. }
                | PredictorConfig::ArmedForest {
                    n_trees, mtry, min_node_distinct, subsample_fraction, ..
                } => {
                    if *n_trees == 0 {
                        push(&format!("{base}.n_trees"), "must be at least 1".into());
                    }
                    if *min_node_distinct < 2 {
                        push(&format!("{base}.min_node_distinct"), "must be at least 2".into());
                    }
                    if let (Some(m), Some(dim)) = (mtry, d) {
                        if *m == 0 || *m > dim {
                            push(
                                &format!("{base}.mtry"),
                                format!("must lie in 1..={dim} for this model"),
                            );
                        }
                    } else if *mtry == Some(0) {
                        push(&format!("{base}.mtry"), "must be at least 1".into());
                    }
                    if let Some(f) = subsample_fraction {
                        if !(*f > 0.0 && *f <= 1.0) {
                            push(
                                &format!("{base}.subsample_fraction"),
                                "must lie in (0, 1]".into(),
                            );
                        }
                    }
                }
                PredictorConfig::Oracle { .. } | PredictorConfig::MarginalOracle { .. } => {
                    if !matches!(self.model, ModelConfig::Model8 { .. }) {
                        push(
                            &format!("{base}.kind"),
                            "oracle predictors are defined only for the model8 family".into(),
                        );
                    }
                }
            }
            if let PredictorConfig::ArmedForest { arm, .. } = p {
                match arm {
                    ArmConfig::Delta { pairs } if pairs.is_empty() => {
                        push(&format!("{base}.arm.pairs"), "needs at least one pair".into());
                    }
                    ArmConfig::Delta { pairs } => {
                        for (k, &(a, b)) in pairs.iter().enumerate() {
                            let field = format!("{base}.arm.pairs[{k}]");
                            if a == 0 || b == 0 {
                                push(&field, "columns are 1-based".into());
                            } else if a == b {
                                push(&field, format!("pair ({a}, {b}) is trivial"));
                            } else if let Some(dim) = d {
                                if a > dim || b > dim {
                                    push(
                                        &field,
                                        format!(
                                            "references column x{} but the model has only {dim} \
                                             features",
                                            a.max(b)
                                        ),
                                    );
                                }
                            }
                        }
                    }
                    ArmConfig::Constant => {}
                }
            }
        }

        let known = |name: &String| self.predictors.iter().any(|p| p.name() == name.as_str());
        if let Some(imp) = &self.diagnostics.importance {
            if imp.n_permutations == 0 {
                push("diagnostics.importance.n_permutations", "must be at least 1".into());
            }
            if let Some(names) = &imp.predictors {
                for (k, name) in names.iter().enumerate() {
                    if !known(name) {
                        push(
                            &format!("diagnostics.importance.predictors[{k}]"),
                            format!("unknown predictor {name:?}"),
                        );
                    }
                }
            }
        }
        if let Some(usage) = &self.diagnostics.usage {
            if usage.watched.is_empty() {
                push("diagnostics.usage.watched", "needs at least one column".into());
            }
            for (k, &w) in usage.watched.iter().enumerate() {
                let field = format!("diagnostics.usage.watched[{k}]");
                if w == 0 {
                    push(&field, "columns are 1-based".into());
                } else if let Some(dim) = d {
                    if w > dim {
                        push(&field, format!("column x{w} exceeds the model dimension {dim}"));
                    }
                }
            }
            if let Some(names) = &usage.predictors {
                for (k, name) in names.iter().enumerate() {
                    let field = format!("diagnostics.usage.predictors[{k}]");
                    match self.predictors.iter().find(|p| p.name() == name.as_str()) {
                        None => push(&field, format!("unknown predictor {name:?}")),
                        Some(PredictorConfig::Forest { .. }) => {}
                        Some(_) => push(
                            &field,
                            format!("usage statistics need a plain forest, {name:?} is not one"),
                        ),
                    }
                }
            }
        }

        issues
    }
}

/// Bundled configurations mirroring the reference experiments.
pub const BUNDLED: &[(&str, &str)] = &[
    ("table1_n10k", include_str!("../configs/table1_n10k.json")),
    ("table1_n100k", include_str!("../configs/table1_n100k.json")),
    ("table1_n200k", include_str!("../configs/table1_n200k.json")),
    ("table1_n500k", include_str!("../configs/table1_n500k.json")),
    ("beta_neg_n100k", include_str!("../configs/beta_neg_n100k.json")),
    ("fig3_usage_n10k", include_str!("../configs/fig3_usage_n10k.json")),
    ("fig3_usage_neg_n10k", include_str!("../configs/fig3_usage_neg_n10k.json")),
    ("fig4_importance_n10k", include_str!("../configs/fig4_importance_n10k.json")),
    ("fig4_importance_neg_n10k", include_str!("../configs/fig4_importance_neg_n10k.json")),
];

/// Fetch a bundled config body by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, body)| *body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse_and_validate() {
        for (name, body) in BUNDLED {
            let config = ExperimentConfig::from_json(body)
                .unwrap_or_else(|e| panic!("config {name}: {e}"));
            let issues = config.validate();
            assert!(issues.is_empty(), "config {name}: {issues:?}");
        }
    }

    #[test]
    fn zero_n_train_is_flagged_at_the_right_path() {
        let mut config =
            ExperimentConfig::from_json(bundled("table1_n10k").unwrap()).unwrap();
        config.n_train = Some(0);
        let issues = config.validate();
        assert!(issues.iter().any(|i| i.path == "n_train"));
    }

    #[test]
    fn out_of_range_arm_is_a_semantic_error() {
        let text = r#"{
            "model": {"kind": "model3", "d1": 2, "d2": 2, "d3": 1},
            "n_train": 100, "n_test": 100, "seed": 1,
            "predictors": [
                {"kind": "armed_forest", "name": "armed", "n_trees": 2,
                 "arm": {"kind": "delta", "pairs": [[1, 9]]}}
            ]
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        let issues = config.validate();
        assert!(
            issues.iter().any(|i| i.path == "predictors[0].arm.pairs[0]"),
            "{issues:?}"
        );
    }

    #[test]
    fn oracle_requires_model8() {
        let text = r#"{
            "model": {"kind": "model3"},
            "n_train": 10, "n_test": 10, "seed": 1,
            "predictors": [{"kind": "oracle", "name": "oracle"}]
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert!(config.validate().iter().any(|i| i.path == "predictors[0].kind"));
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        let text = r#"{
            "model": {"kind": "model8", "beta": "neg_alpha"},
            "n_train": 10, "n_test": 10, "seed": 1, "predictors": [],
            "typo_field": true
        }"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }
}
