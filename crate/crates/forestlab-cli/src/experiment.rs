//! Config-driven experiment pipeline: simulate or load data, fit the
//! configured predictors, evaluate, run diagnostics, and write the CSV and
//! manifest artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use forestlab::dataset::Dataset;
use forestlab::diagnostics::{
    metrics_from_predictions, permutation_importance, predict_dataset, usage_statistics,
    ImportanceReport, MetricsReport, UsageReport,
};
use forestlab::forest::{ArmedForest, Forest, ForestParams, Resample};
use forestlab::oracle::{MarginalPredictor, OptimalPredictor, OracleSpec};
use forestlab::predictor::Predictor;
use forestlab::rng::{derive_seed, rng_from_seed, streams};
use forestlab::sim::{
    simulate_model3, simulate_model8, BetaChoice, Model8Params, PairwiseDensitySpec,
};

use crate::config::{
    BetaConfig, ExperimentConfig, ModelConfig, PredictorConfig, PsiConfig,
};
use crate::error::CliError;

/// A fitted predictor of the pipeline, kept only as long as needed.
enum FittedPredictor {
    Forest(Forest),
    Armed(ArmedForest),
    Oracle(OptimalPredictor),
    Marginal(MarginalPredictor),
}

impl FittedPredictor {
    fn as_predictor(&self) -> &dyn Predictor {
        match self {
            FittedPredictor::Forest(f) => f,
            FittedPredictor::Armed(a) => a,
            FittedPredictor::Oracle(o) => o,
            FittedPredictor::Marginal(m) => m,
        }
    }
}

pub(crate) fn model8_params(
    beta: &BetaConfig,
    noise_sd: Option<[f64; 3]>,
) -> Result<Model8Params, CliError> {
    let mut params = match beta {
        BetaConfig::Named(name) => match name.as_str() {
            "three_quarter_alpha" => Model8Params::new(BetaChoice::ThreeQuarterAlpha),
            "neg_alpha" => Model8Params::new(BetaChoice::NegAlpha),
            other => {
                return Err(CliError::config(format!("unknown beta rule {other:?}")));
            }
        },
        BetaConfig::Coefficients(beta) => {
            let mut params = Model8Params::new(BetaChoice::ThreeQuarterAlpha);
            params.beta = *beta;
            params
        }
    };
    if let Some(sd) = noise_sd {
        params.noise_sd = sd;
    }
    Ok(params)
}

fn simulate(config: &ExperimentConfig, seed: u64, n: usize) -> Result<Dataset, CliError> {
    let mut rng = rng_from_seed(seed);
    match &config.model {
        ModelConfig::Model8 { beta, noise_sd } => {
            let params = model8_params(beta, *noise_sd)?;
            simulate_model8(n, &params, &mut rng).map_err(CliError::simulation)
        }
        ModelConfig::Model3 { d1, d2, d3, c0, c1, c2, psi } => {
            let spec = PairwiseDensitySpec {
                d1: *d1,
                d2: *d2,
                d3: *d3,
                c0: *c0,
                c1: *c1,
                c2: *c2,
                ..Default::default()
            };
            let PsiConfig { weights, noise_sd } = psi.clone();
            let weights = weights.unwrap_or_else(|| vec![1.0; *d3]);
            let noise = noise_sd;
            let psi = move |h: f64, x_prime: &[f64], e: f64| {
                h + weights.iter().zip(x_prime).map(|(w, x)| w * x).sum::<f64>() + noise * e
            };
            simulate_model3(n, &spec, psi, &mut rng).map_err(CliError::simulation)
        }
        ModelConfig::Csv { .. } => unreachable!("csv models never simulate"),
    }
}

fn load_data(config: &ExperimentConfig) -> Result<(Dataset, Dataset), CliError> {
    match &config.model {
        ModelConfig::Csv { train_path, test_path } => {
            let train = Dataset::read_csv(Path::new(train_path)).map_err(CliError::io_or_parse)?;
            let test = Dataset::read_csv(Path::new(test_path)).map_err(CliError::io_or_parse)?;
            if train.n_features() != test.n_features() {
                return Err(CliError::config(format!(
                    "train has {} features but test has {}",
                    train.n_features(),
                    test.n_features()
                )));
            }
            Ok((train, test))
        }
        _ => {
            let n_train = config.n_train.expect("validated");
            let n_test = config.n_test.expect("validated");
            let train = simulate(config, derive_seed(config.seed, streams::TRAIN), n_train)?;
            let test = simulate(config, derive_seed(config.seed, streams::TEST), n_test)?;
            Ok((train, test))
        }
    }
}

fn forest_params(
    n_trees: usize,
    mtry: Option<usize>,
    min_node_distinct: usize,
    subsample_fraction: Option<f64>,
    seed: u64,
) -> ForestParams {
    ForestParams {
        n_trees,
        mtry,
        min_node_distinct,
        max_nodes: None,
        resample: match subsample_fraction {
            Some(fraction) => Resample::Subsample { fraction },
            None => Resample::Bootstrap,
        },
        seed,
    }
}

fn fit_predictor(
    p: &PredictorConfig,
    index: usize,
    config: &ExperimentConfig,
    train: &Dataset,
) -> Result<FittedPredictor, CliError> {
    let seed = derive_seed(config.seed, 0x7000_0000_0000_0000 + index as u64);
    match p {
        PredictorConfig::Forest { n_trees, mtry, min_node_distinct, subsample_fraction, .. } => {
            let params = forest_params(*n_trees, *mtry, *min_node_distinct, *subsample_fraction, seed);
            Ok(FittedPredictor::Forest(Forest::fit(train, &params).map_err(CliError::config_msg)?))
        }
        PredictorConfig::ArmedForest {
            arm, n_trees, mtry, min_node_distinct, subsample_fraction, ..
        } => {
            let params = forest_params(*n_trees, *mtry, *min_node_distinct, *subsample_fraction, seed);
            let armed = ArmedForest::fit(train, arm.to_spec(), &params)
                .map_err(CliError::config_msg)?;
            Ok(FittedPredictor::Armed(armed))
        }
        PredictorConfig::Oracle { .. } | PredictorConfig::MarginalOracle { .. } => {
            let ModelConfig::Model8 { beta, noise_sd } = &config.model else {
                return Err(CliError::config("oracle predictors require the model8 family".into()));
            };
            let spec = OracleSpec::from_model(&model8_params(beta, *noise_sd)?);
            Ok(match p {
                PredictorConfig::Oracle { .. } => {
                    FittedPredictor::Oracle(OptimalPredictor::new(spec))
                }
                _ => FittedPredictor::Marginal(MarginalPredictor::new(spec)),
            })
        }
    }
}

fn csv_number(v: f64) -> String {
    format!("{v}")
}

struct OutputWriter {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputWriter { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Run a validated experiment and write its artifacts. Returns the manifest.
pub fn run_experiment(
    config: &ExperimentConfig,
    output_dir: &Path,
    large: bool,
) -> Result<serde_json::Value, CliError> {
    let issues = config.validate();
    if !issues.is_empty() {
        let text = issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(CliError::config(text));
    }
    if config.large && !large {
        return Err(CliError::config(
            "this configuration is marked large; pass --large to run it".into(),
        ));
    }
    let started = Instant::now();
    let (train, test) = load_data(config)?;
    let mut writer = OutputWriter::new(output_dir)?;

    let mut metrics_csv = String::from("predictor,mse,mae,explained_variance\n");
    let mut predictions: Vec<(String, Vec<f64>)> = Vec::new();
    let mut metrics: BTreeMap<String, MetricsReport> = BTreeMap::new();
    let mut importance_reports: Vec<(String, ImportanceReport)> = Vec::new();
    let mut usage_reports: Vec<(String, UsageReport)> = Vec::new();
    let mut arm_summaries = serde_json::Map::new();

    let importance_wanted = |name: &str| {
        config.diagnostics.importance.as_ref().map(|imp| {
            imp.predictors
                .as_ref()
                .map(|names| names.iter().any(|n| n == name))
                .unwrap_or(true)
        })
    };
    let usage_wanted = |name: &str, is_forest: bool| {
        config.diagnostics.usage.as_ref().map(|usage| {
            usage
                .predictors
                .as_ref()
                .map(|names| names.iter().any(|n| n == name))
                .unwrap_or(is_forest)
        })
    };

    for (index, pconf) in config.predictors.iter().enumerate() {
        let name = pconf.name().to_string();
        let fitted = fit_predictor(pconf, index, config, &train)?;
        let predictor = fitted.as_predictor();

        let preds = predict_dataset(predictor, &test);
        let report = metrics_from_predictions(&preds, test.response());
        let ev = report
            .explained_variance
            .map(csv_number)
            .unwrap_or_default();
        let _ = writeln!(
            metrics_csv,
            "{name},{},{},{ev}",
            csv_number(report.mse),
            csv_number(report.mae)
        );
        metrics.insert(name.clone(), report);
        predictions.push((name.clone(), preds));

        if importance_wanted(&name) == Some(true) {
            let n_permutations =
                config.diagnostics.importance.as_ref().expect("checked").n_permutations;
            let imp_seed = derive_seed(config.seed, streams::PERMUTATION);
            let report = permutation_importance(predictor, &test, n_permutations, imp_seed)
                .map_err(CliError::config_msg)?;
            importance_reports.push((name.clone(), report));
        }

        let is_forest = matches!(fitted, FittedPredictor::Forest(_));
        if usage_wanted(&name, is_forest) == Some(true) {
            let FittedPredictor::Forest(ref forest) = fitted else {
                return Err(CliError::config(format!(
                    "usage statistics need a plain forest, {name:?} is not one"
                )));
            };
            let watched: Vec<usize> = config
                .diagnostics
                .usage
                .as_ref()
                .expect("checked")
                .watched
                .iter()
                .map(|w| w - 1)
                .collect();
            let report =
                usage_statistics(&forest.trees, &watched, &train).map_err(CliError::config_msg)?;
            usage_reports.push((name.clone(), report));
        }

        if let FittedPredictor::Armed(ref armed) = fitted {
            arm_summaries.insert(
                name.clone(),
                serde_json::to_value(&armed.report).expect("serializable"),
            );
        }
    }

    writer.write("metrics.csv", &metrics_csv)?;

    let mut predictions_csv = String::from("row,y");
    for (name, _) in &predictions {
        predictions_csv.push(',');
        predictions_csv.push_str(name);
    }
    predictions_csv.push('\n');
    for i in 0..test.n_rows() {
        let _ = write!(predictions_csv, "{i},{}", csv_number(test.response()[i]));
        for (_, preds) in &predictions {
            let _ = write!(predictions_csv, ",{}", csv_number(preds[i]));
        }
        predictions_csv.push('\n');
    }
    writer.write("predictions.csv", &predictions_csv)?;

    let mut importance_csv = String::from(
        "predictor,variable,importance_pct,mean_permuted_loss,loss_sd,e_hat,n_permutations\n",
    );
    for (name, report) in &importance_reports {
        for v in &report.variables {
            let mean = v.mean_permuted_loss;
            let sd = (v
                .permuted_losses
                .iter()
                .map(|l| (l - mean) * (l - mean))
                .sum::<f64>()
                / v.permuted_losses.len() as f64)
                .sqrt();
            let _ = writeln!(
                importance_csv,
                "{name},{},{},{},{},{},{}",
                v.name,
                csv_number(v.importance_pct),
                csv_number(v.mean_permuted_loss),
                csv_number(sd),
                csv_number(report.e_hat),
                report.n_permutations
            );
        }
    }
    writer.write("importance.csv", &importance_csv)?;

    let mut profile_csv =
        String::from("predictor,operation_index,splitting_trees,watched_splits,proportion\n");
    let mut leaf_csv = String::new();
    for (name, report) in &usage_reports {
        for op in &report.profile {
            let proportion = op.proportion().map(csv_number).unwrap_or_default();
            let _ = writeln!(
                profile_csv,
                "{name},{},{},{},{proportion}",
                op.operation_index, op.splitting_trees, op.watched_splits
            );
        }
        if leaf_csv.is_empty() {
            leaf_csv.push_str("predictor,tree,n_leaves");
            for &w in &report.watched {
                let _ = write!(leaf_csv, ",alone_x{}", w + 1);
            }
            for &w in &report.watched {
                let _ = write!(leaf_csv, ",any_x{}", w + 1);
            }
            leaf_csv.push_str(",joint,data_fraction_joint\n");
        }
        for t in &report.trees {
            let _ = write!(leaf_csv, "{name},{},{}", t.tree, t.n_leaves);
            for v in t.alone.iter().chain(&t.any) {
                let _ = write!(leaf_csv, ",{}", csv_number(*v));
            }
            let _ = writeln!(
                leaf_csv,
                ",{},{}",
                csv_number(t.joint),
                csv_number(t.data_fraction_joint)
            );
        }
    }
    if leaf_csv.is_empty() {
        leaf_csv.push_str("predictor,tree,n_leaves,joint,data_fraction_joint\n");
    }
    writer.write("usage_profile.csv", &profile_csv)?;
    writer.write("leaf_usage.csv", &leaf_csv)?;

    let usage_summary: serde_json::Map<String, serde_json::Value> = usage_reports
        .iter()
        .map(|(name, r)| {
            (
                name.clone(),
                json!({
                    "mid_construction_share": r.mid_construction_share(),
                    "median_joint": r.median_joint(),
                    "mean_joint": r.mean_joint,
                    "mean_any": r.mean_any,
                    "data_fraction_joint": r.data_fraction_joint,
                }),
            )
        })
        .collect();

    let manifest = json!({
        "config": config,
        "seed": config.seed,
        "versions": {
            "forestlab": env!("CARGO_PKG_VERSION"),
            "forestlab_cli": env!("CARGO_PKG_VERSION"),
            "format": forestlab::forest::FOREST_FORMAT_VERSION,
        },
        "n_train": train.n_rows(),
        "n_test": test.n_rows(),
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "outputs": writer.written,
        "metrics": metrics,
        "arms": arm_summaries,
        "usage_summary": usage_summary,
    });
    let manifest_path = output_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("serializable"))
        .map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(manifest)
}
