//! Experiment harness: simulate the benchmark models, fit forests and armed
//! forests, evaluate them, and compute importance/usage diagnostics, with
//! all tabular outputs as CSV and a JSON manifest per experiment.

mod config;
mod error;
mod experiment;
mod model_io;

use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand};

use forestlab::dataset::Dataset;
use forestlab::diagnostics::{evaluate, permutation_importance, usage_statistics};
use forestlab::forest::{ArmedForest, Forest, ForestParams, Resample};
use forestlab::rng::rng_from_seed;
use forestlab::sim::{simulate_model3, simulate_model8, PairwiseDensitySpec};

use config::{bundled, ExperimentConfig};
use error::{CliError, ExitCode};
use model_io::ModelDocument;

#[derive(Parser)]
#[command(
    name = "forestlab",
    about = "Regression forests, armed forests, and diagnostics for hidden-pair models",
    version
)]
struct Cli {
    /// Worker threads (default: all cores, or FORESTLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a forest or armed forest on a CSV dataset and save the model.
    Train(TrainArgs),
    /// Evaluate a saved model on a CSV test set.
    Evaluate(EvaluateArgs),
    /// Permutation importance of a saved model on a CSV test set.
    Importance(ImportanceArgs),
    /// Variable-usage statistics of a saved forest model.
    Usage(UsageArgs),
    /// Config-driven experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model family: model8 or model3.
    #[arg(long, default_value = "model8")]
    model: String,
    /// Beta rule for model8: three_quarter_alpha or neg_alpha.
    #[arg(long, default_value = "three_quarter_alpha")]
    beta: String,
    /// Rows to simulate.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data CSV.
    #[arg(long)]
    train: PathBuf,
    /// Predictor kind: forest or armed.
    #[arg(long, default_value = "forest")]
    predictor: String,
    #[arg(long, default_value_t = 1000)]
    trees: usize,
    /// Candidate features per split (default: a third of the columns).
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long, default_value_t = 5)]
    min_node_distinct: usize,
    /// Subsample fraction instead of bootstrap resampling.
    #[arg(long)]
    subsample: Option<f64>,
    /// Arm columns for the armed predictor, e.g. x1,x2.
    #[arg(long)]
    arm: Option<String>,
    #[arg(long)]
    seed: u64,
    /// Output model JSON path.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Saved model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Test data CSV.
    #[arg(long)]
    test: PathBuf,
    /// Optional metrics CSV output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional importance CSV output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct UsageArgs {
    /// Saved model JSON (must be a plain forest).
    #[arg(long)]
    model: PathBuf,
    /// The data the model was trained on.
    #[arg(long)]
    train: PathBuf,
    /// Watched columns, e.g. x1,x2.
    #[arg(long)]
    watched: String,
    /// Directory for usage_profile.csv and leaf_usage.csv; stdout summary
    /// only when omitted.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run a bundled or file-based experiment configuration.
    Run(ExperimentRunArgs),
    /// Validate a configuration without running it.
    Validate(ExperimentValidateArgs),
    /// List the bundled configurations.
    List,
}

#[derive(Args)]
struct ExperimentRunArgs {
    /// Bundled config name or path to a JSON file.
    config: String,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Allow configurations marked as large (long runtimes).
    #[arg(long)]
    large: bool,
}

#[derive(Args)]
struct ExperimentValidateArgs {
    /// Bundled config name or path to a JSON file.
    config: String,
}

fn parse_columns(spec: &str, data: &Dataset) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|token| {
            let token = token.trim();
            data.column_index(token).ok_or_else(|| {
                CliError::config(format!(
                    "unknown column {token:?}; available: {}",
                    data.column_names().join(",")
                ))
            })
        })
        .collect()
}

fn load_config(name_or_path: &str) -> Result<ExperimentConfig, CliError> {
    let text = if let Some(body) = bundled(name_or_path) {
        body.to_string()
    } else {
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(CliError::config(format!(
                "no bundled config or file named {name_or_path:?}; bundled: {}",
                config::BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            )));
        }
        std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
    };
    ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::config(format!("config parse error: {e}")))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut rng = rng_from_seed(args.seed);
    let data = match args.model.as_str() {
        "model8" => {
            let params = experiment::model8_params(
                &config::BetaConfig::Named(args.beta.clone()),
                None,
            )?;
            simulate_model8(args.n, &params, &mut rng).map_err(CliError::simulation)?
        }
        "model3" => {
            let spec = PairwiseDensitySpec::default();
            let d3 = spec.d3;
            simulate_model3(
                args.n,
                &spec,
                move |h, x_prime, e| h + x_prime.iter().take(d3).sum::<f64>() + e,
                &mut rng,
            )
            .map_err(CliError::simulation)?
        }
        other => return Err(CliError::config(format!("unknown model {other:?}"))),
    };
    data.write_csv(&args.output).map_err(|e| match e {
        forestlab::Error::Io(io) => CliError::io(&args.output, io),
        other => CliError::config_msg(other),
    })?;
    eprintln!("wrote {} rows x {} columns to {}", data.n_rows(), data.n_features(), args.output.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let data = Dataset::read_csv(&args.train).map_err(CliError::io_or_parse)?;
    let params = ForestParams {
        n_trees: args.trees,
        mtry: args.mtry,
        min_node_distinct: args.min_node_distinct,
        max_nodes: None,
        resample: match args.subsample {
            Some(fraction) => Resample::Subsample { fraction },
            None => Resample::Bootstrap,
        },
        seed: args.seed,
    };
    let document = match args.predictor.as_str() {
        "forest" => ModelDocument::Forest(
            Forest::fit(&data, &params).map_err(CliError::config_msg)?,
        ),
        "armed" => {
            let spec = args.arm.as_deref().ok_or_else(|| {
                CliError::config("armed predictor needs --arm <col,col>".into())
            })?;
            let columns = parse_columns(spec, &data)?;
            if columns.len() != 2 {
                return Err(CliError::config(format!(
                    "--arm expects exactly two columns, got {}",
                    columns.len()
                )));
            }
            let arm = forestlab::forest::ArmSpec::delta(columns[0], columns[1]);
            ModelDocument::ArmedForest(
                ArmedForest::fit(&data, arm, &params).map_err(CliError::config_msg)?,
            )
        }
        other => return Err(CliError::config(format!("unknown predictor kind {other:?}"))),
    };
    document.save(&args.output)?;
    eprintln!("saved model to {}", args.output.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let test = Dataset::read_csv(&args.test).map_err(CliError::io_or_parse)?;
    let model = ModelDocument::load(&args.model)?;
    let report = evaluate(model.as_predictor(), &test);
    let ev = report.explained_variance.map(|v| v.to_string()).unwrap_or_default();
    println!("mse,{}", report.mse);
    println!("mae,{}", report.mae);
    println!("explained_variance,{ev}");
    if let Some(path) = &args.output {
        let text = format!(
            "metric,value\nmse,{}\nmae,{}\nexplained_variance,{ev}\n",
            report.mse, report.mae
        );
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_importance(args: &ImportanceArgs) -> Result<(), CliError> {
    let test = Dataset::read_csv(&args.test).map_err(CliError::io_or_parse)?;
    let model = ModelDocument::load(&args.model)?;
    let report =
        permutation_importance(model.as_predictor(), &test, args.permutations, args.seed)
            .map_err(CliError::config_msg)?;
    let mut text = String::from("variable,importance_pct,mean_permuted_loss,e_hat,n_permutations\n");
    for v in &report.variables {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            v.name, v.importance_pct, v.mean_permuted_loss, report.e_hat, report.n_permutations
        ));
    }
    print!("{text}");
    if let Some(path) = &args.output {
        std::fs::write(path, &text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_usage(args: &UsageArgs) -> Result<(), CliError> {
    let train = Dataset::read_csv(&args.train).map_err(CliError::io_or_parse)?;
    let model = ModelDocument::load(&args.model)?;
    let ModelDocument::Forest(forest) = model else {
        return Err(CliError::config("usage statistics need a plain forest model".into()));
    };
    let watched = parse_columns(&args.watched, &train)?;
    let report =
        usage_statistics(&forest.trees, &watched, &train).map_err(CliError::config_msg)?;
    println!(
        "mid_construction_share,{}",
        report.mid_construction_share().map(|v| v.to_string()).unwrap_or_default()
    );
    println!("median_joint,{}", report.median_joint());
    println!("data_fraction_joint,{}", report.data_fraction_joint);
    if let Some(dir) = &args.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut profile = String::from("operation_index,splitting_trees,watched_splits,proportion\n");
        for op in &report.profile {
            profile.push_str(&format!(
                "{},{},{},{}\n",
                op.operation_index,
                op.splitting_trees,
                op.watched_splits,
                op.proportion().map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        let path = dir.join("usage_profile.csv");
        std::fs::write(&path, profile).map_err(|e| CliError::io(&path, e))?;
        let mut leaves = String::from("tree,n_leaves,joint,data_fraction_joint\n");
        for t in &report.trees {
            leaves.push_str(&format!(
                "{},{},{},{}\n",
                t.tree, t.n_leaves, t.joint, t.data_fraction_joint
            ));
        }
        let path = dir.join("leaf_usage.csv");
        std::fs::write(&path, leaves).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn cmd_experiment(command: &ExperimentCommand) -> Result<(), CliError> {
    match command {
        ExperimentCommand::List => {
            for (name, body) in config::BUNDLED {
                let config = ExperimentConfig::from_json(body).expect("bundled configs parse");
                println!(
                    "{name}{}",
                    if config.large { "  (large)" } else { "" }
                );
            }
            Ok(())
        }
        ExperimentCommand::Validate(args) => {
            let config = load_config(&args.config)?;
            let issues = config.validate();
            if issues.is_empty() {
                println!("ok");
                Ok(())
            } else {
                for issue in &issues {
                    eprintln!("error: {issue}");
                }
                Err(CliError::config(format!("{} issue(s) found", issues.len())))
            }
        }
        ExperimentCommand::Run(args) => {
            let mut config = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            let output_dir = args
                .output_dir
                .clone()
                .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| {
                    CliError::config("no output directory in config or --output-dir".into())
                })?;
            let manifest = experiment::run_experiment(&config, &output_dir, args.large)?;
            println!("{}", serde_json::to_string_pretty(&manifest["metrics"]).expect("json"));
            eprintln!("artifacts in {}", output_dir.display());
            Ok(())
        }
    }
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("FORESTLAB_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: failed to configure {n} worker threads: {e}");
                return ProcessExit::from(ExitCode::Config as u8);
            }
        }
    }
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Importance(args) => cmd_importance(args),
        Command::Usage(args) => cmd_usage(args),
        Command::Experiment(command) => cmd_experiment(command),
    };
    match result {
        Ok(()) => ProcessExit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ProcessExit::from(e.code as u8)
        }
    }
}
