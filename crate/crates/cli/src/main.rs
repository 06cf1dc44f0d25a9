mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use config::{CliError, RunConfig, Settings};
use kge_core::checkpoint::{export_checkpoint, load_checkpoint, save_checkpoint, Precision};
use kge_core::data::{load_dataset, Dataset};
use kge_core::eval::evaluate;
use kge_core::models::{Model, ModelConfig};
use kge_core::training::{benchmark_epoch_time, dimension_sweep, sweep_csv, train};

#[derive(Debug, Parser)]
#[command(
    name = "kge",
    version,
    about = "Train and evaluate rotation-based knowledge graph embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model; writes checkpoint/, train_log.ndjson and test metrics.
    Train(Settings),
    /// Evaluate a checkpoint on the test split.
    Eval(Settings),
    /// Compare per-epoch training time across model kinds.
    Bench(Settings),
    /// Train and evaluate every (model, dimension) pair; writes sweep.csv.
    Sweep(Settings),
    /// Write a checkpoint's tensors as flat arrays plus manifest.
    Export(Settings),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (name, settings) = match command {
        Command::Train(s) => ("train", s),
        Command::Eval(s) => ("eval", s),
        Command::Bench(s) => ("bench", s),
        Command::Sweep(s) => ("sweep", s),
        Command::Export(s) => ("export", s),
    };
    let cfg = RunConfig::resolve(name, settings)?;
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("could not size the thread pool: {e}");
        }
    }
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    cfg.write(&cfg.out.join("run_config.toml"))?;
    match name {
        "train" => cmd_train(&cfg),
        "eval" => cmd_eval(&cfg),
        "bench" => cmd_bench(&cfg),
        "sweep" => cmd_sweep(&cfg),
        _ => cmd_export(&cfg),
    }
}

fn dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let dir = cfg.dataset_dir()?;
    info!("loading {}", dir.display());
    let data = load_dataset(&dir, cfg.reciprocal)?;
    info!(
        "{} entities, {} relations, {} / {} / {} triples",
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
        data.store.train.len(),
        data.store.valid.len(),
        data.store.test.len()
    );
    Ok(data)
}

fn model_config(cfg: &RunConfig, data: &Dataset) -> ModelConfig {
    let mut mc = ModelConfig::new(
        cfg.model,
        cfg.train.dim,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    mc.gamma = cfg.train.gamma;
    mc.alpha_mode = cfg.alpha_mode;
    mc
}

fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let data = dataset(cfg)?;
    let model = Model::new(model_config(cfg, &data), cfg.train.seed)?;
    let (model, log) = train(model, &data, &cfg.train)?;
    save_checkpoint(
        &model,
        &data.dictionary,
        cfg.train.seed,
        &cfg.out.join("checkpoint"),
    )?;
    log.write_ndjson(&cfg.out.join("train_log.ndjson"))?;
    let report = evaluate(&model, &data)?;
    report.write(&cfg.out.join("test"))?;
    println!("{}", report.to_table());
    Ok(())
}

fn load_model(cfg: &RunConfig, data: &Dataset) -> Result<Model, CliError> {
    let dir = cfg.checkpoint_dir();
    let (model, manifest) = load_checkpoint(&dir)?;
    manifest.check_dictionary(&data.dictionary)?;
    Ok(model)
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let data = dataset(cfg)?;
    let model = load_model(cfg, &data)?;
    let report = evaluate(&model, &data)?;
    report.write(&cfg.out)?;
    println!("{}", report.to_table());
    Ok(())
}

fn cmd_bench(cfg: &RunConfig) -> Result<(), CliError> {
    let data = dataset(cfg)?;
    let threads = cfg.threads.unwrap_or_else(rayon::current_num_threads);
    let timings = benchmark_epoch_time(&cfg.kinds, &data, &cfg.train, cfg.bench_epochs, threads)?;
    let table = timings.to_table();
    write(&cfg.out.join("bench.tsv"), &table)?;
    write(
        &cfg.out.join("bench.json"),
        &serde_json::to_string_pretty(&timings).expect("serializable timings"),
    )?;
    print!("{table}");
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let data = dataset(cfg)?;
    let rows = dimension_sweep(&cfg.kinds, &cfg.dims, &data, &cfg.train, cfg.alpha_mode)?;
    let csv = sweep_csv(&rows);
    write(&cfg.out.join("sweep.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_export(cfg: &RunConfig) -> Result<(), CliError> {
    let precision = if cfg.f32 {
        Precision::F32
    } else {
        Precision::F64
    };
    let manifest = export_checkpoint(
        &cfg.checkpoint_dir(),
        &cfg.out.join("embeddings"),
        precision,
    )?;
    info!("exported {} tensors", manifest.tensors.len());
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
