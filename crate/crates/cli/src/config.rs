//! Run configuration: built-in defaults, overridden by a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use kge_core::models::{AlphaMode, ModelKind};
use kge_core::training::{TrainConfig, SWEEP_DIMS};
use kge_core::KgeError;

/// Environment variable naming the directory that holds dataset folders.
pub const DATA_ROOT_ENV: &str = "KGE_DATA_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    UnknownModel(String),
    #[error("{0}")]
    Core(#[from] KgeError),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Core(KgeError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// 2 usage, 3 data, 4 numeric failure, 5 invalid configuration value,
    /// 6 unknown model kind.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::UnknownModel(_) => 6,
            CliError::Core(e) => match e {
                KgeError::Numeric(_) => 4,
                KgeError::InvalidConfig(_) => 5,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

/// Settings that may come from the command line or a config file. Unset
/// fields fall through to the next source.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// TOML file with any of these settings (flags take precedence)
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// rote, roth, rotl or rot2l
    #[arg(long)]
    pub model: Option<String>,
    /// Dataset directory, or a name under $KGE_DATA_ROOT
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Negative samples per positive triple
    #[arg(long)]
    pub neg: Option<usize>,
    /// Rot2L mid-layer balance
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Self-adversarial sampling temperature
    #[arg(long)]
    pub adv_temp: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Add inverse relations and answer head queries through them
    #[arg(long)]
    pub reciprocal: Option<OnOff>,
    /// shared-vector or per-relation-scalar
    #[arg(long)]
    pub alpha_mode: Option<String>,
    /// Validations without improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// Validate every N epochs (0 disables)
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Checkpoint directory for eval/export (default OUT/checkpoint)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Comma-separated model kinds for bench/sweep
    #[arg(long)]
    pub models: Option<String>,
    /// Comma-separated dimensions for sweep
    #[arg(long)]
    pub dims: Option<String>,
    /// Timed epochs per model for bench
    #[arg(long)]
    pub bench_epochs: Option<usize>,
    /// Export precision: f64 or f32
    #[arg(long)]
    pub precision: Option<String>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl Settings {
    fn overlay(self, lower: Settings) -> Settings {
        overlay!(
            self,
            lower,
            config,
            model,
            dataset,
            dim,
            lr,
            batch,
            neg,
            gamma,
            adv_temp,
            epochs,
            seed,
            threads,
            reciprocal,
            alpha_mode,
            patience,
            eval_every,
            out,
            checkpoint,
            models,
            dims,
            bench_epochs,
            precision
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved configuration of one invocation; written to the output
/// directory as `run_config.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub reciprocal: bool,
    pub alpha_mode: AlphaMode,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub kinds: Vec<ModelKind>,
    pub dims: Vec<usize>,
    pub bench_epochs: usize,
    pub f32: bool,
    pub train: TrainConfig,
}

fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.trim()
        .parse()
        .map_err(|e: KgeError| CliError::UnknownModel(e.to_string()))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid {what} '{}'", p.trim())))
        })
        .collect()
}

impl RunConfig {
    pub fn resolve(command: &str, flags: Settings) -> Result<RunConfig, CliError> {
        let file = match &flags.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let s = flags.overlay(file);
        let d = TrainConfig::default();
        let train = TrainConfig {
            lr: s.lr.unwrap_or(d.lr),
            batch_size: s.batch.unwrap_or(d.batch_size),
            negatives: s.neg.unwrap_or(d.negatives),
            epochs: s.epochs.unwrap_or(d.epochs),
            dim: s.dim.unwrap_or(d.dim),
            gamma: s.gamma.unwrap_or(d.gamma),
            adv_temperature: s.adv_temp.unwrap_or(d.adv_temperature),
            seed: s.seed.unwrap_or(d.seed),
            patience: s.patience.unwrap_or(d.patience),
            eval_every: s.eval_every.unwrap_or(d.eval_every),
        };
        let model = match &s.model {
            Some(m) => parse_model(m)?,
            None => ModelKind::Rot2L,
        };
        let kinds = match &s.models {
            Some(list) => list
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(parse_model)
                .collect::<Result<Vec<_>, _>>()?,
            None => ModelKind::ALL.to_vec(),
        };
        let dims = match &s.dims {
            Some(list) => parse_list(list, "dimension")?,
            None => SWEEP_DIMS.to_vec(),
        };
        let alpha_mode = match &s.alpha_mode {
            Some(m) => m
                .parse()
                .map_err(|e: KgeError| CliError::Usage(e.to_string()))?,
            None => AlphaMode::default(),
        };
        let f32 = match s.precision.as_deref() {
            None | Some("f64") => false,
            Some("f32") => true,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "invalid precision '{other}' (expected f64 or f32)"
                )))
            }
        };
        if s.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let cfg = RunConfig {
            command: command.to_string(),
            model,
            dataset: s.dataset,
            reciprocal: s.reciprocal.is_none_or(|r| r == OnOff::On),
            alpha_mode,
            out: s.out.unwrap_or_else(|| PathBuf::from("runs").join(command)),
            threads: s.threads,
            checkpoint: s.checkpoint,
            kinds,
            dims,
            bench_epochs: s.bench_epochs.unwrap_or(5),
            f32,
            train,
        };
        cfg.train.validate()?;
        for &dim in &cfg.dims {
            if dim == 0 || dim % 2 != 0 {
                return Err(
                    KgeError::InvalidConfig(format!("dimension must be even, got {dim}")).into(),
                );
            }
        }
        Ok(cfg)
    }

    /// The dataset directory: the given path if it exists, otherwise the
    /// same name under `$KGE_DATA_ROOT`.
    pub fn dataset_dir(&self) -> Result<PathBuf, CliError> {
        let root = std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from);
        let path = match (&self.dataset, root) {
            (Some(p), _) if p.is_dir() => p.clone(),
            (Some(p), Some(root)) if p.is_relative() => root.join(p),
            (Some(p), _) => p.clone(),
            (None, _) => {
                return Err(CliError::Usage(format!(
                    "no dataset given (use --dataset DIR; names resolve under ${DATA_ROOT_ENV})"
                )))
            }
        };
        if !path.is_dir() {
            return Err(CliError::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            ));
        }
        Ok(path)
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out.join("checkpoint"))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = toml::to_string(self).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "dim = 16\nlr = 0.005\nmodel = \"rotl\"\nadv-temp = 0.5\n",
        )
        .unwrap();
        let flags = Settings {
            config: Some(path),
            lr: Some(0.0005),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("train", flags).unwrap();
        assert_eq!(cfg.train.dim, 16);
        assert_eq!(cfg.train.lr, 0.0005);
        assert_eq!(cfg.train.adv_temperature, 0.5);
        assert_eq!(cfg.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(cfg.model, ModelKind::RotL);
        assert!(cfg.reciprocal);
    }

    #[test]
    fn unknown_file_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dimension = 16\n").unwrap();
        let err = Settings::from_file(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let flags = Settings {
            dim: Some(33),
            ..Default::default()
        };
        let err = RunConfig::resolve("train", flags).unwrap_err();
        assert!(err.to_string().contains("dimension must be even"));
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn resolved_config_serializes() {
        let cfg = RunConfig::resolve("bench", Settings::default()).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("command = \"bench\""));
        assert!(text.contains("[train]"));
    }
}
