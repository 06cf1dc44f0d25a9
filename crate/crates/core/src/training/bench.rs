//! Per-epoch wall-clock comparison of model kinds under one configuration.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::trainer::{TrainConfig, Trainer};
use crate::data::Dataset;
use crate::error::{KgeError, Result};
use crate::models::{Model, ModelConfig, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindTiming {
    pub kind: ModelKind,
    pub epoch_seconds: Vec<f64>,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTimings {
    pub threads: usize,
    pub timings: Vec<KindTiming>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl EpochTimings {
    pub fn median_of(&self, kind: ModelKind) -> Option<f64> {
        self.timings
            .iter()
            .find(|t| t.kind == kind)
            .map(|t| t.median_seconds)
    }

    /// `median(kind) / median(RotH)`, when both were measured.
    pub fn ratio_to_roth(&self, kind: ModelKind) -> Option<f64> {
        Some(self.median_of(kind)? / self.median_of(ModelKind::RotH)?)
    }

    /// Tab-separated table: kind, median seconds, ratio to RotH.
    pub fn to_table(&self) -> String {
        let mut s = String::from("model\tmedian_seconds\tratio_to_roth\n");
        for t in &self.timings {
            let ratio = self
                .ratio_to_roth(t.kind)
                .map_or_else(|| "-".to_string(), |r| format!("{r:.3}"));
            let _ = writeln!(s, "{}\t{:.4}\t{ratio}", t.kind, t.median_seconds);
        }
        s
    }
}

/// Runs `epochs` training epochs per kind (after one untimed warm-up epoch)
/// on a pool of `threads` workers and reports the median epoch time.
pub fn benchmark_epoch_time(
    kinds: &[ModelKind],
    dataset: &Dataset,
    config: &TrainConfig,
    epochs: usize,
    threads: usize,
) -> Result<EpochTimings> {
    if epochs == 0 {
        return Err(KgeError::InvalidConfig(
            "benchmark needs at least one epoch".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| KgeError::InvalidConfig(format!("thread pool: {e}")))?;
    let mut timings = Vec::new();
    for &kind in kinds {
        let mut mc = ModelConfig::new(
            kind,
            config.dim,
            dataset.dictionary.n_entities(),
            dataset.dictionary.n_relations(),
        );
        mc.gamma = config.gamma;
        let model = Model::new(mc, config.seed)?;
        let epoch_seconds = pool.install(|| -> Result<Vec<f64>> {
            let mut trainer = Trainer::new(model, dataset, config.clone())?;
            trainer.run_epoch()?;
            (0..epochs)
                .map(|_| {
                    let start = Instant::now();
                    trainer.run_epoch()?;
                    Ok(start.elapsed().as_secs_f64())
                })
                .collect()
        })?;
        timings.push(KindTiming {
            kind,
            median_seconds: median(&epoch_seconds),
            epoch_seconds,
        });
    }
    Ok(EpochTimings {
        threads: threads.max(1),
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
