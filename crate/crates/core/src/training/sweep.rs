//! Train-and-evaluate grid over model kinds and embedding dimensions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trainer::{train, TrainConfig};
use crate::data::Dataset;
use crate::error::Result;
use crate::eval::evaluate;
use crate::models::{AlphaMode, Model, ModelConfig, ModelKind};

pub const SWEEP_DIMS: [usize; 5] = [8, 16, 32, 64, 128];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: ModelKind,
    pub dim: usize,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

/// Trains each `(kind, dim)` pair with `config` (dimension overridden) and
/// evaluates it on the test split.
pub fn dimension_sweep(
    kinds: &[ModelKind],
    dims: &[usize],
    dataset: &Dataset,
    config: &TrainConfig,
    alpha_mode: AlphaMode,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for &dim in dims {
            let cfg = TrainConfig {
                dim,
                ..config.clone()
            };
            let mut mc = ModelConfig::new(
                kind,
                dim,
                dataset.dictionary.n_entities(),
                dataset.dictionary.n_relations(),
            );
            mc.gamma = cfg.gamma;
            mc.alpha_mode = alpha_mode;
            let model = Model::new(mc, cfg.seed)?;
            let (model, _) = train(model, dataset, &cfg)?;
            let report = evaluate(&model, dataset)?;
            rows.push(SweepRow {
                kind,
                dim,
                mrr: report.mrr,
                hits1: report.hits_at(1),
                hits3: report.hits_at(3),
                hits10: report.hits_at(10),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("model,dim,mrr,hits@1,hits@3,hits@10\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            r.kind, r.dim, r.mrr, r.hits1, r.hits3, r.hits10
        );
    }
    s
}
