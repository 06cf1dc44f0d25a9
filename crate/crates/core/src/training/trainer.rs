use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::loss::nss_loss_grad;
use crate::data::{negative_sample_into, Corruption, Dataset, Triple};
use crate::error::{KgeError, Result};
use crate::eval::evaluate_split;
use crate::geometry as geo;
use crate::models::{slots, DenseGrad, GradLog, GradSink, Model, ModelKind, Scratch, BIAS, ENTITY};

/// Samples per parallel work item. Fixed so that gradient accumulation order
/// does not depend on the thread count.
const CHUNK: usize = 16;

pub const LR_GRID: [f64; 3] = [0.0005, 0.001, 0.005];
pub const BATCH_GRID: [usize; 3] = [100, 200, 500];
pub const NEG_GRID: [usize; 3] = [50, 200, 500];
pub const GAMMA_GRID: [f64; 4] = [0.1, 0.3, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub dim: usize,
    pub gamma: f64,
    pub adv_temperature: f64,
    pub seed: u64,
    /// Stale validations tolerated before stopping.
    pub patience: usize,
    /// Validate every this many epochs; 0 disables validation.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 500,
            negatives: 50,
            epochs: 500,
            dim: 32,
            gamma: 0.5,
            adv_temperature: 1.0,
            seed: 0,
            patience: 10,
            eval_every: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(KgeError::InvalidConfig(format!(
                "dimension must be even, got {}",
                self.dim
            )));
        }
        if self.batch_size == 0 || self.negatives == 0 {
            return Err(KgeError::InvalidConfig(
                "batch size and negatives must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(KgeError::InvalidConfig(format!(
                "invalid learning rate {}",
                self.lr
            )));
        }
        if !(self.adv_temperature > 0.0 && self.adv_temperature.is_finite()) {
            return Err(KgeError::InvalidConfig(format!(
                "invalid adversarial temperature {}",
                self.adv_temperature
            )));
        }
        Ok(())
    }

    /// Settings outside the searched grid. Accepted, but worth flagging.
    pub fn off_grid(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !LR_GRID.contains(&self.lr) {
            out.push(format!("learning rate {} not in {:?}", self.lr, LR_GRID));
        }
        if !BATCH_GRID.contains(&self.batch_size) {
            out.push(format!(
                "batch size {} not in {:?}",
                self.batch_size, BATCH_GRID
            ));
        }
        if !NEG_GRID.contains(&self.negatives) {
            out.push(format!(
                "negatives {} not in {:?}",
                self.negatives, NEG_GRID
            ));
        }
        if !GAMMA_GRID.contains(&self.gamma) {
            out.push(format!("gamma {} not in {:?}", self.gamma, GAMMA_GRID));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub seconds: f64,
    pub loss: f64,
    pub val_mrr: Option<f64>,
    pub val_hits10: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_mrr: Option<f64>,
    pub skipped_batches: usize,
}

impl TrainLog {
    /// Equality ignoring wall-clock timings.
    pub fn same_trajectory(&self, other: &TrainLog) -> bool {
        self.best_epoch == other.best_epoch
            && self.best_val_mrr == other.best_val_mrr
            && self.skipped_batches == other.skipped_batches
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.loss == b.loss
                    && a.val_mrr == b.val_mrr
                    && a.val_hits10 == b.val_hits10
            })
    }

    pub fn epoch_seconds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.seconds).collect()
    }

    /// Newline-delimited JSON, one record per epoch.
    pub fn write_ndjson(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| KgeError::io(path, e))?;
        for r in &self.records {
            let line = serde_json::to_string(r).expect("serializable record");
            writeln!(f, "{line}").map_err(|e| KgeError::io(path, e))?;
        }
        Ok(())
    }

    pub fn read_ndjson(path: &Path) -> Result<Vec<EpochRecord>> {
        let text = std::fs::read_to_string(path).map_err(|e| KgeError::io(path, e))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| KgeError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

/// Loss and gradient contributions of one positive triple and its negatives,
/// appended to `log`. Returns the (unscaled) loss.
#[allow(clippy::too_many_arguments)]
pub fn sample_loss_and_grad(
    model: &Model,
    positive: Triple,
    negatives: &[Triple],
    temperature: f64,
    scale: f64,
    log: &mut dyn GradSink,
    scratch: &mut Scratch,
    buffers: &mut SampleBuffers,
) -> f64 {
    let Triple {
        head: h,
        relation: r,
        tail: t,
    } = positive;
    let SampleBuffers {
        q,
        q_alt,
        gq,
        gq_alt,
        grel,
        neg_scores,
        g_neg,
    } = buffers;
    model.transform_into(h, r, q);

    let pos = model.score_query(q, h, r, t, scratch);
    neg_scores.clear();
    for n in negatives {
        let s = if n.head == h {
            model.score_query(q, h, r, n.tail, scratch)
        } else {
            model.transform_into(n.head, r, q_alt);
            model.score_query(q_alt, n.head, r, n.tail, scratch)
        };
        neg_scores.push(s);
    }
    let (loss, g_pos) = nss_loss_grad(pos, neg_scores, temperature, g_neg);

    gq.fill(0.0);
    grel.fill(0.0);
    let mut g_head_bias = 0.0;

    let targets = std::iter::once((positive, g_pos))
        .chain(negatives.iter().copied().zip(g_neg.iter().copied()));
    for (n, g) in targets {
        let g = g * scale;
        if n.head == h {
            model.distance_backward(r, q, n.tail, g, gq, log.row(ENTITY, n.tail), grel, scratch);
            g_head_bias += g;
        } else {
            model.transform_into(n.head, r, q_alt);
            gq_alt.fill(0.0);
            model.distance_backward(
                r,
                q_alt,
                n.tail,
                g,
                gq_alt,
                log.row(ENTITY, n.tail),
                grel,
                scratch,
            );
            log.row(BIAS, n.head)[0] += g;
            model.transform_backward(n.head, r, gq_alt, log);
        }
        log.row(BIAS, n.tail)[0] += g;
    }
    model.flush_distance_grad(r, grel, log);
    log.row(BIAS, h)[0] += g_head_bias;
    model.transform_backward(h, r, gq, log);
    loss
}

/// Reusable per-worker buffers for [`sample_loss_and_grad`].
pub struct SampleBuffers {
    q: Vec<f64>,
    q_alt: Vec<f64>,
    gq: Vec<f64>,
    gq_alt: Vec<f64>,
    grel: Vec<f64>,
    neg_scores: Vec<f64>,
    g_neg: Vec<f64>,
}

impl SampleBuffers {
    pub fn new(dim: usize) -> Self {
        SampleBuffers {
            q: vec![0.0; dim],
            q_alt: vec![0.0; dim],
            gq: vec![0.0; dim],
            gq_alt: vec![0.0; dim],
            grel: vec![0.0; dim],
            neg_scores: Vec::new(),
            g_neg: Vec::new(),
        }
    }
}

/// Re-projects hyperbolic rows touched by the last step: relation translations
/// into their relation's ball, entity rows into the smallest ball in use.
fn project_hyperbolic_rows(model: &mut Model, grad: &DenseGrad) {
    if model.kind() != ModelKind::RotH {
        return;
    }
    let nr = model.n_relations();
    let curv: Vec<f64> = (0..nr).map(|r| model.curvature(r)).collect();
    let c_max = curv.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    let tensors = model.tensors_mut();
    for &row in grad.touched_rows(ENTITY) {
        geo::project_to_ball_in_place(tensors[ENTITY].row_mut(row), c_max);
    }
    for slot in [slots::roth::TRANS1, slots::roth::TRANS2] {
        for &row in grad.touched_rows(slot) {
            geo::project_to_ball_in_place(tensors[slot].row_mut(row), curv[row]);
        }
    }
}

/// Mutable training state, kept separate so a benchmark can drive epochs.
pub struct Trainer<'a> {
    pub model: Model,
    dataset: &'a Dataset,
    config: TrainConfig,
    state: OptimizerState,
    grad: DenseGrad,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    corruption: Corruption,
    pub skipped_batches: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(model: Model, dataset: &'a Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if model.dim() != config.dim {
            return Err(KgeError::InvalidConfig(format!(
                "model dimension {} differs from configured {}",
                model.dim(),
                config.dim
            )));
        }
        if model.n_entities() != dataset.dictionary.n_entities()
            || model.n_relations() != dataset.dictionary.n_relations()
        {
            return Err(KgeError::InvalidConfig(
                "model shape does not match the dataset dictionary".into(),
            ));
        }
        Ok(Trainer {
            state: OptimizerState::new(model.tensors()),
            grad: DenseGrad::like(model.tensors()),
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x7261_696e),
            order: (0..dataset.store.train.len()).collect(),
            corruption: Corruption::for_reciprocal(dataset.reciprocal()),
            model,
            dataset,
            config,
            skipped_batches: 0,
        })
    }

    /// One pass over the shuffled training triples; returns the mean loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let train = &self.dataset.store.train;
        let n_entities = self.model.n_entities();
        let (k, temp) = (self.config.negatives, self.config.adv_temperature);
        let dim = self.model.dim();
        self.order.shuffle(&mut self.rng);

        let mut total = 0.0;
        let mut negatives: Vec<Triple> = Vec::new();
        for batch in self.order.chunks(self.config.batch_size) {
            negatives.clear();
            for &i in batch {
                negative_sample_into(
                    train[i],
                    n_entities,
                    k,
                    self.corruption,
                    &mut self.rng,
                    &mut negatives,
                );
            }
            let scale = 1.0 / batch.len() as f64;
            let model = &self.model;
            let results: Vec<(f64, GradLog)> = batch
                .par_chunks(CHUNK)
                .zip(negatives.par_chunks(CHUNK * k))
                .map(|(samples, negs)| {
                    let mut log = GradLog::new(model.tensors());
                    let mut scratch = Scratch::new(dim);
                    let mut bufs = SampleBuffers::new(dim);
                    let mut loss = 0.0;
                    for (j, &i) in samples.iter().enumerate() {
                        loss += sample_loss_and_grad(
                            model,
                            train[i],
                            &negs[j * k..(j + 1) * k],
                            temp,
                            scale,
                            &mut log,
                            &mut scratch,
                            &mut bufs,
                        );
                    }
                    (loss, log)
                })
                .collect();

            self.grad.clear();
            let mut batch_loss = 0.0;
            for (loss, log) in &results {
                batch_loss += loss;
                self.grad.absorb(log);
            }
            if !self.grad.all_finite() || !batch_loss.is_finite() {
                warn!("non-finite gradient or loss; skipping batch");
                self.skipped_batches += 1;
                continue;
            }
            total += batch_loss;
            adam_step(
                self.model.tensors_mut(),
                &self.grad,
                &mut self.state,
                self.config.lr,
            );
            project_hyperbolic_rows(&mut self.model, &self.grad);
        }
        Ok(total / train.len().max(1) as f64)
    }
}

/// Trains `model` on the dataset's training split.
///
/// Validation (filtered MRR / Hits@10 on the validation split) runs every
/// `eval_every` epochs. The parameters with the best validation MRR are
/// returned; training stops after `patience` validations without improvement.
/// With validation disabled the final parameters are returned.
pub fn train(model: Model, dataset: &Dataset, config: &TrainConfig) -> Result<(Model, TrainLog)> {
    let mut log = TrainLog::default();
    if config.epochs == 0 {
        return Ok((model, log));
    }
    for w in config.off_grid() {
        warn!("{w}");
    }
    let mut trainer = Trainer::new(model, dataset, config.clone())?;
    let mut best: Option<(f64, Model, usize)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let loss = trainer.run_epoch()?;
        let seconds = start.elapsed().as_secs_f64();
        if !loss.is_finite() {
            return Err(KgeError::Numeric(format!("loss diverged at epoch {epoch}")));
        }
        let mut record = EpochRecord {
            epoch,
            seconds,
            loss,
            val_mrr: None,
            val_hits10: None,
        };
        let mut stop = false;
        if config.eval_every > 0 && epoch % config.eval_every == 0 {
            let report = evaluate_split(&trainer.model, dataset, &dataset.store.valid)?;
            let hits10 = report.hits_at(10);
            record.val_mrr = Some(report.mrr);
            record.val_hits10 = Some(hits10);
            info!(
                "epoch {epoch}: loss {loss:.5} ({seconds:.2}s) val MRR {:.4} H@10 {hits10:.4}",
                report.mrr
            );
            if best.as_ref().is_none_or(|(m, _, _)| report.mrr > *m) {
                best = Some((report.mrr, trainer.model.clone(), epoch));
                stale = 0;
            } else {
                stale += 1;
                stop = stale >= config.patience;
            }
        } else {
            info!("epoch {epoch}: loss {loss:.5} ({seconds:.2}s)");
        }
        log.records.push(record);
        if stop {
            info!("early stop at epoch {epoch}");
            break;
        }
    }
    log.skipped_batches = trainer.skipped_batches;
    let final_epoch = log.records.last().map_or(0, |r| r.epoch);
    Ok(match best {
        Some((mrr, model, epoch)) => {
            log.best_epoch = epoch;
            log.best_val_mrr = Some(mrr);
            (model, log)
        }
        None => {
            log.best_epoch = final_epoch;
            (trainer.model, log)
        }
    })
}
