//! Negative-sampling training with sparse Adam, plus timing and sweep harnesses.

pub mod adam;
pub mod bench;
pub mod loss;
pub mod sweep;
pub mod trainer;

pub use adam::{adam_step, OptimizerState};
pub use bench::{benchmark_epoch_time, EpochTimings, KindTiming};
pub use loss::{adversarial_weights, nss_loss, nss_loss_grad, nss_loss_weighted};
pub use sweep::{dimension_sweep, sweep_csv, SweepRow, SWEEP_DIMS};
pub use trainer::{train, EpochRecord, TrainConfig, TrainLog, Trainer};
