//! Knowledge graph embeddings built on Givens rotations.
//!
//! Four scoring models share one interface, `F(h, r, t) = D(Q(h, r), t) + b_h + b_t`:
//!
//! * **RotE**: Euclidean rotation then translation, squared Euclidean distance.
//! * **RotH**: translation, rotation, translation on a Poincaré ball with a
//!   learned per-relation curvature, squared hyperbolic distance.
//! * **RotL**: rotation followed by a *flexible addition*
//!   `α ⊙ (x + y) / (1 + <x, y>)`, scored with `φ(x) = x eˣ` of the residual norm.
//! * **Rot2L**: two stacked RotL layers joined by `tanh(q) + γ h`, with half of
//!   each layer's relation parameters shared across relations.
//!
//! The crate covers data loading with filtered-evaluation indexes, hand-derived
//! gradients for every model, self-adversarial negative-sampling training with
//! sparse Adam, filtered ranking metrics and an epoch-timing benchmark.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod models;
pub mod training;

pub use error::{KgeError, Result};
