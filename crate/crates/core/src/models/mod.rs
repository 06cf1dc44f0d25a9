//! Scoring models over a shared parameter layout.
//!
//! Every model stores its parameters as a list of dense [`Tensor`]s. Slots 0
//! and 1 are always the entity embeddings (`N_e × d`) and entity biases
//! (`N_e × 1`); the remaining slots are the relation-side parameters listed in
//! [`slots`]. Scoring is split into a transform `Q(h, r)` and a distance
//! `D(q, t)` so that a query is transformed once and compared against many
//! candidate tails.

mod params;
mod rot2l;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{KgeError, Result};
use crate::geometry::{self as geo, buf, Scaling, ScalingGrad};

pub use params::{DenseGrad, GradLog, GradSink, Tensor};
pub use rot2l::{rot2l_build_layer_params, rot2l_layer_params_backward, rot2l_mid};

pub const ENTITY: usize = 0;
pub const BIAS: usize = 1;

/// Tensor slot indices of the relation-side parameters, per model kind.
pub mod slots {
    pub mod rote {
        pub const ROT: usize = 2;
        pub const TRANS: usize = 3;
    }
    pub mod roth {
        pub const ROT: usize = 2;
        pub const TRANS1: usize = 3;
        pub const TRANS2: usize = 4;
        pub const CURV: usize = 5;
    }
    pub mod rotl {
        pub const ROT: usize = 2;
        pub const TRANS: usize = 3;
        pub const ALPHA_Q: usize = 4;
        pub const ALPHA_D: usize = 5;
    }
    pub mod rot2l {
        pub const M1: usize = 2;
        pub const M2: usize = 3;
        pub const F1: usize = 4;
        pub const F2: usize = 5;
        pub const ALPHA1: usize = 6;
        pub const ALPHA2: usize = 7;
        pub const ALPHA_D: usize = 8;
    }
}

/// Standard deviation of the normal initializer for embeddings.
pub const INIT_STD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    RotE,
    RotH,
    RotL,
    Rot2L,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::RotE,
        ModelKind::RotH,
        ModelKind::RotL,
        ModelKind::Rot2L,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::RotE => "rote",
            ModelKind::RotH => "roth",
            ModelKind::RotL => "rotl",
            ModelKind::Rot2L => "rot2l",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rote" => Ok(ModelKind::RotE),
            "roth" => Ok(ModelKind::RotH),
            "rotl" => Ok(ModelKind::RotL),
            "rot2l" => Ok(ModelKind::Rot2L),
            other => Err(KgeError::InvalidConfig(format!(
                "unknown model kind '{other}' (expected rote, roth, rotl or rot2l)"
            ))),
        }
    }
}

/// How the flexible-addition scaling `α` is parameterized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    /// One d-dimensional vector per use site, shared by all relations.
    #[default]
    SharedVector,
    /// One scalar per relation and use site.
    PerRelationScalar,
}

impl FromStr for AlphaMode {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared-vector" => Ok(AlphaMode::SharedVector),
            "per-relation-scalar" => Ok(AlphaMode::PerRelationScalar),
            other => Err(KgeError::InvalidConfig(format!(
                "unknown alpha mode '{other}' (expected shared-vector or per-relation-scalar)"
            ))),
        }
    }
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaMode::SharedVector => "shared-vector",
            AlphaMode::PerRelationScalar => "per-relation-scalar",
        })
    }
}

/// Nonlinearity applied to the residual norm by RotL and Rot2L.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceFn {
    /// `φ(x) = x eˣ`
    #[default]
    Phi,
    /// Plain squared norm (the "without distance function" ablation).
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dim: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    /// Rot2L mid-layer balance `γ`.
    pub gamma: f64,
    pub alpha_mode: AlphaMode,
    pub distance: DistanceFn,
    /// Rot2L: apply `tanh(q) + γ h` between the layers (false passes `q` through).
    pub use_mid: bool,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, dim: usize, n_entities: usize, n_relations: usize) -> Self {
        ModelConfig {
            kind,
            dim,
            n_entities,
            n_relations,
            gamma: 0.5,
            alpha_mode: AlphaMode::SharedVector,
            distance: DistanceFn::Phi,
            use_mid: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(KgeError::InvalidConfig(format!(
                "dimension must be even, got {}",
                self.dim
            )));
        }
        if self.n_entities == 0 || self.n_relations == 0 {
            return Err(KgeError::InvalidConfig(
                "model needs at least one entity and one relation".into(),
            ));
        }
        if !self.gamma.is_finite() {
            return Err(KgeError::InvalidConfig("gamma must be finite".into()));
        }
        Ok(())
    }

    /// Tensor shapes `(name, rows, cols)` in slot order.
    pub fn layout(&self) -> Vec<(&'static str, usize, usize)> {
        let (d, ne, nr) = (self.dim, self.n_entities, self.n_relations);
        let alpha = match self.alpha_mode {
            AlphaMode::SharedVector => (1, d),
            AlphaMode::PerRelationScalar => (nr, 1),
        };
        let mut out = vec![("entity", ne, d), ("entity_bias", ne, 1)];
        match self.kind {
            ModelKind::RotE => out.extend([("rot", nr, d), ("trans", nr, d)]),
            ModelKind::RotH => out.extend([
                ("rot", nr, d),
                ("trans1", nr, d),
                ("trans2", nr, d),
                ("curvature", nr, 1),
            ]),
            ModelKind::RotL => out.extend([
                ("rot", nr, d),
                ("trans", nr, d),
                ("alpha_q", alpha.0, alpha.1),
                ("alpha_d", alpha.0, alpha.1),
            ]),
            ModelKind::Rot2L => out.extend([
                ("m1", nr, d),
                ("m2", nr, d),
                ("f1", 1, d),
                ("f2", 1, d),
                ("alpha1", alpha.0, alpha.1),
                ("alpha2", alpha.0, alpha.1),
                ("alpha_d", alpha.0, alpha.1),
            ]),
        }
        out
    }
}

/// A scoring model: configuration plus its parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    tensors: Vec<Tensor>,
}

/// Per-thread scratch for scoring loops.
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Scratch {
            a: vec![0.0; dim],
            b: vec![0.0; dim],
        }
    }
}

impl Model {
    /// Seeded initialization: embeddings `~ N(0, INIT_STD²)`, rotation
    /// coordinates `~ U(-1, 1)`, biases 0, curvatures 1, scalings 1.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let d = config.dim;
        let tensors = config
            .layout()
            .into_iter()
            .map(|(name, rows, cols)| {
                let mut t = Tensor::zeros(name, rows, cols);
                match name {
                    "entity_bias" => {}
                    "curvature" => t.data.fill(geo::raw_for_curvature(1.0)),
                    n if n.starts_with("alpha") => t.data.fill(1.0),
                    "rot" => t
                        .data
                        .iter_mut()
                        .for_each(|v| *v = rng.random_range(-1.0..1.0)),
                    // translation half from N(0, σ²), rotation half uniform
                    "m1" | "m2" | "f1" | "f2" => {
                        for row in t.data.chunks_exact_mut(d) {
                            for v in &mut row[..d / 2] {
                                *v = normal.sample(&mut rng);
                            }
                            for v in &mut row[d / 2..] {
                                *v = rng.random_range(-1.0..1.0);
                            }
                        }
                    }
                    _ => t.data.iter_mut().for_each(|v| *v = normal.sample(&mut rng)),
                }
                t
            })
            .collect();
        Ok(Model { config, tensors })
    }

    /// Builds a model from existing tensors, checking names and shapes.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if layout.len() != tensors.len() {
            return Err(KgeError::Checkpoint(format!(
                "expected {} tensors for {}, got {}",
                layout.len(),
                config.kind,
                tensors.len()
            )));
        }
        for ((name, rows, cols), t) in layout.iter().zip(&tensors) {
            if t.name != *name || t.rows != *rows || t.cols != *cols || t.data.len() != rows * cols
            {
                return Err(KgeError::Checkpoint(format!(
                    "tensor '{}' ({}x{}) does not match expected '{}' ({}x{})",
                    t.name, t.rows, t.cols, name, rows, cols
                )));
            }
        }
        Ok(Model { config, tensors })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn n_entities(&self) -> usize {
        self.config.n_entities
    }

    pub fn n_relations(&self) -> usize {
        self.config.n_relations
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        self.config.gamma = gamma;
    }

    /// Number of trainable relation-side parameters (everything except the
    /// entity embeddings and biases).
    pub fn relation_param_count(&self) -> usize {
        self.tensors[2..].iter().map(Tensor::len).sum()
    }

    pub fn entity_embedding(&self, e: usize) -> &[f64] {
        self.tensors[ENTITY].row(e)
    }

    pub fn entity_bias(&self, e: usize) -> f64 {
        self.tensors[BIAS].data[e]
    }

    /// Effective curvature of relation `r` (RotH only).
    pub fn curvature(&self, r: usize) -> f64 {
        debug_assert_eq!(self.kind(), ModelKind::RotH);
        geo::softplus(self.tensors[slots::roth::CURV].data[r])
    }

    pub fn check_entity(&self, e: usize) -> Result<()> {
        if e >= self.n_entities() {
            return Err(KgeError::IdOutOfRange {
                kind: "entity",
                id: e,
                size: self.n_entities(),
            });
        }
        Ok(())
    }

    pub fn check_relation(&self, r: usize) -> Result<()> {
        if r >= self.n_relations() {
            return Err(KgeError::IdOutOfRange {
                kind: "relation",
                id: r,
                size: self.n_relations(),
            });
        }
        Ok(())
    }

    fn alpha(&self, slot: usize, r: usize) -> Scaling<'_> {
        match self.config.alpha_mode {
            AlphaMode::SharedVector => Scaling::PerCoord(self.tensors[slot].row(0)),
            AlphaMode::PerRelationScalar => Scaling::Uniform(self.tensors[slot].data[r]),
        }
    }

    fn alpha_row(&self, r: usize) -> usize {
        match self.config.alpha_mode {
            AlphaMode::SharedVector => 0,
            AlphaMode::PerRelationScalar => r,
        }
    }

    /// Adds a local alpha gradient (length `d`, or the scalar in slot 0) to the sink.
    fn flush_alpha(&self, slot: usize, r: usize, g: &[f64], sink: &mut dyn GradSink) {
        let row = sink.row(slot, self.alpha_row(r));
        for (d, s) in row.iter_mut().zip(g) {
            *d += s;
        }
    }

    fn alpha_grad<'a>(&self, g: &'a mut [f64]) -> ScalingGrad<'a> {
        match self.config.alpha_mode {
            AlphaMode::SharedVector => ScalingGrad::PerCoord(g),
            AlphaMode::PerRelationScalar => ScalingGrad::Uniform(&mut g[0]),
        }
    }

    // -----------------------------------------------------------------------
    // Forward

    /// `F(h, r, t)` with id validation.
    pub fn score(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        self.check_entity(t)?;
        let mut s = Scratch::new(self.dim());
        let q = self.transform(h, r);
        Ok(self.score_query(&q, h, r, t, &mut s))
    }

    /// Transformed head `Q(h, r)`. Ids are not validated.
    pub fn transform(&self, h: usize, r: usize) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        self.transform_into(h, r, &mut q);
        q
    }

    pub fn transform_into(&self, h: usize, r: usize, q: &mut [f64]) {
        let hv = self.entity_embedding(h);
        let d = self.dim();
        match self.kind() {
            ModelKind::RotE => {
                use slots::rote::*;
                geo::givens_rotate_into(self.tensors[ROT].row(r), hv, q);
                for (o, b) in q.iter_mut().zip(self.tensors[TRANS].row(r)) {
                    *o += b;
                }
            }
            ModelKind::RotH => {
                use slots::roth::*;
                let c = self.curvature(r);
                let hp = project(hv, c);
                let r1 = project(self.tensors[TRANS1].row(r), c);
                let r2 = project(self.tensors[TRANS2].row(r), c);
                let mut a = buf(d);
                geo::mobius_add_into(&hp, &r1, c, &mut a);
                let mut b = buf(d);
                geo::mobius_matvec_rot_into(self.tensors[ROT].row(r), &a, c, &mut b);
                geo::mobius_add_into(&b, &r2, c, q);
            }
            ModelKind::RotL => {
                use slots::rotl::*;
                let mut hr = buf(d);
                geo::givens_rotate_into(self.tensors[ROT].row(r), hv, &mut hr);
                geo::flexible_add_into(&hr, self.tensors[TRANS].row(r), self.alpha(ALPHA_Q, r), q);
            }
            ModelKind::Rot2L => {
                let f = self.rot2l_forward(h, r);
                q.copy_from_slice(&f.q);
            }
        }
    }

    /// Distance term `D(q, t)` of the score (no biases).
    pub fn distance(&self, r: usize, q: &[f64], t: usize, s: &mut Scratch) -> f64 {
        let tv = self.entity_embedding(t);
        match self.kind() {
            ModelKind::RotE => -q
                .iter()
                .zip(tv)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>(),
            ModelKind::RotH => {
                let c = self.curvature(r);
                let tp = &mut s.a;
                tp.copy_from_slice(tv);
                geo::project_to_ball_in_place(tp, c);
                let dist = geo::hyperbolic_distance(q, tp, c);
                -dist * dist
            }
            ModelKind::RotL | ModelKind::Rot2L => {
                let n = geo::flexible_residual_norm(q, tv, self.alpha(self.alpha_d_slot(), r));
                -self.residual_value(n)
            }
        }
    }

    fn alpha_d_slot(&self) -> usize {
        match self.kind() {
            ModelKind::RotL => slots::rotl::ALPHA_D,
            _ => slots::rot2l::ALPHA_D,
        }
    }

    fn residual_value(&self, n: f64) -> f64 {
        match self.config.distance {
            DistanceFn::Phi => n * n.exp(),
            DistanceFn::Squared => n * n,
        }
    }

    fn residual_slope(&self, n: f64) -> f64 {
        match self.config.distance {
            DistanceFn::Phi => n.exp() * (1.0 + n),
            DistanceFn::Squared => 2.0 * n,
        }
    }

    /// Full score given a precomputed `q = Q(h, r)`.
    #[inline]
    pub fn score_query(&self, q: &[f64], h: usize, r: usize, t: usize, s: &mut Scratch) -> f64 {
        self.distance(r, q, t, s) + self.entity_bias(h) + self.entity_bias(t)
    }

    /// Scores `(h, r, c)` for every candidate tail `c`; element `i` equals
    /// `score(h, r, candidates[i])` bit for bit.
    pub fn score_batch(&self, h: usize, r: usize, candidates: &[usize]) -> Result<Vec<f64>> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        for &c in candidates {
            self.check_entity(c)?;
        }
        let mut out = Vec::with_capacity(candidates.len());
        self.score_tails_into(h, r, candidates.iter().copied(), &mut out);
        Ok(out)
    }

    /// Scores `(c, r, t)` for every candidate head `c`.
    pub fn score_batch_heads(&self, candidates: &[usize], r: usize, t: usize) -> Result<Vec<f64>> {
        self.check_entity(t)?;
        self.check_relation(r)?;
        for &c in candidates {
            self.check_entity(c)?;
        }
        let mut out = Vec::with_capacity(candidates.len());
        self.score_heads_into(candidates.iter().copied(), r, t, &mut out);
        Ok(out)
    }

    pub(crate) fn score_tails_into(
        &self,
        h: usize,
        r: usize,
        candidates: impl Iterator<Item = usize>,
        out: &mut Vec<f64>,
    ) {
        let mut s = Scratch::new(self.dim());
        let q = self.transform(h, r);
        out.extend(candidates.map(|t| self.score_query(&q, h, r, t, &mut s)));
    }

    pub(crate) fn score_heads_into(
        &self,
        candidates: impl Iterator<Item = usize>,
        r: usize,
        t: usize,
        out: &mut Vec<f64>,
    ) {
        let mut s = Scratch::new(self.dim());
        let mut q = vec![0.0; self.dim()];
        out.extend(candidates.map(|h| {
            self.transform_into(h, r, &mut q);
            self.score_query(&q, h, r, t, &mut s)
        }));
    }

    // -----------------------------------------------------------------------
    // Backward

    /// Accumulates `gq · ∂Q(h, r)/∂θ` into the sink.
    pub fn transform_backward(&self, h: usize, r: usize, gq: &[f64], sink: &mut dyn GradSink) {
        let d = self.dim();
        let hv = self.entity_embedding(h);
        let mut gh = buf(d);
        match self.kind() {
            ModelKind::RotE => {
                use slots::rote::*;
                add_into(sink.row(TRANS, r), gq);
                let mut grot = buf(d);
                geo::givens_rotate_backward(self.tensors[ROT].row(r), hv, gq, &mut grot, &mut gh);
                add_into(sink.row(ROT, r), &grot);
            }
            ModelKind::RotH => {
                use slots::roth::*;
                let raw = self.tensors[CURV].data[r];
                let c = geo::softplus(raw);
                let (t1, t2, rot) = (
                    self.tensors[TRANS1].row(r),
                    self.tensors[TRANS2].row(r),
                    self.tensors[ROT].row(r),
                );
                let hp = project(hv, c);
                let r1 = project(t1, c);
                let r2 = project(t2, c);
                let mut a = buf(d);
                geo::mobius_add_into(&hp, &r1, c, &mut a);
                let mut b = buf(d);
                geo::mobius_matvec_rot_into(rot, &a, c, &mut b);

                let mut gb = buf(d);
                let mut gr2 = buf(d);
                let mut gc = geo::mobius_add_backward(&b, &r2, c, gq, &mut gb, &mut gr2);
                let mut ga = buf(d);
                let mut grot = buf(d);
                gc += geo::mobius_matvec_rot_backward(rot, &a, c, &gb, &mut grot, &mut ga);
                let mut ghp = buf(d);
                let mut gr1 = buf(d);
                gc += geo::mobius_add_backward(&hp, &r1, c, &ga, &mut ghp, &mut gr1);
                gc += geo::project_to_ball_backward(hv, c, &ghp, &mut gh);
                let mut gt1 = buf(d);
                gc += geo::project_to_ball_backward(t1, c, &gr1, &mut gt1);
                let mut gt2 = buf(d);
                gc += geo::project_to_ball_backward(t2, c, &gr2, &mut gt2);

                add_into(sink.row(ROT, r), &grot);
                add_into(sink.row(TRANS1, r), &gt1);
                add_into(sink.row(TRANS2, r), &gt2);
                sink.row(CURV, r)[0] += gc * geo::sigmoid(raw);
            }
            ModelKind::RotL => {
                use slots::rotl::*;
                let rot = self.tensors[ROT].row(r);
                let trans = self.tensors[TRANS].row(r);
                let mut hr = buf(d);
                geo::givens_rotate_into(rot, hv, &mut hr);
                let mut ghr = buf(d);
                let mut gtrans = buf(d);
                let mut galpha = buf(d);
                geo::flexible_add_backward(
                    &hr,
                    trans,
                    self.alpha(ALPHA_Q, r),
                    gq,
                    &mut ghr,
                    &mut gtrans,
                    self.alpha_grad(&mut galpha),
                );
                let mut grot = buf(d);
                geo::givens_rotate_backward(rot, hv, &ghr, &mut grot, &mut gh);
                add_into(sink.row(ROT, r), &grot);
                add_into(sink.row(TRANS, r), &gtrans);
                self.flush_alpha(ALPHA_Q, r, &galpha, sink);
            }
            ModelKind::Rot2L => self.rot2l_backward(h, r, gq, &mut gh, sink),
        }
        add_into(sink.row(ENTITY, h), &gh);
    }

    /// Accumulates `g · ∂D(q, t)/∂(q, t)` into `gq` and `gt`, and the
    /// relation-side distance gradient (RotH curvature raw value, or the
    /// distance scaling) into `grel`, a length-`d` buffer that the caller
    /// hands to [`flush_distance_grad`](Self::flush_distance_grad).
    #[allow(clippy::too_many_arguments)]
    pub fn distance_backward(
        &self,
        r: usize,
        q: &[f64],
        t: usize,
        g: f64,
        gq: &mut [f64],
        gt: &mut [f64],
        grel: &mut [f64],
        s: &mut Scratch,
    ) {
        let tv = self.entity_embedding(t);
        match self.kind() {
            ModelKind::RotE => {
                for i in 0..q.len() {
                    let diff = 2.0 * g * (q[i] - tv[i]);
                    gq[i] -= diff;
                    gt[i] += diff;
                }
            }
            ModelKind::RotH => {
                let raw = self.tensors[slots::roth::CURV].data[r];
                let c = geo::softplus(raw);
                let tp = &mut s.a;
                tp.copy_from_slice(tv);
                geo::project_to_ball_in_place(tp, c);
                let dist = geo::hyperbolic_distance(q, tp, c);
                let gtp = &mut s.b;
                gtp.fill(0.0);
                let mut gc = geo::hyperbolic_distance_backward(q, tp, c, -2.0 * g * dist, gq, gtp);
                gc += geo::project_to_ball_backward(tv, c, gtp, gt);
                grel[0] += gc * geo::sigmoid(raw);
            }
            ModelKind::RotL | ModelKind::Rot2L => {
                let alpha = self.alpha(self.alpha_d_slot(), r);
                let n = geo::flexible_residual_norm(q, tv, alpha);
                let gn = -g * self.residual_slope(n);
                geo::flexible_residual_norm_backward(
                    q,
                    tv,
                    alpha,
                    gn,
                    gq,
                    gt,
                    self.alpha_grad(grel),
                );
            }
        }
    }

    pub fn flush_distance_grad(&self, r: usize, grel: &[f64], sink: &mut dyn GradSink) {
        match self.kind() {
            ModelKind::RotE => {}
            ModelKind::RotH => sink.row(slots::roth::CURV, r)[0] += grel[0],
            ModelKind::RotL | ModelKind::Rot2L => {
                self.flush_alpha(self.alpha_d_slot(), r, grel, sink)
            }
        }
    }

    /// Accumulates `g · ∂F(h, r, t)/∂θ` for a single triple.
    pub fn score_backward(&self, h: usize, r: usize, t: usize, g: f64, sink: &mut dyn GradSink) {
        let d = self.dim();
        let mut s = Scratch::new(d);
        let q = self.transform(h, r);
        let mut gq = vec![0.0; d];
        let mut gt = vec![0.0; d];
        let mut grel = vec![0.0; d];
        self.distance_backward(r, &q, t, g, &mut gq, &mut gt, &mut grel, &mut s);
        add_into(sink.row(ENTITY, t), &gt);
        self.flush_distance_grad(r, &grel, sink);
        sink.row(BIAS, h)[0] += g;
        sink.row(BIAS, t)[0] += g;
        self.transform_backward(h, r, &gq, sink);
    }
}

#[inline]
pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn project(x: &[f64], c: f64) -> geo::Buf {
    let mut out: geo::Buf = x.iter().copied().collect();
    geo::project_to_ball_in_place(&mut out, c);
    out
}

/// RotL/Rot2L distance of a transformed head `q` to `t`:
/// `-φ(‖(-q) ⊕_α t‖) + b_h + b_t` with `φ(x) = x eˣ`.
pub fn rotl_distance(q: &[f64], t: &[f64], alpha_d: Scaling<'_>, b_h: f64, b_t: f64) -> f64 {
    let neg: Vec<f64> = q.iter().map(|v| -v).collect();
    let n = geo::norm(&geo::flexible_add(&neg, t, alpha_d));
    -n * n.exp() + b_h + b_t
}
