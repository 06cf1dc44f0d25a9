#![allow(dead_code)]

use kge_core::data::{Dataset, Dictionary, Triple};
use kge_core::models::{Model, ModelConfig, ModelKind};
use kge_core::training::TrainConfig;

/// 5 entities, 2 relations, 10 training triples.
pub fn toy_dataset(reciprocal: bool) -> Dataset {
    let dict = Dictionary::from_names(
        (0..5).map(|i| format!("e{i}")).collect(),
        vec!["next".into(), "skip".into()],
    )
    .unwrap();
    let mut train = Vec::new();
    for h in 0..5 {
        train.push(Triple::new(h, 0, (h + 1) % 5));
        train.push(Triple::new(h, 1, (h + 2) % 5));
    }
    let valid = vec![train[0], train[3]];
    let test = vec![train[4], train[7]];
    Dataset::from_parts(dict, train, valid, test, reciprocal).unwrap()
}

pub fn toy_config(dim: usize) -> TrainConfig {
    TrainConfig {
        lr: 0.005,
        batch_size: 5,
        negatives: 1,
        epochs: 200,
        dim,
        gamma: 0.5,
        adv_temperature: 1.0,
        seed: 7,
        patience: 10,
        eval_every: 0,
    }
}

pub fn model_for(kind: ModelKind, data: &Dataset, dim: usize, seed: u64) -> Model {
    let cfg = ModelConfig::new(
        kind,
        dim,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    Model::new(cfg, seed).unwrap()
}

use kge_core::data::Corruption;
use kge_core::geometry::{self as geo, Scaling};
use kge_core::models::{AlphaMode, DenseGrad, DistanceFn, Scratch};
use kge_core::training::adversarial_weights;
use kge_core::training::nss_loss_weighted;
use kge_core::training::trainer::{sample_loss_and_grad, SampleBuffers};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random parameters large enough to exercise every term; hyperbolic rows
/// stay well inside the ball. Magnitudes shrink with `√(4/d)` so vector norms
/// do not grow with the dimension.
pub fn randomized(config: ModelConfig, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shrink = (4.0 / config.dim as f64).sqrt().min(1.0);
    let mut m = Model::new(config, seed).unwrap();
    let hyperbolic = m.kind() == ModelKind::RotH;
    for t in m.tensors_mut() {
        let scale = shrink
            * match t.name.as_str() {
                "entity" | "trans1" | "trans2" if hyperbolic => 0.2,
                _ => 0.5,
            };
        for v in &mut t.data {
            *v = match t.name.as_str() {
                n if n.starts_with("alpha") => rng.random_range(0.5..1.5),
                "curvature" => rng.random_range(-0.5..1.0),
                _ => rng.random_range(-scale..scale),
            };
        }
    }
    m
}

/// Every model kind plus the alternative alpha/distance/mid-layer settings.
pub fn gradient_configs(d: usize, ne: usize, nr: usize) -> Vec<ModelConfig> {
    let mut out: Vec<ModelConfig> = ModelKind::ALL
        .iter()
        .map(|&k| ModelConfig::new(k, d, ne, nr))
        .collect();
    for kind in [ModelKind::RotL, ModelKind::Rot2L] {
        let mut c = ModelConfig::new(kind, d, ne, nr);
        c.alpha_mode = AlphaMode::PerRelationScalar;
        c.distance = DistanceFn::Squared;
        out.push(c);
    }
    let mut c = ModelConfig::new(ModelKind::Rot2L, d, ne, nr);
    c.use_mid = false;
    c.gamma = 0.3;
    out.push(c);
    out
}

/// Largest per-tensor relative error (‖analytic − numeric‖ / max norm)
/// between the training gradient of one sample's loss and central finite
/// differences. The self-adversarial weights are held at their unperturbed
/// values, as in training.
pub fn loss_gradient_error(
    model: &mut Model,
    positive: Triple,
    negatives: &[Triple],
    temperature: f64,
) -> f64 {
    let d = model.dim();
    let score = |m: &Model, t: Triple| m.score(t.head, t.relation, t.tail).unwrap();
    let neg_scores: Vec<f64> = negatives.iter().map(|&n| score(model, n)).collect();
    let weights = adversarial_weights(&neg_scores, temperature);
    let loss = |m: &Model| {
        let negs: Vec<f64> = negatives.iter().map(|&n| score(m, n)).collect();
        nss_loss_weighted(score(m, positive), &negs, &weights)
    };

    let mut grad = DenseGrad::like(model.tensors());
    let mut scratch = Scratch::new(d);
    let mut bufs = SampleBuffers::new(d);
    let value = sample_loss_and_grad(
        model,
        positive,
        negatives,
        temperature,
        1.0,
        &mut grad,
        &mut scratch,
        &mut bufs,
    );
    assert!((value - loss(model)).abs() < 1e-12, "loss value mismatch");

    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for ti in 0..model.tensors().len() {
        let n = model.tensors()[ti].len();
        let mut num = vec![0.0; n];
        for (k, slot) in num.iter_mut().enumerate() {
            let orig = model.tensors()[ti].data[k];
            model.tensors_mut()[ti].data[k] = orig + step;
            let plus = loss(model);
            model.tensors_mut()[ti].data[k] = orig - step;
            let minus = loss(model);
            model.tensors_mut()[ti].data[k] = orig;
            *slot = (plus - minus) / (2.0 * step);
        }
        let ana = &grad.grads[ti].data;
        let diff = ana
            .iter()
            .zip(&num)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = geo::norm(ana).max(geo::norm(&num));
        if scale > 1e-8 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}

/// Largest score magnitude at which central differences still resolve every
/// partial derivative. Beyond it the loss is so large that its rounding noise
/// swamps bias gradients of order one.
pub const WELL_CONDITIONED_SCORE: f64 = 1e6;

/// Worst loss-gradient error over `instances` random instances of `config`,
/// plus the number of draws rejected for a score beyond
/// [`WELL_CONDITIONED_SCORE`] (close to the pole of the flexible addition).
pub fn gradient_suite_with_rejections(
    config: &ModelConfig,
    instances: u64,
    seed: u64,
) -> (f64, u64) {
    let mut worst: f64 = 0.0;
    let (mut accepted, mut rejected, mut draw) = (0, 0, 0u64);
    while accepted < instances {
        let i = draw;
        draw += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 1_000_003 + i);
        let mut model = randomized(config.clone(), seed + i);
        let ne = config.n_entities;
        let nr = config.n_relations;
        let positive = Triple::new(
            rng.random_range(0..ne),
            rng.random_range(0..nr),
            rng.random_range(0..ne),
        );
        let mode = if i % 2 == 0 {
            Corruption::TailOnly
        } else {
            Corruption::HeadOrTail
        };
        let negatives = kge_core::data::negative_sample(positive, ne, 3, mode, &mut rng);
        let conditioned = std::iter::once(&positive).chain(&negatives).all(|t| {
            let s = model.score(t.head, t.relation, t.tail).unwrap();
            s.abs() <= WELL_CONDITIONED_SCORE
        });
        if !conditioned {
            rejected += 1;
            continue;
        }
        accepted += 1;
        worst = worst.max(loss_gradient_error(&mut model, positive, &negatives, 1.0));
    }
    (worst, rejected)
}

pub fn gradient_suite(config: &ModelConfig, instances: u64, seed: u64) -> f64 {
    gradient_suite_with_rejections(config, instances, seed).0
}

/// Independent filtered ranking: scores every candidate with single-triple
/// calls and builds the known-answer set by scanning the raw splits.
pub fn brute_force_ranks(model: &Model, data: &Dataset) -> Vec<usize> {
    let base = data.dictionary.n_base_relations();
    let all: Vec<Triple> = data
        .store
        .train
        .iter()
        .chain(&data.store.valid)
        .chain(&data.store.test)
        .copied()
        .filter(|t| t.relation < base)
        .collect();
    let ne = model.n_entities();
    let rank = |scores: &[f64], gold: usize, known: &[usize]| {
        let g = scores[gold];
        let (mut greater, mut equal) = (0, 0);
        for (e, &s) in scores.iter().enumerate().take(ne) {
            if e == gold || known.contains(&e) {
                continue;
            }
            if s > g {
                greater += 1;
            } else if s == g {
                equal += 1;
            }
        }
        #[allow(clippy::manual_div_ceil)]
        let half = (equal + 1) / 2;
        1 + greater + half
    };
    let mut out = Vec::new();
    for t in &data.store.test {
        let tails: Vec<f64> = (0..ne)
            .map(|e| model.score(t.head, t.relation, e).unwrap())
            .collect();
        let known: Vec<usize> = all
            .iter()
            .filter(|x| x.head == t.head && x.relation == t.relation)
            .map(|x| x.tail)
            .collect();
        out.push(rank(&tails, t.tail, &known));

        let heads: Vec<f64> = if data.reciprocal() {
            (0..ne)
                .map(|e| model.score(t.tail, t.relation + base, e).unwrap())
                .collect()
        } else {
            (0..ne)
                .map(|e| model.score(e, t.relation, t.tail).unwrap())
                .collect()
        };
        let known: Vec<usize> = all
            .iter()
            .filter(|x| x.tail == t.tail && x.relation == t.relation)
            .map(|x| x.head)
            .collect();
        out.push(rank(&heads, t.head, &known));
    }
    out
}

/// Small random graph with overlapping splits and repeated queries.
pub fn random_small_graph(seed: u64, reciprocal: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ne = rng.random_range(3..=20);
    let nr = rng.random_range(1..=3);
    let mut draw = |n: usize| -> Vec<Triple> {
        (0..n)
            .map(|_| {
                Triple::new(
                    rng.random_range(0..ne),
                    rng.random_range(0..nr),
                    rng.random_range(0..ne),
                )
            })
            .collect()
    };
    let train = draw(3 * ne);
    let valid = draw(4);
    let test = draw(8);
    let dict = Dictionary::from_names(
        (0..ne).map(|i| format!("e{i}")).collect(),
        (0..nr).map(|i| format!("r{i}")).collect(),
    )
    .unwrap();
    Dataset::from_parts(dict, train, valid, test, reciprocal).unwrap()
}

/// Worst errors of the geometry identities over `n` random inputs at d=32:
/// (x ⊕ x two ways, exp∘log round trip, rotation norm change,
/// Möbius rotation vs plain rotation).
pub fn geometry_property_errors(n: usize, seed: u64) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 32;
    let mut worst = [0.0f64; 4];
    for _ in 0..n {
        let c: f64 = rng.random_range(0.1..2.0);
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let radius = rng.random_range(0.0..0.9) / c.sqrt();
        let scale = radius / geo::norm(&dir).max(1e-12);
        let x: Vec<f64> = dir.iter().map(|v| v * scale).collect();

        // the doubling identity is stated at c = 1, inside the unit ball
        let x1: Vec<f64> = x.iter().map(|v| v * c.sqrt()).collect();
        let m = geo::mobius_add(&x1, &x1, 1.0);
        let f = geo::flexible_add(&x1, &x1, Scaling::Uniform(1.0));
        worst[0] = worst[0].max(max_abs_diff(&m, &f));

        let back = geo::exp_map0(&geo::log_map0(&x, c), c);
        worst[1] = worst[1].max(max_abs_diff(&back, &x));

        let rot: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ry = geo::givens_rotate(&rot, &y);
        worst[2] = worst[2].max((geo::norm(&ry) - geo::norm(&y)).abs());

        let mv = geo::mobius_matvec_rot(&rot, &x, c);
        let gr = geo::givens_rotate(&rot, &x);
        worst[3] = worst[3].max(max_abs_diff(&mv, &gr));
    }
    worst
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Best-of-`reps` wall-clock seconds for `calls` flexible additions and
/// `calls` Möbius additions at d=32, cycling over a fixed pool of inputs.
pub fn addition_kernel_seconds(calls: usize, reps: usize) -> (f64, f64) {
    use std::hint::black_box;
    use std::time::Instant;
    let d = 32;
    let pool = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let xs: Vec<Vec<f64>> = (0..pool)
        .map(|_| (0..d).map(|_| rng.random_range(-0.1..0.1)).collect())
        .collect();
    let ys: Vec<Vec<f64>> = (0..pool)
        .map(|_| (0..d).map(|_| rng.random_range(-0.1..0.1)).collect())
        .collect();
    let alpha = vec![1.0; d];
    let mut out = vec![0.0; d];
    let mut best = (f64::MAX, f64::MAX);
    for _ in 0..reps {
        let start = Instant::now();
        for i in 0..calls {
            let j = i % pool;
            geo::flexible_add_into(
                black_box(&xs[j]),
                black_box(&ys[j]),
                Scaling::PerCoord(&alpha),
                &mut out,
            );
            black_box(&out);
        }
        best.0 = best.0.min(start.elapsed().as_secs_f64());
        let start = Instant::now();
        for i in 0..calls {
            let j = i % pool;
            geo::mobius_add_into(black_box(&xs[j]), black_box(&ys[j]), 1.0, &mut out);
            black_box(&out);
        }
        best.1 = best.1.min(start.elapsed().as_secs_f64());
    }
    best
}
