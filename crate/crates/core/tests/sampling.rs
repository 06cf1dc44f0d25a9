use kge_core::data::{negative_sample, negative_sample_into, Corruption, Triple};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const WN18RR_ENTITIES: usize = 40_943;

#[test]
fn corrupted_entities_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut counts = vec![0u64; WN18RR_ENTITIES];
    let mut out = Vec::new();
    let triples = 2_000;
    for i in 0..triples {
        out.clear();
        let t = Triple::new(i % WN18RR_ENTITIES, 0, (i * 7) % WN18RR_ENTITIES);
        negative_sample_into(
            t,
            WN18RR_ENTITIES,
            500,
            Corruption::TailOnly,
            &mut rng,
            &mut out,
        );
        for n in &out {
            assert_eq!((n.head, n.relation), (t.head, t.relation));
            counts[n.tail] += 1;
        }
    }
    let total = (triples * 500) as f64;
    let expected = total / WN18RR_ENTITIES as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((WN18RR_ENTITIES - 1) as f64).unwrap();
    let p = 1.0 - dist.cdf(chi2);
    assert!(p > 1e-3, "chi2 {chi2}, p {p}");
}

#[test]
fn head_or_tail_mode_corrupts_each_side_half_the_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = Triple::new(0, 0, 1);
    let samples = negative_sample(t, 1_000_000, 20_000, Corruption::HeadOrTail, &mut rng);
    let heads = samples
        .iter()
        .filter(|n| n.tail == t.tail && n.head != t.head)
        .count();
    let tails = samples
        .iter()
        .filter(|n| n.head == t.head && n.tail != t.tail)
        .count();
    assert_eq!(heads + tails, samples.len());
    let frac = heads as f64 / samples.len() as f64;
    assert!((frac - 0.5).abs() < 0.015, "{frac}");
}

#[test]
fn sampling_is_seeded() {
    let t = Triple::new(2, 1, 3);
    let a = negative_sample(
        t,
        50,
        100,
        Corruption::HeadOrTail,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    let b = negative_sample(
        t,
        50,
        100,
        Corruption::HeadOrTail,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    assert_eq!(a, b);
}

#[test]
fn two_entity_corruption_stays_in_range() {
    let t = Triple::new(0, 0, 1);
    let s = negative_sample(
        t,
        2,
        1,
        Corruption::TailOnly,
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    assert_eq!(s.len(), 1);
    assert!(s[0].tail < 2);
}
