mod common;

use kge_core::eval::{evaluate, rank_from_scores, rank_query, raw_rank, Direction, RankingReport};
use kge_core::models::{ModelConfig, ModelKind, BIAS};

fn ranks_of(report: &RankingReport) -> Vec<usize> {
    report.ranks.iter().map(|q| q.rank).collect()
}

#[test]
fn evaluation_matches_brute_force_on_small_graphs() {
    for seed in 0..40u64 {
        for reciprocal in [true, false] {
            let data = common::random_small_graph(seed, reciprocal);
            let kind = ModelKind::ALL[(seed % 4) as usize];
            let cfg = ModelConfig::new(
                kind,
                4,
                data.dictionary.n_entities(),
                data.dictionary.n_relations(),
            );
            let model = common::randomized(cfg, seed);
            let report = evaluate(&model, &data).unwrap();
            assert_eq!(
                ranks_of(&report),
                common::brute_force_ranks(&model, &data),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn constant_model_gets_mid_ranks_from_both_implementations() {
    let data = common::random_small_graph(3, true);
    let mut model = common::model_for(ModelKind::RotE, &data, 4, 0);
    for t in model.tensors_mut() {
        t.data.fill(0.0);
    }
    let report = evaluate(&model, &data).unwrap();
    assert_eq!(ranks_of(&report), common::brute_force_ranks(&model, &data));
    assert!(report
        .ranks
        .iter()
        .all(|q| q.rank > 1 || data.dictionary.n_entities() == 1));
}

#[test]
fn metrics_are_consistent_with_ranks() {
    let data = common::random_small_graph(5, true);
    let cfg = ModelConfig::new(
        ModelKind::RotL,
        4,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    let report = evaluate(&common::randomized(cfg, 1), &data).unwrap();
    let ranks = ranks_of(&report);
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64;
    assert!((report.mrr - mrr).abs() < 1e-12);
    assert!(report.hits_at(1) <= report.hits_at(3) && report.hits_at(3) <= report.hits_at(10));
    assert!(report.mrr > 0.0 && report.mrr <= 1.0);
    let per_rel_total: usize = report.per_relation.values().map(|s| s.count).sum();
    assert_eq!(per_rel_total, data.store.test.len());
}

#[test]
fn filtered_rank_never_exceeds_raw_rank() {
    let data = common::random_small_graph(9, false);
    let cfg = ModelConfig::new(
        ModelKind::RotH,
        4,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    let model = common::randomized(cfg, 2);
    for t in &data.store.test {
        let scores = model
            .score_batch(
                t.head,
                t.relation,
                &(0..model.n_entities()).collect::<Vec<_>>(),
            )
            .unwrap();
        let filtered = rank_from_scores(&scores, t.tail, data.filter.tails(t.head, t.relation));
        assert!(filtered <= raw_rank(&scores, t.tail));
        assert_eq!(
            filtered,
            rank_query(&model, &data, *t, Direction::Tail).unwrap()
        );
    }
}

#[test]
fn shifting_all_biases_leaves_ranks_unchanged() {
    let data = common::random_small_graph(12, true);
    let cfg = ModelConfig::new(
        ModelKind::Rot2L,
        4,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    let mut model = common::randomized(cfg, 4);
    // dyadic values keep the shifted sums exact
    for v in &mut model.tensors_mut()[BIAS].data {
        *v = (*v * 64.0).round() / 64.0;
    }
    let before = ranks_of(&evaluate(&model, &data).unwrap());
    for v in &mut model.tensors_mut()[BIAS].data {
        *v += 0.25;
    }
    assert_eq!(before, ranks_of(&evaluate(&model, &data).unwrap()));
}

#[test]
fn duplicated_test_set_gives_identical_metrics() {
    let data = common::random_small_graph(21, true);
    let cfg = ModelConfig::new(
        ModelKind::RotE,
        4,
        data.dictionary.n_entities(),
        data.dictionary.n_relations(),
    );
    let model = common::randomized(cfg, 8);
    let once = evaluate(&model, &data).unwrap();
    let mut doubled = data.clone();
    let extra = doubled.store.test.clone();
    doubled.store.test.extend(extra);
    let twice = evaluate(&model, &doubled).unwrap();
    assert!((once.mrr - twice.mrr).abs() < 1e-12);
    for k in [1, 3, 10] {
        assert!((once.hits_at(k) - twice.hits_at(k)).abs() < 1e-12);
    }
}

#[test]
fn single_relation_breakdown_equals_tail_hits() {
    let data = common::toy_dataset(false);
    let cfg = ModelConfig::new(ModelKind::RotL, 4, 5, 2);
    let model = common::randomized(cfg, 3);
    let mut one_rel = data.clone();
    one_rel.store.test.retain(|t| t.relation == 0);
    let report = evaluate(&model, &one_rel).unwrap();
    assert_eq!(report.per_relation.len(), 1);
    let tail: Vec<usize> = report
        .ranks
        .iter()
        .filter(|q| q.direction == Direction::Tail)
        .map(|q| q.rank)
        .collect();
    let hits10 = tail.iter().filter(|&&r| r <= 10).count() as f64 / tail.len() as f64;
    assert_eq!(report.per_relation["next"].hits10, hits10);
}

#[test]
fn report_files_are_written() {
    let data = common::toy_dataset(true);
    let model = common::model_for(ModelKind::RotE, &data, 4, 1);
    let report = evaluate(&model, &data).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    let metrics = std::fs::read_to_string(dir.path().join("metrics.ndjson")).unwrap();
    assert_eq!(metrics.lines().count(), 4 + report.per_relation.len());
    for line in metrics.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let ranks = std::fs::read_to_string(dir.path().join("ranks.tsv")).unwrap();
    assert_eq!(ranks.lines().count(), 1 + report.ranks.len());
    assert!(std::fs::read_to_string(dir.path().join("report.txt"))
        .unwrap()
        .contains("MRR"));
}
