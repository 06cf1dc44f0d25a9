//! Filtered link-prediction ranking and metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Triple};
use crate::error::{KgeError, Result};
use crate::models::Model;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `(h, r, ?)`
    Tail,
    /// `(?, r, t)`
    Head,
}

/// Filtered rank of `scores[gold]` among `scores`, skipping the indices in
/// `known` (sorted, may contain `gold`). Ties count half, rounded up.
///
/// A NaN gold score ranks last; NaN candidates never outrank the gold.
pub fn rank_from_scores(scores: &[f64], gold: usize, known: &[usize]) -> usize {
    let g = scores[gold];
    let mut greater = 0usize;
    let mut equal = 0usize;
    let mut valid = 0usize;
    let mut skip = known.iter().copied().peekable();
    for (i, &s) in scores.iter().enumerate() {
        while skip.peek().is_some_and(|&k| k < i) {
            skip.next();
        }
        if i == gold || skip.peek() == Some(&i) {
            continue;
        }
        valid += 1;
        if s > g {
            greater += 1;
        } else if s == g {
            equal += 1;
        }
    }
    if g.is_nan() {
        return valid + 1;
    }
    1 + greater + equal.div_ceil(2)
}

/// Unfiltered rank with the same tie rule.
pub fn raw_rank(scores: &[f64], gold: usize) -> usize {
    rank_from_scores(scores, gold, &[])
}

/// Ranks the gold answer of `triple` in one direction, scoring all entities.
///
/// Head queries on a reciprocal dataset are answered as tail queries of the
/// inverse relation.
pub fn rank_query(
    model: &Model,
    dataset: &Dataset,
    triple: Triple,
    direction: Direction,
) -> Result<usize> {
    let ne = model.n_entities();
    let mut scores = Vec::with_capacity(ne);
    rank_query_with(model, dataset, triple, direction, &mut scores)
}

fn rank_query_with(
    model: &Model,
    dataset: &Dataset,
    triple: Triple,
    direction: Direction,
    scores: &mut Vec<f64>,
) -> Result<usize> {
    model.check_entity(triple.head)?;
    model.check_entity(triple.tail)?;
    model.check_relation(triple.relation)?;
    let ne = model.n_entities();
    scores.clear();
    let (gold, known) = match direction {
        Direction::Tail => {
            model.score_tails_into(triple.head, triple.relation, 0..ne, scores);
            (
                triple.tail,
                dataset.filter.tails(triple.head, triple.relation),
            )
        }
        Direction::Head if dataset.reciprocal() => {
            let inv = dataset.dictionary.inverse_relation(triple.relation);
            model.check_relation(inv)?;
            model.score_tails_into(triple.tail, inv, 0..ne, scores);
            (triple.head, dataset.filter.tails(triple.tail, inv))
        }
        Direction::Head => {
            model.score_heads_into(0..ne, triple.relation, triple.tail, scores);
            (
                triple.head,
                dataset.filter.heads(triple.tail, triple.relation),
            )
        }
    };
    if known.binary_search(&gold).is_err() {
        return Err(KgeError::FilterCorruption(format!(
            "gold entity {gold} missing from the filter set of ({}, {}, {}) [{direction:?}]",
            triple.head, triple.relation, triple.tail
        )));
    }
    Ok(rank_from_scores(scores, gold, known))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryRank {
    pub triple: Triple,
    pub direction: Direction,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub count: usize,
    pub mrr: f64,
    pub hits10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub ranks: Vec<QueryRank>,
    pub mrr: f64,
    /// Hits@k for k in [`HITS_AT`].
    pub hits: BTreeMap<usize, f64>,
    /// Tail-direction statistics per relation name.
    pub per_relation: BTreeMap<String, RelationStats>,
}

fn mrr_of(ranks: impl Iterator<Item = usize> + Clone) -> (usize, f64) {
    let n = ranks.clone().count();
    if n == 0 {
        return (0, 0.0);
    }
    (n, ranks.map(|r| 1.0 / r as f64).sum::<f64>() / n as f64)
}

fn hits_of(ranks: impl Iterator<Item = usize> + Clone, k: usize) -> f64 {
    let n = ranks.clone().count();
    if n == 0 {
        return 0.0;
    }
    ranks.filter(|&r| r <= k).count() as f64 / n as f64
}

impl RankingReport {
    pub fn from_ranks(ranks: Vec<QueryRank>, dataset: &Dataset) -> Self {
        let all = ranks.iter().map(|q| q.rank);
        let (_, mrr) = mrr_of(all.clone());
        let hits = HITS_AT
            .iter()
            .map(|&k| (k, hits_of(all.clone(), k)))
            .collect();

        let mut by_rel: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for q in ranks.iter().filter(|q| q.direction == Direction::Tail) {
            by_rel.entry(q.triple.relation).or_default().push(q.rank);
        }
        let per_relation = by_rel
            .into_iter()
            .map(|(r, rs)| {
                let (count, mrr) = mrr_of(rs.iter().copied());
                let hits10 = hits_of(rs.iter().copied(), 10);
                let name = dataset.dictionary.relation_name(r).to_string();
                (name, RelationStats { count, mrr, hits10 })
            })
            .collect();
        RankingReport {
            ranks,
            mrr,
            hits,
            per_relation,
        }
    }

    pub fn hits_at(&self, k: usize) -> f64 {
        self.hits
            .get(&k)
            .copied()
            .unwrap_or_else(|| hits_of(self.ranks.iter().map(|q| q.rank), k))
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "queries  {}", self.ranks.len());
        let _ = writeln!(s, "MRR      {:.4}", self.mrr);
        for (k, v) in &self.hits {
            let _ = writeln!(s, "Hits@{k:<3} {v:.4}");
        }
        if !self.per_relation.is_empty() {
            let width = self
                .per_relation
                .keys()
                .map(String::len)
                .max()
                .unwrap_or(8)
                .max(8);
            let _ = writeln!(
                s,
                "\n{:<width$}  {:>6}  {:>7}  {:>7}",
                "relation", "count", "MRR", "H@10"
            );
            for (name, st) in &self.per_relation {
                let _ = writeln!(
                    s,
                    "{name:<width$}  {:>6}  {:>7.4}  {:>7.4}",
                    st.count, st.mrr, st.hits10
                );
            }
        }
        s
    }

    /// Writes `metrics.ndjson` (one record per metric and per relation),
    /// `ranks.tsv` (head, relation, tail, direction, rank) and `report.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| KgeError::io(dir, e))?;
        let mut lines = String::new();
        let mut push = |v: serde_json::Value| {
            lines.push_str(&v.to_string());
            lines.push('\n');
        };
        push(serde_json::json!({"metric": "mrr", "value": self.mrr}));
        for (k, v) in &self.hits {
            push(serde_json::json!({"metric": format!("hits@{k}"), "value": v}));
        }
        for (name, st) in &self.per_relation {
            push(serde_json::json!({
                "relation": name, "count": st.count, "mrr": st.mrr, "hits@10": st.hits10
            }));
        }
        write_file(&dir.join("metrics.ndjson"), &lines)?;

        let mut ranks = String::from("head\trelation\ttail\tdirection\trank\n");
        for q in &self.ranks {
            let dir = match q.direction {
                Direction::Tail => "tail",
                Direction::Head => "head",
            };
            let _ = writeln!(
                ranks,
                "{}\t{}\t{}\t{dir}\t{}",
                q.triple.head, q.triple.relation, q.triple.tail, q.rank
            );
        }
        write_file(&dir.join("ranks.tsv"), &ranks)?;
        write_file(&dir.join("report.txt"), &self.to_table())
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| KgeError::io(path, e))
}

/// Ranks both directions of every triple in `triples`.
pub fn evaluate_split(
    model: &Model,
    dataset: &Dataset,
    triples: &[Triple],
) -> Result<RankingReport> {
    let ranks = triples
        .par_iter()
        .map_init(Vec::new, |scores, &t| {
            let tail = rank_query_with(model, dataset, t, Direction::Tail, scores)?;
            let head = rank_query_with(model, dataset, t, Direction::Head, scores)?;
            Ok([
                QueryRank {
                    triple: t,
                    direction: Direction::Tail,
                    rank: tail,
                },
                QueryRank {
                    triple: t,
                    direction: Direction::Head,
                    rank: head,
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(RankingReport::from_ranks(ranks, dataset))
}

/// Filtered metrics on the test split.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<RankingReport> {
    evaluate_split(model, dataset, &dataset.store.test)
}

/// Tail-direction statistics per relation on the test split. Relations
/// without test triples are omitted.
pub fn per_relation_report(
    model: &Model,
    dataset: &Dataset,
) -> Result<BTreeMap<String, RelationStats>> {
    let ranks = dataset
        .store
        .test
        .par_iter()
        .map_init(Vec::new, |scores, &t| {
            rank_query_with(model, dataset, t, Direction::Tail, scores).map(|rank| QueryRank {
                triple: t,
                direction: Direction::Tail,
                rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingReport::from_ranks(ranks, dataset).per_relation)
}
