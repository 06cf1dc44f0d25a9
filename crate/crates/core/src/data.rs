//! Triple files, id dictionaries, splits and the filtered-evaluation index.
//!
//! A dataset directory holds `train.txt`, `valid.txt` and `test.txt`, one
//! `head<TAB>relation<TAB>tail` fact per line. Optional `entities.dict` and
//! `relations.dict` files (`id<TAB>name` per line) fix the id assignment;
//! otherwise ids follow first appearance over the split files in sorted
//! file-name order.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{KgeError, Result};

pub const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];
pub const RECIPROCAL_SUFFIX: &str = "_reverse";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// Bijective name ↔ id maps for entities and relations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dictionary {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relation_ids: HashMap<String, usize>,
    /// Relations before reciprocal expansion.
    base_relations: usize,
}

impl Dictionary {
    pub fn from_names(entities: Vec<String>, relations: Vec<String>) -> Result<Self> {
        let mut d = Dictionary::default();
        for e in entities {
            if d.entity_ids.contains_key(&e) {
                return Err(KgeError::InvalidConfig(format!("duplicate entity '{e}'")));
            }
            d.intern_entity(&e);
        }
        for r in relations {
            if d.relation_ids.contains_key(&r) {
                return Err(KgeError::InvalidConfig(format!("duplicate relation '{r}'")));
            }
            d.intern_relation(&r);
        }
        d.base_relations = d.relations.len();
        Ok(d)
    }

    fn intern_entity(&mut self, name: &str) -> usize {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entities.len();
        self.entities.push(name.to_string());
        self.entity_ids.insert(name.to_string(), id);
        id
    }

    fn intern_relation(&mut self, name: &str) -> usize {
        if let Some(&id) = self.relation_ids.get(name) {
            return id;
        }
        let id = self.relations.len();
        self.relations.push(name.to_string());
        self.relation_ids.insert(name.to_string(), id);
        id
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    /// Relation count including reciprocal relations when enabled.
    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn n_base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn is_reciprocal(&self) -> bool {
        self.relations.len() > self.base_relations
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> &str {
        &self.entities[id]
    }

    pub fn relation_name(&self, id: usize) -> &str {
        &self.relations[id]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    /// Id of the reciprocal of base relation `r`.
    pub fn inverse_relation(&self, r: usize) -> usize {
        debug_assert!(self.is_reciprocal() && r < self.base_relations);
        r + self.base_relations
    }

    fn add_reciprocals(&mut self) {
        for r in 0..self.base_relations {
            let name = format!("{}{}", self.relations[r], RECIPROCAL_SUFFIX);
            self.intern_relation(&name);
        }
    }

    /// SHA-256 of the newline-joined entity names.
    pub fn entity_hash(&self) -> String {
        hash_names(&self.entities)
    }

    pub fn relation_hash(&self) -> String {
        hash_names(&self.relations)
    }
}

fn hash_names(names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripleStore {
    /// Training triples; includes mirrored `(t, r⁻¹, h)` copies in reciprocal mode.
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

/// All known true answers per query, over train ∪ valid ∪ test.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(usize, usize), Vec<usize>>,
    heads: HashMap<(usize, usize), Vec<usize>>,
}

impl FilterIndex {
    pub fn build<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut idx = FilterIndex::default();
        for t in triples {
            idx.tails
                .entry((t.head, t.relation))
                .or_default()
                .push(t.tail);
            idx.heads
                .entry((t.tail, t.relation))
                .or_default()
                .push(t.head);
        }
        for v in idx.tails.values_mut().chain(idx.heads.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        idx
    }

    /// Sorted true tails of `(h, r, ?)`.
    pub fn tails(&self, head: usize, relation: usize) -> &[usize] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Sorted true heads of `(?, r, t)`.
    pub fn heads(&self, tail: usize, relation: usize) -> &[usize] {
        self.heads
            .get(&(tail, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.tails(t.head, t.relation)
            .binary_search(&t.tail)
            .is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dictionary: Dictionary,
    pub store: TripleStore,
    pub filter: FilterIndex,
}

impl Dataset {
    pub fn reciprocal(&self) -> bool {
        self.dictionary.is_reciprocal()
    }

    /// Assembles a dataset from id-encoded splits. With `reciprocal`, relation
    /// ids `N_r..2N_r` are added and training triples mirrored.
    pub fn from_parts(
        mut dictionary: Dictionary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
        reciprocal: bool,
    ) -> Result<Self> {
        let (ne, nr) = (dictionary.n_entities(), dictionary.n_relations());
        for t in train.iter().chain(&valid).chain(&test) {
            if t.head >= ne || t.tail >= ne {
                return Err(KgeError::IdOutOfRange {
                    kind: "entity",
                    id: t.head.max(t.tail),
                    size: ne,
                });
            }
            if t.relation >= nr {
                return Err(KgeError::IdOutOfRange {
                    kind: "relation",
                    id: t.relation,
                    size: nr,
                });
            }
        }
        let mut store = TripleStore { train, valid, test };
        let mut all: Vec<Triple> = store
            .train
            .iter()
            .chain(&store.valid)
            .chain(&store.test)
            .copied()
            .collect();
        if reciprocal {
            dictionary.add_reciprocals();
            let mirror = |t: &Triple| Triple::new(t.tail, t.relation + nr, t.head);
            let mirrored: Vec<Triple> = store.train.iter().map(mirror).collect();
            store.train.extend(mirrored);
            let extra: Vec<Triple> = all.iter().map(mirror).collect();
            all.extend(extra);
        }
        let filter = FilterIndex::build(&all);
        Ok(Dataset {
            dictionary,
            store,
            filter,
        })
    }
}

/// Loads a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>, reciprocal: bool) -> Result<Dataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(KgeError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let mut raw: HashMap<&str, Vec<(usize, [String; 3])>> = HashMap::new();
    for name in SPLIT_FILES {
        raw.insert(name, read_triple_file(&dir.join(name))?);
    }

    let ent_dict = dir.join("entities.dict");
    let rel_dict = dir.join("relations.dict");
    let dictionary = if ent_dict.is_file() && rel_dict.is_file() {
        Dictionary::from_names(read_dict_file(&ent_dict)?, read_dict_file(&rel_dict)?)?
    } else {
        let mut d = Dictionary::default();
        let mut names = SPLIT_FILES.to_vec();
        names.sort_unstable();
        for name in names {
            for (_, [h, r, t]) in &raw[name] {
                d.intern_entity(h);
                d.intern_relation(r);
                d.intern_entity(t);
            }
        }
        d.base_relations = d.relations.len();
        d
    };

    let encode = |name: &str| -> Result<Vec<Triple>> {
        let path = dir.join(name);
        raw[name]
            .iter()
            .map(|(line, [h, r, t])| {
                let ent = |s: &String| {
                    dictionary
                        .entity_id(s)
                        .ok_or_else(|| KgeError::UnknownSymbol {
                            path: path.clone(),
                            line: *line,
                            kind: "entity",
                            name: s.clone(),
                        })
                };
                let rel = dictionary
                    .relation_id(r)
                    .ok_or_else(|| KgeError::UnknownSymbol {
                        path: path.clone(),
                        line: *line,
                        kind: "relation",
                        name: r.clone(),
                    })?;
                Ok(Triple::new(ent(h)?, rel, ent(t)?))
            })
            .collect()
    };
    let train = encode("train.txt")?;
    let valid = encode("valid.txt")?;
    let test = encode("test.txt")?;
    Dataset::from_parts(dictionary.clone(), train, valid, test, reciprocal)
}

fn read_lines(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| KgeError::io(path, e))
}

fn read_triple_file(path: &Path) -> Result<Vec<(usize, [String; 3])>> {
    let text = read_lines(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(KgeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!(
                    "expected head<TAB>relation<TAB>tail, found {} field(s)",
                    fields.len()
                ),
            });
        }
        out.push((
            i + 1,
            [
                fields[0].to_string(),
                fields[1].to_string(),
                fields[2].to_string(),
            ],
        ));
    }
    Ok(out)
}

/// Reads `id<TAB>name` lines; ids must cover `0..n` exactly once.
fn read_dict_file(path: &Path) -> Result<Vec<String>> {
    let text = read_lines(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| KgeError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected id<TAB>name".into()))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("invalid id '{id}'")))?;
        pairs.push((id, name.to_string(), i + 1));
    }
    pairs.sort_by_key(|p| p.0);
    for (expected, (id, _, line)) in pairs.iter().enumerate() {
        if *id != expected {
            return Err(KgeError::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: format!("ids must be dense from 0; expected {expected}, found {id}"),
            });
        }
    }
    Ok(pairs.into_iter().map(|p| p.1).collect())
}

/// Writes `id<TAB>name` dictionary files next to a dataset or checkpoint.
pub fn write_dict_file(path: &Path, names: &[String]) -> Result<()> {
    let mut s = String::new();
    for (i, n) in names.iter().enumerate() {
        s.push_str(&format!("{i}\t{n}\n"));
    }
    fs::write(path, s).map_err(|e| KgeError::io(path, e))
}

// ---------------------------------------------------------------------------
// Negative sampling

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// Replace the tail only (reciprocal mode).
    TailOnly,
    /// Replace the head or the tail, chosen 50/50 per sample.
    HeadOrTail,
}

impl Corruption {
    pub fn for_reciprocal(reciprocal: bool) -> Self {
        if reciprocal {
            Corruption::TailOnly
        } else {
            Corruption::HeadOrTail
        }
    }
}

/// Uniform corruption of a triple, `k` samples.
pub fn negative_sample<R: Rng + ?Sized>(
    triple: Triple,
    n_entities: usize,
    k: usize,
    mode: Corruption,
    rng: &mut R,
) -> Vec<Triple> {
    let mut out = Vec::with_capacity(k);
    negative_sample_into(triple, n_entities, k, mode, rng, &mut out);
    out
}

pub fn negative_sample_into<R: Rng + ?Sized>(
    triple: Triple,
    n_entities: usize,
    k: usize,
    mode: Corruption,
    rng: &mut R,
    out: &mut Vec<Triple>,
) {
    for _ in 0..k {
        let e = rng.random_range(0..n_entities);
        let corrupt_head = match mode {
            Corruption::TailOnly => false,
            Corruption::HeadOrTail => rng.random_bool(0.5),
        };
        out.push(if corrupt_head {
            Triple::new(e, triple.relation, triple.tail)
        } else {
            Triple::new(triple.head, triple.relation, e)
        });
    }
}

// ---------------------------------------------------------------------------
// Synthetic graphs

/// Shape of a generated graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
}

impl SyntheticSpec {
    /// The WN18RR shape: 40,943 entities, 11 relations.
    pub fn wn18rr_shaped(n_train: usize) -> Self {
        SyntheticSpec {
            n_entities: 40_943,
            n_relations: 11,
            n_train,
            n_valid: 3_034,
            n_test: 3_134,
        }
    }
}

/// Generates a graph where each relation is a fixed random permutation of
/// the entities, so facts are learnable. Triples are distinct; splits are a
/// seeded shuffle of them.
pub fn synthetic_dataset(spec: SyntheticSpec, seed: u64, reciprocal: bool) -> Result<Dataset> {
    let total = spec.n_train + spec.n_valid + spec.n_test;
    let capacity = spec.n_entities * spec.n_relations;
    if total > capacity {
        return Err(KgeError::InvalidConfig(format!(
            "cannot draw {total} distinct triples from {capacity} (entity, relation) pairs"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = (0..spec.n_relations)
        .map(|_| {
            let mut p: Vec<usize> = (0..spec.n_entities).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let mut seen = std::collections::HashSet::with_capacity(total);
    let mut triples = Vec::with_capacity(total);
    while triples.len() < total {
        let h = rng.random_range(0..spec.n_entities);
        let r = rng.random_range(0..spec.n_relations);
        if seen.insert((h, r)) {
            triples.push(Triple::new(h, r, perms[r][h]));
        }
    }
    let test = triples.split_off(spec.n_train + spec.n_valid);
    let valid = triples.split_off(spec.n_train);
    let dictionary = Dictionary::from_names(
        (0..spec.n_entities).map(|i| format!("e{i}")).collect(),
        (0..spec.n_relations).map(|i| format!("r{i}")).collect(),
    )?;
    Dataset::from_parts(dictionary, triples, valid, test, reciprocal)
}

/// Writes a dataset's base (non-mirrored) splits as TSV files.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| KgeError::io(dir, e))?;
    let d = &dataset.dictionary;
    let base = d.n_base_relations();
    let write = |name: &str, triples: &[Triple]| -> Result<()> {
        let mut s = String::new();
        for t in triples.iter().filter(|t| t.relation < base) {
            s.push_str(&format!(
                "{}\t{}\t{}\n",
                d.entity_name(t.head),
                d.relation_name(t.relation),
                d.entity_name(t.tail)
            ));
        }
        let path: PathBuf = dir.join(name);
        fs::write(&path, s).map_err(|e| KgeError::io(&path, e))
    };
    write("train.txt", &dataset.store.train)?;
    write("valid.txt", &dataset.store.valid)?;
    write("test.txt", &dataset.store.test)
}
