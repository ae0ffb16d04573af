//! Independent reference implementations and fixture generators shared by
//! the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nous_core::bpr::{BprModel, Hyper};
use nous_core::kg::{EntityId, Graph, KgStore, Namespace, Origin, PredicateId, Provenance};
use nous_core::topics::{entity_topic, CoherenceMode, ConstraintMode, PathQuery, QaConfig, TopicModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- BPR

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-ln σ(u·vp − u·vn) + reg·(‖u‖² + ‖vp‖² + ‖vn‖²)`, written out directly.
pub fn reference_loss(u: &[f64], vp: &[f64], vn: &[f64], reg: f64) -> f64 {
    let delta = dot(u, vp) - dot(u, vn);
    let sig = 1.0 / (1.0 + (-delta).exp());
    -sig.ln() + reg * (dot(u, u) + dot(vp, vp) + dot(vn, vn))
}

/// Central finite differences of [`reference_loss`] over the concatenation
/// `u ++ vp ++ vn`.
pub fn numeric_gradient(u: &[f64], vp: &[f64], vn: &[f64], reg: f64, h: f64) -> Vec<f64> {
    let mut x: Vec<f64> = u.iter().chain(vp).chain(vn).copied().collect();
    let d = u.len();
    let f = |x: &[f64]| reference_loss(&x[..d], &x[d..2 * d], &x[2 * d..], reg);
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let plus = f(&x);
            x[i] = orig - h;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = dot(a, a).sqrt().max(dot(b, b).sqrt()).max(1e-12);
    diff / scale
}

/// Two blocks of 10 subjects and 10 objects each; every within-block
/// (subject, object) pair is a positive. A seeded fifth of the positives is
/// held out.
pub struct BlockFixture {
    pub predicate: PredicateId,
    pub train: Vec<(EntityId, EntityId)>,
    pub held_out: Vec<(EntityId, EntityId)>,
    pub objects: Vec<EntityId>,
}

pub const BLOCK_SUBJECTS: u32 = 10;
pub const BLOCK_OBJECTS: u32 = 10;

impl BlockFixture {
    pub fn block_of(e: EntityId) -> u32 {
        let per_block = BLOCK_SUBJECTS + BLOCK_OBJECTS;
        e.0 / per_block
    }

    pub fn new(seed: u64) -> Self {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let per_block = BLOCK_SUBJECTS + BLOCK_OBJECTS;
        let mut positives = Vec::new();
        let mut objects = Vec::new();
        for b in 0..2 {
            let base = b * per_block;
            for o in 0..BLOCK_OBJECTS {
                objects.push(EntityId(base + BLOCK_SUBJECTS + o));
            }
            for s in 0..BLOCK_SUBJECTS {
                for o in 0..BLOCK_OBJECTS {
                    positives.push((EntityId(base + s), EntityId(base + BLOCK_SUBJECTS + o)));
                }
            }
        }
        positives.shuffle(&mut rng);
        let held = positives.len() / 5;
        let held_out = positives.split_off(positives.len() - held);
        BlockFixture {
            predicate: PredicateId(0),
            train: positives,
            held_out,
            objects,
        }
    }

    pub fn hyper(seed: u64) -> Hyper {
        Hyper {
            learning_rate: 0.05,
            regularization: 0.01,
            epochs: 50,
            seed,
        }
    }

    pub fn train(&self, seed: u64) -> BprModel {
        let mut m = BprModel::init_with_pool(self.predicate, &self.train, &self.objects, 8, Self::hyper(seed))
            .expect("fixture has positives");
        m.train(&self.train);
        m
    }

    /// Held-out positives against every corruption `(s, o')` with `o'` not a
    /// known positive of `s`, by enumerating all pairs. Ties count half.
    pub fn auc(&self, model: &BprModel) -> f64 {
        let known: std::collections::BTreeSet<_> = self.train.iter().chain(&self.held_out).copied().collect();
        let mut wins = 0.0;
        let mut total = 0usize;
        for &(s, o) in &self.held_out {
            let pos = model.raw_score(s, o).expect("held-out entities have vectors");
            for &neg in &self.objects {
                if known.contains(&(s, neg)) {
                    continue;
                }
                let n = model.raw_score(s, neg).expect("pool objects have vectors");
                total += 1;
                wins += match pos.total_cmp(&n) {
                    Ordering::Greater => 1.0,
                    Ordering::Equal => 0.5,
                    Ordering::Less => 0.0,
                };
            }
        }
        wins / total as f64
    }
}

// ---------------------------------------------------------------- LDA

/// Two disjoint vocabularies of ten words; `per_topic` documents of
/// `length` tokens drawn from one vocabulary each. Returns the corpus and
/// the planted topic per document.
pub fn planted_corpus(per_topic: usize, length: usize, seed: u64) -> (BTreeMap<EntityId, Vec<String>>, BTreeMap<EntityId, usize>) {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let vocab: [Vec<String>; 2] = [
        (0..10).map(|i| format!("alpha{i}")).collect(),
        (0..10).map(|i| format!("omega{i}")).collect(),
    ];
    let mut docs = BTreeMap::new();
    let mut planted = BTreeMap::new();
    for (t, words) in vocab.iter().enumerate() {
        for d in 0..per_topic {
            let id = EntityId((t * per_topic + d) as u32);
            let tokens = (0..length).map(|_| words.choose(&mut rng).unwrap().clone()).collect();
            docs.insert(id, tokens);
            planted.insert(id, t);
        }
    }
    (docs, planted)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if *x > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of documents whose argmax θ matches the planted topic under the
/// better of the two topic permutations.
pub fn purity(model: &TopicModel, planted: &BTreeMap<EntityId, usize>) -> f64 {
    let mut same = 0;
    for (e, t) in planted {
        if argmax(&model.theta[e]) == *t {
            same += 1;
        }
    }
    let n = planted.len();
    same.max(n - same) as f64 / n as f64
}

/// Largest deviation of any θ or φ row sum from one.
pub fn normalization_error(model: &TopicModel) -> f64 {
    model
        .theta
        .values()
        .chain(model.phi.iter())
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- JSD

/// Jensen-Shannon divergence in nats with `0·ln 0 = 0`.
pub fn reference_jsd(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).ln())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

/// A random distribution of length `k`; roughly one coordinate in four is
/// exactly zero.
pub fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..k)
            .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>() })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.into_iter().map(|x| x / total).collect();
        }
    }
}

// ---------------------------------------------------------------- paths

pub struct PathCase {
    pub store: KgStore,
    pub model: TopicModel,
    pub query: PathQuery,
}

const PREDICATES: [&str; 3] = ["p", "q", "r"];

/// A random multigraph of at most 12 vertices with random confidences and
/// topic rows. Some vertices get no θ row so the neighbour fallback is
/// exercised. The beam is wide enough to never prune.
pub fn random_path_case(rng: &mut ChaCha8Rng) -> PathCase {
    let n = rng.gen_range(2..=12);
    let mut store = KgStore::new();
    let ids: Vec<EntityId> = (0..n)
        .map(|i| store.create_entity(&format!("v{i}"), &[], Origin::Curated).unwrap())
        .collect();
    let preds: Vec<PredicateId> = PREDICATES
        .iter()
        .map(|p| store.register_predicate(p, Namespace::Ontology).unwrap())
        .collect();
    let m = rng.gen_range(n..=3 * n);
    for _ in 0..m {
        let s = ids[rng.gen_range(0..n)];
        let o = ids[rng.gen_range(0..n)];
        let p = preds[rng.gen_range(0..preds.len())];
        // a coarse grid so equal confidences (and tie-breaks) occur
        let c = f64::from(rng.gen_range(1..=4u8)) / 4.0;
        store.add_fact(s, p, o, c, 0, Provenance::Curated).unwrap();
    }
    let k = 3;
    let mut model = TopicModel::untrained(k);
    for &e in &ids {
        if rng.gen_bool(0.75) {
            // drawn from a small palette so coherence ties occur too
            let palette = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.2, 0.3, 0.5]];
            model.theta.insert(e, palette[rng.gen_range(0..palette.len())].to_vec());
        }
    }
    let source = ids[rng.gen_range(0..n)];
    let target = loop {
        let t = ids[rng.gen_range(0..n)];
        if t != source {
            break t;
        }
    };
    let coherence = [
        CoherenceMode::MeanConsecutive,
        CoherenceMode::SumConsecutive,
        CoherenceMode::MaxConsecutive,
    ][rng.gen_range(0..3)];
    let constraint_mode = [ConstraintMode::ContainsEdge, ConstraintMode::LastEdge][rng.gen_range(0..2)];
    let constraint = rng.gen_bool(0.3).then(|| preds[rng.gen_range(0..preds.len())]);
    let mut query = QaConfig::default().query(source, target, constraint);
    query.k = rng.gen_range(1..=6);
    query.max_hops = rng.gen_range(1..=4);
    query.beam_width = n + rng.gen_range(0..3);
    query.min_edge_confidence = [0.0, 0.0, 0.5][rng.gen_range(0..3)];
    query.coherence = coherence;
    query.constraint_mode = constraint_mode;
    PathCase { store, model, query }
}

/// One enumerated path: vertices, traversed facts as `(seq, forward)`, and
/// the two scores.
#[derive(Clone, Debug, PartialEq)]
pub struct RefPath {
    pub vertices: Vec<EntityId>,
    pub steps: Vec<(u64, bool)>,
    pub predicates: Vec<PredicateId>,
    pub confidences: Vec<f64>,
    pub coherence: f64,
    pub mean_confidence: f64,
}

fn score(mode: CoherenceMode, divs: &[f64]) -> f64 {
    if divs.is_empty() {
        return 0.0;
    }
    match mode {
        CoherenceMode::MeanConsecutive => divs.iter().sum::<f64>() / divs.len() as f64,
        CoherenceMode::SumConsecutive => divs.iter().sum(),
        CoherenceMode::MaxConsecutive => divs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Vertices plus (fact key, traversed forward) steps.
type RawPath = (Vec<EntityId>, Vec<(u64, bool)>);

/// Every simple path of at most `max_hops` facts from source to target,
/// walking facts in either direction, ranked with the documented tie rules
/// and cut to the top `k`.
pub fn exhaustive_paths(graph: &Graph, model: &TopicModel, q: &PathQuery) -> Vec<RefPath> {
    let mut found: Vec<RawPath> = Vec::new();
    let mut vertices = vec![q.source];
    let mut steps = Vec::new();
    dfs(graph, q, &mut vertices, &mut steps, &mut found);

    let mut out: Vec<RefPath> = found
        .into_iter()
        .filter_map(|(vertices, steps)| {
            let facts: Vec<_> = steps.iter().map(|(seq, _)| graph.fact(*seq).unwrap()).collect();
            let predicates: Vec<PredicateId> = facts.iter().map(|f| f.predicate).collect();
            if let Some(c) = q.constraint {
                let ok = match q.constraint_mode {
                    ConstraintMode::ContainsEdge => predicates.contains(&c),
                    ConstraintMode::LastEdge => predicates.last() == Some(&c),
                };
                if !ok {
                    return None;
                }
            }
            let confidences: Vec<f64> = facts.iter().map(|f| f.confidence).collect();
            let divs: Vec<f64> = vertices
                .windows(2)
                .map(|w| reference_jsd(&entity_topic(model, graph, w[0]), &entity_topic(model, graph, w[1])))
                .collect();
            Some(RefPath {
                coherence: score(q.coherence, &divs),
                mean_confidence: confidences.iter().sum::<f64>() / confidences.len() as f64,
                vertices,
                steps,
                predicates,
                confidences,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.coherence
            .total_cmp(&b.coherence)
            .then(b.mean_confidence.total_cmp(&a.mean_confidence))
            .then(a.steps.len().cmp(&b.steps.len()))
            .then(a.vertices.cmp(&b.vertices))
            .then_with(|| {
                let key = |p: &RefPath| p.steps.iter().map(|(s, f)| (*s, !*f)).collect::<Vec<_>>();
                key(a).cmp(&key(b))
            })
    });
    out.truncate(q.k);
    out
}

fn dfs(
    graph: &Graph,
    q: &PathQuery,
    vertices: &mut Vec<EntityId>,
    steps: &mut Vec<(u64, bool)>,
    found: &mut Vec<RawPath>,
) {
    if steps.len() == q.max_hops {
        return;
    }
    let v = *vertices.last().unwrap();
    for f in graph.facts() {
        if f.confidence < q.min_edge_confidence {
            continue;
        }
        let mut moves = Vec::new();
        if f.subject == v {
            moves.push((f.object, true));
        }
        if f.object == v {
            moves.push((f.subject, false));
        }
        for (next, forward) in moves {
            if vertices.contains(&next) {
                continue;
            }
            vertices.push(next);
            steps.push((f.seq, forward));
            if next == q.target {
                found.push((vertices.clone(), steps.clone()));
            } else {
                dfs(graph, q, vertices, steps, found);
            }
            vertices.pop();
            steps.pop();
        }
    }
}
