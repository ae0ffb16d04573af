//! Per-predicate latent-feature models trained with the BPR criterion.
//!
//! Each predicate gets its own factorization `x(s, o) = u_s · v_o`. Training
//! runs SGD on `-ln σ(x(s,o) - x(s,o')) + λ(|u_s|² + |v_o|² + |v_o'|²)` with
//! `o'` sampled from the negative pool. Scores are `σ(x)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Graph, PredicateId};

pub const FORMAT_NAME: &str = "nous-bpr";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NegativeSpace {
    PredicateObjects,
    AllEntities,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hyper {
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            regularization: 0.01,
            epochs: 30,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct BprConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    pub prior: f64,
    pub train_min_confidence: f64,
    pub negative_space: NegativeSpace,
}

impl Default for BprConfig {
    fn default() -> Self {
        let h = Hyper::default();
        Self {
            dim: 16,
            learning_rate: h.learning_rate,
            regularization: h.regularization,
            epochs: h.epochs,
            seed: h.seed,
            prior: 0.5,
            train_min_confidence: 1.0,
            negative_space: NegativeSpace::PredicateObjects,
        }
    }
}

impl BprConfig {
    pub fn hyper(&self) -> Hyper {
        Hyper {
            learning_rate: self.learning_rate,
            regularization: self.regularization,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: format!("bpr.{key}"),
                reason: reason.into(),
            })
        };
        if self.dim == 0 {
            return bad("dim", "must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learningRate", "must be a positive number");
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return bad("regularization", "must be >= 0");
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return bad("prior", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.train_min_confidence) {
            return bad("trainMinConfidence", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Logistic function, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let y = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Per-sample BPR loss for subject vector `u`, positive object `vp` and
/// negative object `vn`.
pub fn sample_loss(u: &[f64], vp: &[f64], vn: &[f64], reg: f64) -> f64 {
    let delta = dot(u, vp) - dot(u, vn);
    softplus(-delta) + reg * (sq_norm(u) + sq_norm(vp) + sq_norm(vn))
}

/// Analytic gradients of [`sample_loss`] with respect to `u`, `vp`, `vn`.
pub fn sample_gradients(u: &[f64], vp: &[f64], vn: &[f64], reg: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let delta = dot(u, vp) - dot(u, vn);
    let g = sigmoid(-delta);
    let gu = u
        .iter()
        .zip(vp.iter().zip(vn))
        .map(|(ui, (p, n))| -g * (p - n) + 2.0 * reg * ui)
        .collect();
    let gp = u.iter().zip(vp).map(|(ui, p)| -g * ui + 2.0 * reg * p).collect();
    let gn = u.iter().zip(vn).map(|(ui, n)| g * ui + 2.0 * reg * n).collect();
    (gu, gp, gn)
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Clone, Copy)]
enum Role {
    Subject = 1,
    Object = 2,
}

fn vector_rng(seed: u64, predicate: PredicateId, entity: EntityId, role: Role) -> ChaCha8Rng {
    let s = mix(mix(mix(seed) ^ u64::from(predicate.0)) ^ (u64::from(entity.0) << 2 | role as u64));
    ChaCha8Rng::seed_from_u64(s)
}

fn init_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = 0.5 / dim as f64;
    (0..dim).map(|_| rng.gen_range(-a..=a)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BprModel {
    pub predicate: PredicateId,
    pub dim: usize,
    pub subject_vecs: BTreeMap<EntityId, Vec<f64>>,
    pub object_vecs: BTreeMap<EntityId, Vec<f64>>,
    /// Objects negatives are drawn from, ascending.
    pub negative_pool: Vec<EntityId>,
    pub hyper: Hyper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub samples: usize,
    /// Mean pre-update loss over processed samples; `None` when every sample
    /// was skipped.
    pub mean_loss: Option<f64>,
}

impl BprModel {
    /// Initializes vectors for every entity in `positives`, with the
    /// negative pool set to the distinct positive objects.
    pub fn init(predicate: PredicateId, positives: &[(EntityId, EntityId)], dim: usize, hyper: Hyper) -> Result<Self> {
        Self::init_with_pool(predicate, positives, &[], dim, hyper)
    }

    /// Like [`BprModel::init`] but with extra negative candidates, each of
    /// which also receives an object vector.
    pub fn init_with_pool(
        predicate: PredicateId,
        positives: &[(EntityId, EntityId)],
        extra_pool: &[EntityId],
        dim: usize,
        hyper: Hyper,
    ) -> Result<Self> {
        if positives.is_empty() {
            return Err(Error::NoPositives(format!("P{}", predicate.0)));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be >= 1".into()));
        }
        let subjects: BTreeSet<EntityId> = positives.iter().map(|p| p.0).collect();
        let pool: BTreeSet<EntityId> = positives.iter().map(|p| p.1).chain(extra_pool.iter().copied()).collect();
        let subject_vecs = subjects
            .iter()
            .map(|&e| (e, init_vector(dim, &mut vector_rng(hyper.seed, predicate, e, Role::Subject))))
            .collect();
        let object_vecs = pool
            .iter()
            .map(|&e| (e, init_vector(dim, &mut vector_rng(hyper.seed, predicate, e, Role::Object))))
            .collect();
        Ok(Self {
            predicate,
            dim,
            subject_vecs,
            object_vecs,
            negative_pool: pool.into_iter().collect(),
            hyper,
        })
    }

    /// `u_s · v_o`, or `None` when either vector is missing.
    pub fn raw_score(&self, s: EntityId, o: EntityId) -> Option<f64> {
        let u = self.subject_vecs.get(&s)?;
        let v = self.object_vecs.get(&o)?;
        Some(dot(u, v))
    }

    fn sample_negative(&self, positive: EntityId, rng: &mut ChaCha8Rng) -> Option<EntityId> {
        let n = self.negative_pool.len();
        if n < 2 {
            return None;
        }
        match self.negative_pool.binary_search(&positive) {
            Ok(pos) => {
                let mut i = rng.gen_range(0..n - 1);
                if i >= pos {
                    i += 1;
                }
                Some(self.negative_pool[i])
            }
            Err(_) => Some(self.negative_pool[rng.gen_range(0..n)]),
        }
    }

    /// Applies one SGD step for a (s, o, o') sample; returns the pre-update loss.
    pub fn sgd_step(&mut self, s: EntityId, o: EntityId, neg: EntityId) -> Option<f64> {
        let u = self.subject_vecs.get(&s)?.clone();
        let vp = self.object_vecs.get(&o)?.clone();
        let vn = self.object_vecs.get(&neg)?.clone();
        let reg = self.hyper.regularization;
        let lr = self.hyper.learning_rate;
        let loss = sample_loss(&u, &vp, &vn, reg);
        let (gu, gp, gn) = sample_gradients(&u, &vp, &vn, reg);
        let step = |v: &[f64], g: &[f64]| -> Vec<f64> { v.iter().zip(g).map(|(x, d)| x - lr * d).collect() };
        self.subject_vecs.insert(s, step(&u, &gu));
        self.object_vecs.insert(o, step(&vp, &gp));
        self.object_vecs.insert(neg, step(&vn, &gn));
        Some(loss)
    }

    /// One pass over `positives` in a seeded shuffle.
    pub fn train_epoch(&mut self, positives: &[(EntityId, EntityId)], rng: &mut ChaCha8Rng) -> EpochStats {
        let mut order: Vec<usize> = (0..positives.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        let mut samples = 0;
        for i in order {
            let (s, o) = positives[i];
            let Some(neg) = self.sample_negative(o, rng) else { continue };
            if let Some(loss) = self.sgd_step(s, o, neg) {
                total += loss;
                samples += 1;
            }
        }
        EpochStats {
            samples,
            mean_loss: (samples > 0).then(|| total / samples as f64),
        }
    }

    /// Runs `hyper.epochs` epochs with a generator derived from the seed and predicate.
    pub fn train(&mut self, positives: &[(EntityId, EntityId)]) -> Vec<EpochStats> {
        let mut rng = training_rng(self.hyper.seed, self.predicate);
        (0..self.hyper.epochs).map(|_| self.train_epoch(positives, &mut rng)).collect()
    }
}

pub fn training_rng(seed: u64, predicate: PredicateId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ 0x5EED) ^ mix(u64::from(predicate.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TripleScore {
    pub value: f64,
    pub trained: bool,
}

/// The published set of per-predicate models.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BprModels {
    pub models: BTreeMap<PredicateId, BprModel>,
    /// Incremented on every retrain.
    pub version: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RetrainReport {
    pub trained: Vec<String>,
    pub skipped: Vec<String>,
    pub version: u64,
}

impl BprModels {
    pub fn score_triple(&self, s: EntityId, p: PredicateId, o: EntityId, prior: f64) -> TripleScore {
        match self.models.get(&p).and_then(|m| m.raw_score(s, o)) {
            Some(x) => TripleScore {
                value: sigmoid(x),
                trained: true,
            },
            None => TripleScore {
                value: prior,
                trained: false,
            },
        }
    }

    /// Positive pairs per predicate: distinct (s, o) of facts at or above
    /// `min_confidence`, ascending.
    pub fn positives(graph: &Graph, min_confidence: f64) -> BTreeMap<PredicateId, Vec<(EntityId, EntityId)>> {
        let mut out: BTreeMap<PredicateId, BTreeSet<(EntityId, EntityId)>> = BTreeMap::new();
        for p in graph.predicates() {
            out.entry(p.id).or_default();
        }
        for f in graph.facts() {
            if f.confidence >= min_confidence {
                out.entry(f.predicate).or_default().insert((f.subject, f.object));
            }
        }
        out.into_iter().map(|(p, set)| (p, set.into_iter().collect())).collect()
    }

    /// Retrains models for `predicates` (all when `None`) against a graph.
    /// Predicates without positives are reported as skipped.
    pub fn retrain(&self, graph: &Graph, config: &BprConfig, predicates: Option<&BTreeSet<PredicateId>>) -> Result<(Self, RetrainReport)> {
        if graph.is_empty() {
            return Err(Error::InvalidArgument("cannot retrain on an empty graph".into()));
        }
        let all_entities: Vec<EntityId> = match config.negative_space {
            NegativeSpace::AllEntities => graph.entities().iter().map(|e| e.id).collect(),
            NegativeSpace::PredicateObjects => Vec::new(),
        };
        let mut next = self.clone();
        next.version = self.version + 1;
        let mut report = RetrainReport {
            version: next.version,
            ..RetrainReport::default()
        };
        for (pid, positives) in Self::positives(graph, config.train_min_confidence) {
            if predicates.is_some_and(|set| !set.contains(&pid)) {
                continue;
            }
            let name = graph.predicate_name(pid).to_string();
            match BprModel::init_with_pool(pid, &positives, &all_entities, config.dim, config.hyper()) {
                Ok(mut model) => {
                    model.train(&positives);
                    next.models.insert(pid, model);
                    report.trained.push(name);
                }
                Err(Error::NoPositives(_)) => {
                    next.models.remove(&pid);
                    report.skipped.push(name);
                }
                Err(e) => return Err(e),
            }
        }
        Ok((next, report))
    }

    /// Serializes to the `models.bpr` JSON layout. Entities are stored by
    /// canonical label, predicates by name.
    pub fn to_json(&self, graph: &Graph) -> serde_json::Value {
        let mut models: Vec<StoredModel> = self
            .models
            .values()
            .map(|m| {
                let vecs = |map: &BTreeMap<EntityId, Vec<f64>>| {
                    let mut out: Vec<StoredVector> = map
                        .iter()
                        .map(|(e, v)| StoredVector {
                            entity: graph.entity_label(*e).to_string(),
                            vector: v.clone(),
                        })
                        .collect();
                    out.sort_by(|a, b| a.entity.cmp(&b.entity));
                    out
                };
                StoredModel {
                    predicate: graph.predicate_name(m.predicate).to_string(),
                    dim: m.dim,
                    hyper: m.hyper,
                    subjects: vecs(&m.subject_vecs),
                    objects: vecs(&m.object_vecs),
                    negative_pool: {
                        let mut pool: Vec<String> = m.negative_pool.iter().map(|e| graph.entity_label(*e).to_string()).collect();
                        pool.sort();
                        pool
                    },
                }
            })
            .collect();
        models.sort_by(|a, b| a.predicate.cmp(&b.predicate));
        serde_json::to_value(StoredModels {
            format: FORMAT_NAME.into(),
            format_version: FORMAT_VERSION,
            model_version: self.version,
            models,
        })
        .expect("models serialize")
    }

    /// Loads a `models.bpr` document. Vectors for labels or predicates
    /// unknown to `graph` are dropped.
    pub fn from_json(graph: &Graph, value: serde_json::Value) -> Result<Self> {
        let stored: StoredModels = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        if stored.format != FORMAT_NAME || stored.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file {} v{}",
                stored.format, stored.format_version
            )));
        }
        let mut out = BprModels {
            models: BTreeMap::new(),
            version: stored.model_version,
        };
        for m in stored.models {
            let Some(pid) = graph.predicate_by_name(&m.predicate) else { continue };
            let load = |vs: Vec<StoredVector>| -> Result<BTreeMap<EntityId, Vec<f64>>> {
                let mut map = BTreeMap::new();
                for sv in vs {
                    if sv.vector.len() != m.dim || sv.vector.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Format(format!("bad vector for {}", sv.entity)));
                    }
                    if let Some(id) = graph.entity_by_label(&sv.entity) {
                        map.insert(id, sv.vector);
                    }
                }
                Ok(map)
            };
            let mut pool: Vec<EntityId> = m.negative_pool.iter().filter_map(|l| graph.entity_by_label(l)).collect();
            pool.sort();
            pool.dedup();
            out.models.insert(
                pid,
                BprModel {
                    predicate: pid,
                    dim: m.dim,
                    subject_vecs: load(m.subjects)?,
                    object_vecs: load(m.objects)?,
                    negative_pool: pool,
                    hyper: m.hyper,
                },
            );
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct StoredVector {
    entity: String,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredModel {
    predicate: String,
    dim: usize,
    hyper: Hyper,
    subjects: Vec<StoredVector>,
    objects: Vec<StoredVector>,
    negative_pool: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredModels {
    format: String,
    format_version: u32,
    model_version: u64,
    models: Vec<StoredModel>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KgStore, Namespace, Origin, Provenance};

    const P: PredicateId = PredicateId(0);

    fn e(i: u32) -> EntityId {
        EntityId(i)
    }

    #[test]
    fn init_counts_and_range() {
        let m = BprModel::init(P, &[(e(0), e(1))], 2, Hyper::default()).unwrap();
        assert_eq!((m.subject_vecs.len(), m.object_vecs.len()), (1, 1));
        let m = BprModel::init(P, &[(e(0), e(1)), (e(0), e(2)), (e(0), e(3))], 4, Hyper::default()).unwrap();
        assert_eq!((m.subject_vecs.len(), m.object_vecs.len()), (1, 3));
        for v in m.subject_vecs.values().chain(m.object_vecs.values()) {
            assert_eq!(v.len(), 4);
            assert!(v.iter().all(|x| x.abs() <= 0.125));
        }
        assert!(matches!(BprModel::init(P, &[], 2, Hyper::default()), Err(Error::NoPositives(_))));
    }

    #[test]
    fn init_is_deterministic_and_role_specific() {
        let pos = [(e(0), e(0)), (e(1), e(2))];
        let a = BprModel::init(P, &pos, 3, Hyper::default()).unwrap();
        let b = BprModel::init(P, &pos, 3, Hyper::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.subject_vecs[&e(0)], a.object_vecs[&e(0)]);
        let c = BprModel::init(PredicateId(1), &pos, 3, Hyper::default()).unwrap();
        assert_ne!(a.subject_vecs[&e(0)], c.subject_vecs[&e(0)]);
    }

    #[test]
    fn raw_score_examples() {
        let mut m = BprModel::init(P, &[(e(0), e(1))], 2, Hyper::default()).unwrap();
        m.subject_vecs.insert(e(0), vec![0.0, 0.0]);
        m.object_vecs.insert(e(1), vec![0.0, 0.0]);
        assert_eq!(m.raw_score(e(0), e(1)), Some(0.0));
        m.subject_vecs.insert(e(0), vec![1.0, 0.0]);
        m.object_vecs.insert(e(1), vec![0.5, 2.0]);
        assert_eq!(m.raw_score(e(0), e(1)), Some(0.5));
        assert_eq!(m.raw_score(e(7), e(1)), None);
    }

    #[test]
    fn zero_vectors_give_ln2_loss() {
        let z = [0.0; 3];
        assert!((sample_loss(&z, &z, &z, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        let hyper = Hyper {
            regularization: 0.0,
            ..Hyper::default()
        };
        let mut m = BprModel::init(P, &[(e(0), e(1)), (e(2), e(3))], 3, hyper).unwrap();
        for v in m.subject_vecs.values_mut().chain(m.object_vecs.values_mut()) {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stats = m.train_epoch(&[(e(0), e(1))], &mut rng);
        assert_eq!(stats.samples, 1);
        assert!((stats.mean_loss.unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn one_step_reduces_sample_loss() {
        let hyper = Hyper {
            learning_rate: 0.01,
            ..Hyper::default()
        };
        let mut m = BprModel::init(P, &[(e(0), e(1)), (e(0), e(2))], 4, hyper).unwrap();
        let loss = |m: &BprModel| {
            sample_loss(&m.subject_vecs[&e(0)], &m.object_vecs[&e(1)], &m.object_vecs[&e(2)], hyper.regularization)
        };
        let before = loss(&m);
        let reported = m.sgd_step(e(0), e(1), e(2)).unwrap();
        assert_eq!(reported, before);
        assert!(loss(&m) < before);
    }

    #[test]
    fn single_object_skips_training() {
        let mut m = BprModel::init(P, &[(e(0), e(1))], 2, Hyper::default()).unwrap();
        let before = m.clone();
        let stats = m.train(&[(e(0), e(1))]);
        assert!(stats.iter().all(|s| s.samples == 0 && s.mean_loss.is_none()));
        assert_eq!(m, before);
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(10.0) > 0.999);
        assert!(sigmoid(-800.0) > 0.0 && sigmoid(800.0) < 1.0);
        assert!(sigmoid(-1.0) < sigmoid(-0.5));
    }

    #[test]
    fn score_triple_falls_back_to_prior() {
        let models = BprModels::default();
        let s = models.score_triple(e(0), P, e(1), 0.5);
        assert_eq!(s, TripleScore { value: 0.5, trained: false });
        let mut models = BprModels::default();
        let mut m = BprModel::init(P, &[(e(0), e(1))], 1, Hyper::default()).unwrap();
        m.subject_vecs.insert(e(0), vec![0.0]);
        models.models.insert(P, m);
        let s = models.score_triple(e(0), P, e(1), 0.3);
        assert_eq!(s, TripleScore { value: 0.5, trained: true });
    }

    fn small_graph() -> KgStore {
        let mut store = KgStore::new();
        let makes = store.register_predicate("manufactures", Namespace::Ontology).unwrap();
        let uses = store.register_predicate("uses", Namespace::Ontology).unwrap();
        let ids: Vec<_> = ["dji", "parrot", "drone", "camera", "windermere"]
            .iter()
            .map(|l| store.create_entity(l, &[], Origin::Curated).unwrap())
            .collect();
        store.add_fact(ids[0], makes, ids[2], 1.0, 0, Provenance::Curated).unwrap();
        store.add_fact(ids[0], makes, ids[3], 1.0, 0, Provenance::Curated).unwrap();
        store.add_fact(ids[1], makes, ids[2], 1.0, 0, Provenance::Curated).unwrap();
        store.add_fact(ids[4], uses, ids[2], 0.4, 0, Provenance::Extracted("x".into())).unwrap();
        store
    }

    #[test]
    fn retrain_is_deterministic_and_skips_unsupported() {
        let store = small_graph();
        let cfg = BprConfig::default();
        let (a, report) = BprModels::default().retrain(store.graph(), &cfg, None).unwrap();
        let (b, _) = BprModels::default().retrain(store.graph(), &cfg, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(report.trained, vec!["manufactures"]);
        assert_eq!(report.skipped, vec!["uses"]);
        assert_eq!(a.version, 1);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let store = small_graph();
        let g = store.graph();
        let (models, _) = BprModels::default().retrain(g, &BprConfig::default(), None).unwrap();
        let text = serde_json::to_string(&models.to_json(g)).unwrap();
        let back = BprModels::from_json(g, serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, models);
        let p = g.predicate_by_name("manufactures").unwrap();
        for s in g.entities() {
            for o in g.entities() {
                let x = models.score_triple(s.id, p, o.id, 0.5).value;
                let y = back.score_triple(s.id, p, o.id, 0.5).value;
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
