//! Look-ahead beam search for explanatory paths.
//!
//! The beam works on frontier vertices: after each hop the candidate
//! frontier vertices are ranked by divergence from the target's topics and
//! every partial path ending at one of the best `beamWidth` vertices
//! survives. A beam at least as wide as the vertex set is exhaustive.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Graph, PredicateId};

use super::{entity_topic, js_divergence, TopicModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CoherenceMode {
    #[default]
    MeanConsecutive,
    SumConsecutive,
    MaxConsecutive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstraintMode {
    #[default]
    ContainsEdge,
    LastEdge,
}

/// The `qa` configuration block: topic model training and path search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct QaConfig {
    pub topics: usize,
    /// Defaults to 50 / topics.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub gibbs_iters: usize,
    pub seed: u64,
    pub beam_width: usize,
    pub max_hops: usize,
    pub top_k: usize,
    pub min_edge_confidence: f64,
    pub coherence: CoherenceMode,
    pub constraint_mode: ConstraintMode,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            topics: 20,
            alpha: None,
            beta: 0.01,
            gibbs_iters: 500,
            seed: 42,
            beam_width: 8,
            max_hops: 4,
            top_k: 5,
            min_edge_confidence: 0.0,
            coherence: CoherenceMode::MeanConsecutive,
            constraint_mode: ConstraintMode::ContainsEdge,
        }
    }
}

impl QaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: format!("qa.{key}"),
                reason: reason.into(),
            })
        };
        if self.topics < 2 {
            return bad("topics", "must be >= 2");
        }
        if !(self.alpha() > 0.0 && self.alpha().is_finite()) {
            return bad("alpha", "must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", "must be positive");
        }
        if self.beam_width == 0 {
            return bad("beamWidth", "must be >= 1");
        }
        if self.max_hops == 0 {
            return bad("maxHops", "must be >= 1");
        }
        if self.top_k == 0 {
            return bad("topK", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.min_edge_confidence) {
            return bad("minEdgeConfidence", "must be in [0, 1]");
        }
        Ok(())
    }

    pub fn query(&self, source: EntityId, target: EntityId, constraint: Option<PredicateId>) -> PathQuery {
        PathQuery {
            source,
            target,
            constraint,
            k: self.top_k,
            max_hops: self.max_hops,
            beam_width: self.beam_width,
            min_edge_confidence: self.min_edge_confidence,
            coherence: self.coherence,
            constraint_mode: self.constraint_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathQuery {
    pub source: EntityId,
    pub target: EntityId,
    pub constraint: Option<PredicateId>,
    pub k: usize,
    pub max_hops: usize,
    pub beam_width: usize,
    pub min_edge_confidence: f64,
    pub coherence: CoherenceMode,
    pub constraint_mode: ConstraintMode,
}

/// One traversed fact. `forward` is true when the walk follows the fact
/// from subject to object.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStep {
    pub seq: u64,
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: EntityId,
    pub forward: bool,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPath {
    pub vertices: Vec<EntityId>,
    pub steps: Vec<PathStep>,
    pub coherence: f64,
    pub mean_confidence: f64,
}

impl ScoredPath {
    pub fn hops(&self) -> usize {
        self.steps.len()
    }

    /// Result order: coherence ascending, then mean confidence descending,
    /// then fewer hops, then vertex ids, then fact seqs and directions.
    pub fn rank(&self, other: &Self) -> Ordering {
        self.coherence
            .total_cmp(&other.coherence)
            .then_with(|| other.mean_confidence.total_cmp(&self.mean_confidence))
            .then_with(|| self.hops().cmp(&other.hops()))
            .then_with(|| self.vertices.cmp(&other.vertices))
            .then_with(|| {
                let key = |p: &ScoredPath| p.steps.iter().map(|s| (s.seq, !s.forward)).collect::<Vec<_>>();
                key(self).cmp(&key(other))
            })
    }
}

/// Aggregates consecutive-pair divergences.
pub fn coherence(mode: CoherenceMode, divergences: &[f64]) -> f64 {
    if divergences.is_empty() {
        return 0.0;
    }
    match mode {
        CoherenceMode::MeanConsecutive => divergences.iter().sum::<f64>() / divergences.len() as f64,
        CoherenceMode::SumConsecutive => divergences.iter().sum(),
        CoherenceMode::MaxConsecutive => divergences.iter().copied().fold(0.0, f64::max),
    }
}

struct TopicCache<'a> {
    model: &'a TopicModel,
    graph: &'a Graph,
    rows: HashMap<EntityId, Vec<f64>>,
}

impl TopicCache<'_> {
    fn jsd(&mut self, a: EntityId, b: EntityId) -> f64 {
        for e in [a, b] {
            if !self.rows.contains_key(&e) {
                let row = entity_topic(self.model, self.graph, e);
                self.rows.insert(e, row);
            }
        }
        js_divergence(&self.rows[&a], &self.rows[&b]).expect("rows share the model's k")
    }
}

struct Partial {
    vertices: Vec<EntityId>,
    steps: Vec<PathStep>,
}

fn check(graph: &Graph, q: &PathQuery) -> Result<()> {
    for e in [q.source, q.target] {
        if graph.entity(e).is_none() {
            return Err(Error::NoPathFound(format!("entity {e} is not in the graph")));
        }
    }
    if q.source == q.target {
        return Err(Error::InvalidArgument("source and target are the same entity".into()));
    }
    if q.k == 0 || q.max_hops == 0 || q.beam_width == 0 {
        return Err(Error::InvalidArgument("k, maxHops and beamWidth must be >= 1".into()));
    }
    Ok(())
}

fn search(graph: &Graph, model: &TopicModel, q: &PathQuery) -> Result<(Vec<ScoredPath>, Vec<Vec<EntityId>>)> {
    check(graph, q)?;
    let mut topics = TopicCache {
        model,
        graph,
        rows: HashMap::new(),
    };
    let mut frontier = vec![Partial {
        vertices: vec![q.source],
        steps: Vec::new(),
    }];
    let mut completed: Vec<Partial> = Vec::new();
    let mut kept_per_hop = Vec::new();
    for hop in 1..=q.max_hops {
        let mut open = Vec::new();
        for p in &frontier {
            let v = *p.vertices.last().expect("non-empty path");
            for f in graph.incident(v) {
                if f.confidence < q.min_edge_confidence || f.subject == f.object {
                    continue;
                }
                let (forward, next) = if f.subject == v { (true, f.object) } else { (false, f.subject) };
                if p.vertices.contains(&next) {
                    continue;
                }
                let mut vertices = p.vertices.clone();
                vertices.push(next);
                let mut steps = p.steps.clone();
                steps.push(PathStep {
                    seq: f.seq,
                    subject: f.subject,
                    predicate: f.predicate,
                    object: f.object,
                    forward,
                    confidence: f.confidence,
                });
                let grown = Partial { vertices, steps };
                if next == q.target {
                    completed.push(grown);
                } else {
                    open.push(grown);
                }
            }
        }
        if hop == q.max_hops || open.is_empty() {
            break;
        }
        let candidates: BTreeSet<EntityId> = open.iter().map(|p| *p.vertices.last().unwrap()).collect();
        let mut ranked: Vec<(f64, EntityId)> = candidates
            .into_iter()
            .map(|v| (topics.jsd(v, q.target), v))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let kept: Vec<EntityId> = ranked.into_iter().take(q.beam_width).map(|(_, v)| v).collect();
        open.retain(|p| kept.contains(p.vertices.last().unwrap()));
        kept_per_hop.push(kept);
        frontier = open;
    }

    let mut scored: Vec<ScoredPath> = completed
        .into_iter()
        .filter(|p| match q.constraint {
            None => true,
            Some(c) => match q.constraint_mode {
                ConstraintMode::ContainsEdge => p.steps.iter().any(|s| s.predicate == c),
                ConstraintMode::LastEdge => p.steps.last().is_some_and(|s| s.predicate == c),
            },
        })
        .map(|p| {
            let divs: Vec<f64> = p.vertices.windows(2).map(|w| topics.jsd(w[0], w[1])).collect();
            let mean_confidence = p.steps.iter().map(|s| s.confidence).sum::<f64>() / p.steps.len() as f64;
            ScoredPath {
                coherence: coherence(q.coherence, &divs),
                mean_confidence,
                vertices: p.vertices,
                steps: p.steps,
            }
        })
        .collect();
    scored.sort_by(|a, b| a.rank(b));
    scored.truncate(q.k);
    Ok((scored, kept_per_hop))
}

/// Top-k paths from `q.source` to `q.target`. An empty result is not an
/// error.
pub fn find_paths(graph: &Graph, model: &TopicModel, q: &PathQuery) -> Result<Vec<ScoredPath>> {
    search(graph, model, q).map(|(paths, _)| paths)
}

/// Frontier vertices retained by the beam after each non-final hop.
pub fn beam_frontiers(graph: &Graph, model: &TopicModel, q: &PathQuery) -> Result<Vec<Vec<EntityId>>> {
    search(graph, model, q).map(|(_, kept)| kept)
}
