//! JSON shapes shared by the CLI and the HTTP API.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::kg::{EntityId, Fact, Graph, Origin};
use crate::mine::{Emission, PatternEdge, WindowSpan};
use crate::topics::ScoredPath;

/// Compact JSON, the single serialization path for every response.
pub fn render<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("views serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FactView {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub confidence: f64,
    pub timestamp: i64,
    pub provenance: String,
    /// "out" when the card's entity is the subject, "in" otherwise.
    pub direction: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PredicateGroup {
    pub predicate: String,
    pub facts: Vec<FactView>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityCard {
    pub entity: String,
    pub id: u32,
    pub origin: &'static str,
    pub type_labels: Vec<String>,
    pub aliases: Vec<String>,
    pub fact_count: usize,
    pub groups: Vec<PredicateGroup>,
}

fn origin_name(o: Origin) -> &'static str {
    match o {
        Origin::Curated => "curated",
        Origin::Extracted => "extracted",
    }
}

impl EntityCard {
    /// The `top_n` incident facts with highest confidence (ties: older
    /// first), grouped by predicate name.
    pub fn build(graph: &Graph, id: EntityId, top_n: usize) -> Option<Self> {
        let e = graph.entity(id)?;
        let mut facts: Vec<&Fact> = graph.incident(id).collect();
        let fact_count = facts.len();
        facts.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.seq.cmp(&b.seq)));
        facts.truncate(top_n);
        let mut groups: BTreeMap<String, Vec<FactView>> = BTreeMap::new();
        for f in facts {
            groups
                .entry(graph.predicate_name(f.predicate).to_string())
                .or_default()
                .push(FactView {
                    subject: graph.entity_label(f.subject).to_string(),
                    predicate: graph.predicate_name(f.predicate).to_string(),
                    object: graph.entity_label(f.object).to_string(),
                    confidence: f.confidence,
                    timestamp: f.timestamp,
                    provenance: f.provenance.to_string(),
                    direction: if f.subject == id { "out" } else { "in" },
                });
        }
        Some(EntityCard {
            entity: e.label.clone(),
            id: id.0,
            origin: origin_name(e.origin),
            type_labels: e.type_labels.clone(),
            aliases: e.aliases.iter().cloned().collect(),
            fact_count,
            groups: groups
                .into_iter()
                .map(|(predicate, facts)| PredicateGroup { predicate, facts })
                .collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEdgeView {
    pub s: String,
    pub p: String,
    pub o: String,
    pub direction: &'static str,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathView {
    pub vertices: Vec<String>,
    pub edges: Vec<PathEdgeView>,
    pub coherence: f64,
    pub mean_confidence: f64,
}

impl PathView {
    pub fn build(graph: &Graph, path: &ScoredPath) -> Self {
        PathView {
            vertices: path.vertices.iter().map(|v| graph.entity_label(*v).to_string()).collect(),
            edges: path
                .steps
                .iter()
                .map(|s| PathEdgeView {
                    s: graph.entity_label(s.subject).to_string(),
                    p: graph.predicate_name(s.predicate).to_string(),
                    o: graph.entity_label(s.object).to_string(),
                    direction: if s.forward { "forward" } else { "backward" },
                    confidence: s.confidence,
                })
                .collect(),
            coherence: path.coherence,
            mean_confidence: path.mean_confidence,
        }
    }
}

/// One element of the trending array.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternView {
    pub code: String,
    pub edges: Vec<PatternEdge>,
    pub support: usize,
    pub closed: bool,
    pub window: Option<WindowSpan>,
}

pub fn trending(emission: &Emission) -> Vec<PatternView> {
    emission
        .current
        .iter()
        .map(|p| PatternView {
            code: p.code.clone(),
            edges: p.edges.clone(),
            support: p.support,
            closed: p.closed,
            window: emission.window,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub entities: usize,
    pub facts: usize,
    pub patterns: usize,
    pub predicates: usize,
    pub last_batch: Option<u64>,
    pub bpr_version: u64,
    pub topic_model: bool,
}
