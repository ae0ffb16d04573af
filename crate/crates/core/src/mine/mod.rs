//! Closed frequent subgraph patterns over a sliding window of batches.
//!
//! [`mine_window`] mines a window from scratch; [`WindowState`] maintains
//! the same answer incrementally as batches enter and leave.

mod canonical;
mod oracle;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{is_type_predicate, EntityId, Graph};

pub use canonical::canonical_code;
pub use oracle::{mine_window, mni_support};
pub use window::{Emission, WindowSpan, WindowState};

/// One directed labeled edge of a pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatternEdge {
    pub src_label: String,
    #[serde(rename = "pred")]
    pub pred_label: String,
    pub dst_label: String,
    pub src_var: u8,
    pub dst_var: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub code: String,
    pub edges: Vec<PatternEdge>,
    pub support: usize,
    pub closed: bool,
}

/// An edge of the window graph. A vertex is the pair (id, label).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinerEdge {
    pub src: u32,
    pub src_label: String,
    pub pred: String,
    pub dst: u32,
    pub dst_label: String,
}

impl MinerEdge {
    pub fn new(src: u32, src_label: &str, pred: &str, dst: u32, dst_label: &str) -> Self {
        MinerEdge {
            src,
            src_label: src_label.into(),
            pred: pred.into(),
            dst,
            dst_label: dst_label.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LabelMode {
    /// First type label, or "Entity".
    #[default]
    Type,
    /// Canonical entity label.
    Entity,
    /// Every vertex labeled "*".
    PredicateOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct MinerConfig {
    pub window_batches: usize,
    pub min_support: usize,
    pub max_edges: usize,
    pub label_mode: LabelMode,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            window_batches: 10,
            min_support: 3,
            max_edges: 3,
            label_mode: LabelMode::Type,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: format!("miner.{key}"),
                reason: reason.into(),
            })
        };
        if self.window_batches == 0 {
            return bad("windowBatches", "must be >= 1");
        }
        if self.min_support == 0 {
            return bad("minSupport", "must be >= 1");
        }
        if !(1..=5).contains(&self.max_edges) {
            return bad("maxEdges", "must be in 1..=5");
        }
        Ok(())
    }
}

/// Vertex label of an entity under `mode`.
pub fn vertex_label(graph: &Graph, id: EntityId, mode: LabelMode) -> String {
    let entity = graph.entity(id);
    match mode {
        LabelMode::Type => entity
            .and_then(|e| e.primary_type())
            .unwrap_or("Entity")
            .to_string(),
        LabelMode::Entity => entity.map(|e| e.label.clone()).unwrap_or_default(),
        LabelMode::PredicateOnly => "*".to_string(),
    }
}

/// Miner edges for the given fact seqs. Self-loops are dropped, as are
/// type assertions in type mode (they are already vertex labels).
pub fn miner_edges(graph: &Graph, seqs: &[u64], mode: LabelMode) -> Vec<MinerEdge> {
    seqs.iter()
        .filter_map(|s| graph.fact(*s))
        .filter(|f| f.subject != f.object)
        .filter_map(|f| {
            let pred = graph.predicate_name(f.predicate);
            if mode == LabelMode::Type && is_type_predicate(pred) {
                return None;
            }
            Some(MinerEdge {
                src: f.subject.0,
                src_label: vertex_label(graph, f.subject, mode),
                pred: pred.to_string(),
                dst: f.object.0,
                dst_label: vertex_label(graph, f.object, mode),
            })
        })
        .collect()
}
