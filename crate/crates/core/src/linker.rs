//! Entity linking: resolve mention strings to KG entities by string
//! similarity combined with the cosine similarity between the mention's
//! context tokens and the candidate's graph neighborhood.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{normalize_label, EntityId, Graph, KgStore, Origin};

/// Jaro–Winkler threshold for fuzzy candidate generation.
pub const JARO_WINKLER_MIN: f64 = 0.90;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct LinkerConfig {
    pub lambda_str: f64,
    pub lambda_ctx: f64,
    pub tau_new: f64,
    pub max_candidates: usize,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            lambda_str: 0.4,
            lambda_ctx: 0.6,
            tau_new: 0.25,
            max_candidates: 16,
        }
    }
}

impl LinkerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: format!("linker.{key}"),
                reason: reason.to_string(),
            })
        };
        if self.lambda_str.is_nan() || self.lambda_str < 0.0 {
            return bad("lambdaStr", "must be >= 0");
        }
        if self.lambda_ctx.is_nan() || self.lambda_ctx < 0.0 {
            return bad("lambdaCtx", "must be >= 0");
        }
        if (self.lambda_str + self.lambda_ctx - 1.0).abs() > 1e-9 {
            return bad("lambdaCtx", "lambdaStr + lambdaCtx must equal 1");
        }
        if !(0.0..=1.0).contains(&self.tau_new) {
            return bad("tauNew", "must lie in [0, 1]");
        }
        if self.max_candidates == 0 {
            return bad("maxCandidates", "must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkDecision {
    pub mention: String,
    /// Best candidate (or the created entity). `None` only when there were
    /// no candidates and creation was not allowed.
    pub resolved: Option<EntityId>,
    pub created: bool,
    pub score: f64,
    pub candidate_count: usize,
    /// Whether the best score cleared `tau_new`.
    pub accepted: bool,
}

/// Term-frequency bag of the labels and predicate names around an entity.
pub fn neighborhood_bag(graph: &Graph, entity: EntityId) -> BTreeMap<String, f64> {
    let mut bag = BTreeMap::new();
    let mut push = |text: &str| {
        for tok in normalize_label(text).split_whitespace() {
            *bag.entry(tok.to_string()).or_insert(0.0) += 1.0;
        }
    };
    for f in graph.incident(entity) {
        let other = if f.subject == entity { f.object } else { f.subject };
        push(graph.entity_label(other));
        push(graph.predicate_name(f.predicate));
    }
    bag
}

fn context_bag(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut bag = BTreeMap::new();
    for t in tokens {
        for tok in normalize_label(t).split_whitespace() {
            *bag.entry(tok.to_string()).or_insert(0.0) += 1.0;
        }
    }
    bag
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Cosine similarity between the context tokens and the candidate's
/// neighborhood bag; 0 when either is empty.
pub fn context_score(graph: &Graph, candidate: EntityId, context: &[String]) -> f64 {
    cosine(&context_bag(context), &neighborhood_bag(graph, candidate))
}

fn token_subset(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> bool {
    !a.is_empty() && !b.is_empty() && (a.is_subset(b) || b.is_subset(a))
}

/// Best string similarity between a normalized mention and any name of an
/// entity, plus whether any name passes the candidate filter.
fn string_match(mention: &str, mention_tokens: &BTreeSet<&str>, names: impl Iterator<Item = impl AsRef<str>>) -> (f64, bool) {
    let mut best = 0.0f64;
    let mut qualifies = false;
    for name in names {
        let name = name.as_ref();
        let sim = if name == mention {
            1.0
        } else {
            strsim::jaro_winkler(mention, name)
        };
        best = best.max(sim);
        if sim >= JARO_WINKLER_MIN {
            qualifies = true;
        } else {
            let toks: BTreeSet<&str> = name.split_whitespace().collect();
            if token_subset(mention_tokens, &toks) {
                qualifies = true;
            }
        }
    }
    (best, qualifies)
}

/// String similarity in [0, 1]: exact match of a normalized name scores 1,
/// otherwise the best Jaro–Winkler similarity.
pub fn string_similarity(graph: &Graph, mention: &str, entity: EntityId) -> f64 {
    let norm = normalize_label(mention);
    let toks: BTreeSet<&str> = norm.split_whitespace().collect();
    graph
        .entity(entity)
        .map(|e| string_match(&norm, &toks, e.names()).0)
        .unwrap_or(0.0)
}

fn scored_candidates(graph: &Graph, mention: &str, max_candidates: usize) -> Result<Vec<(EntityId, f64)>> {
    let norm = normalize_label(mention);
    if norm.is_empty() {
        return Err(Error::EmptyMention);
    }
    let toks: BTreeSet<&str> = norm.split_whitespace().collect();
    let mut out: Vec<(EntityId, f64)> = graph
        .entities()
        .iter()
        .filter_map(|e| {
            let (sim, ok) = string_match(&norm, &toks, e.names());
            ok.then_some((e.id, sim))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out.truncate(max_candidates);
    Ok(out)
}

/// Candidate entities for a mention, by descending string similarity
/// (ties by ascending id).
pub fn candidates(graph: &Graph, mention: &str, max_candidates: usize) -> Result<Vec<EntityId>> {
    Ok(scored_candidates(graph, mention, max_candidates)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

/// Links a mention without creating entities. Below-threshold best
/// candidates are still reported, with `accepted = false`.
pub fn link_mention(graph: &Graph, mention: &str, context: &[String], config: &LinkerConfig) -> Result<LinkDecision> {
    let cands = scored_candidates(graph, mention, config.max_candidates)?;
    let ctx = context_bag(context);
    let mut best: Option<(EntityId, f64)> = None;
    for &(id, str_sim) in &cands {
        let ctx_sim = cosine(&ctx, &neighborhood_bag(graph, id));
        let score = (config.lambda_str * str_sim + config.lambda_ctx * ctx_sim).clamp(0.0, 1.0);
        match best {
            Some((bid, bs)) if bs > score || (bs == score && bid < id) => {}
            _ => best = Some((id, score)),
        }
    }
    let (resolved, score) = match best {
        Some((id, s)) => (Some(id), s),
        None => (None, 0.0),
    };
    Ok(LinkDecision {
        mention: mention.to_string(),
        resolved,
        created: false,
        score,
        candidate_count: cands.len(),
        accepted: resolved.is_some() && score >= config.tau_new,
    })
}

/// Links a mention, creating an Extracted entity when no candidate clears
/// `tau_new`.
pub fn link_or_create(store: &mut KgStore, mention: &str, context: &[String], config: &LinkerConfig) -> Result<LinkDecision> {
    let decision = link_mention(store.graph(), mention, context, config)?;
    if decision.accepted {
        return Ok(decision);
    }
    let before = store.graph().entity_count();
    let id = store.create_entity(mention, &[], Origin::Extracted)?;
    let created = store.graph().entity_count() > before;
    Ok(LinkDecision {
        resolved: Some(id),
        created,
        score: 0.0,
        accepted: false,
        ..decision
    })
}
