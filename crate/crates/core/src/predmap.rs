//! Mapping free-text predicate phrases onto ontology predicates.
//!
//! Each ontology predicate owns a rule model bootstrapped from a handful of
//! seed phrases. [`RuleSet::expand`] adds learned phrases by distant
//! supervision: a raw phrase whose linked (subject, object) pairs are already
//! connected by a curated predicate accrues evidence for that predicate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{open_file, Error, Result};
use crate::ingest::RawTriple;
use crate::kg::{EntityId, Graph, KgStore, Namespace, PredicateId};
use crate::linker::{link_mention, LinkerConfig};

const STOPWORD_FILE: &str = include_str!("../data/stopwords.txt");

pub fn stopwords() -> &'static BTreeSet<&'static str> {
    static WORDS: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        STOPWORD_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// A normalized predicate phrase: lowercase tokens, stopwords removed,
/// light suffix stripping applied.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhraseNorm(pub Vec<String>);

impl PhraseNorm {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn token_set(&self) -> BTreeSet<&str> {
        self.0.iter().map(String::as_str).collect()
    }
}

impl fmt::Display for PhraseNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

fn ends_with_sibilant(s: &str) -> bool {
    ["s", "x", "z", "ch", "sh"].iter().any(|suf| s.ends_with(suf))
}

/// Strips one of `ing`, `ed`, `es`, `s` from tokens of at least five
/// characters. `es` comes off only after a sibilant (`boxes` -> `box`);
/// otherwise the bare `s` rule applies (`manufactures` -> `manufacture`).
pub fn stem(token: &str) -> String {
    if token.chars().count() < 5 {
        return token.to_string();
    }
    if let Some(base) = token.strip_suffix("ing") {
        return base.to_string();
    }
    if let Some(base) = token.strip_suffix("ed") {
        return base.to_string();
    }
    if let Some(base) = token.strip_suffix("es") {
        if ends_with_sibilant(base) {
            return base.to_string();
        }
    }
    if let Some(base) = token.strip_suffix('s') {
        return base.to_string();
    }
    token.to_string()
}

pub fn normalize_phrase(raw: &str) -> Result<PhraseNorm> {
    let lowered = crate::kg::normalize_label(raw);
    let tokens: Vec<&str> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyPhrase);
    }
    let stop = stopwords();
    let kept: Vec<&str> = tokens.iter().copied().filter(|t| !stop.contains(t)).collect();
    let kept = if kept.is_empty() { tokens } else { kept };
    Ok(PhraseNorm(kept.into_iter().map(stem).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub support: usize,
    pub conflicts: usize,
}

impl Evidence {
    pub fn precision(&self) -> f64 {
        let total = self.support + self.conflicts;
        if total == 0 {
            0.0
        } else {
            self.support as f64 / total as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateRuleModel {
    pub target: PredicateId,
    pub target_name: String,
    pub seeds: BTreeSet<PhraseNorm>,
    pub learned: BTreeMap<PhraseNorm, Evidence>,
}

impl PredicateRuleModel {
    pub fn bootstrap(graph: &Graph, target: PredicateId, seeds: &[String]) -> Result<Self> {
        let pred = graph
            .predicate(target)
            .filter(|p| p.namespace == Namespace::Ontology)
            .ok_or_else(|| Error::UnknownPredicate(format!("P{}", target.0)))?;
        if seeds.is_empty() {
            return Err(Error::EmptyPhrase);
        }
        let seeds = seeds
            .iter()
            .map(|s| normalize_phrase(s))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(Self {
            target,
            target_name: pred.name.clone(),
            seeds,
            learned: BTreeMap::new(),
        })
    }

    /// Seed phrases followed by learned ones.
    pub fn phrases(&self) -> impl Iterator<Item = &PhraseNorm> {
        self.seeds.iter().chain(self.learned.keys())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpandParams {
    pub min_evidence: usize,
    pub min_precision: f64,
}

impl Default for ExpandParams {
    fn default() -> Self {
        Self {
            min_evidence: 3,
            min_precision: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhraseReport {
    pub phrase: String,
    pub support: usize,
    pub conflicts: usize,
    pub promoted: bool,
}

/// Per-predicate expansion outcome. Serializes as
/// `{predicate: [{phrase, support, conflicts, promoted}]}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionReport {
    pub predicates: BTreeMap<String, Vec<PhraseReport>>,
    pub unlinked: usize,
    pub unconnected: usize,
}

impl Serialize for ExpansionReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.predicates.serialize(s)
    }
}

impl ExpansionReport {
    pub fn promoted(&self, predicate: &str) -> Vec<&str> {
        self.predicates
            .get(predicate)
            .into_iter()
            .flatten()
            .filter(|r| r.promoted)
            .map(|r| r.phrase.as_str())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct StoredLearned {
    phrase: PhraseNorm,
    support: usize,
    conflicts: usize,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    predicate: String,
    seeds: Vec<PhraseNorm>,
    learned: Vec<StoredLearned>,
}

/// All predicate rule models, ordered by predicate name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleSet {
    models: BTreeMap<String, PredicateRuleModel>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: PredicateRuleModel) {
        self.models.insert(model.target_name.clone(), model);
    }

    pub fn models(&self) -> impl Iterator<Item = &PredicateRuleModel> {
        self.models.values()
    }

    pub fn get(&self, predicate: &str) -> Option<&PredicateRuleModel> {
        self.models.get(predicate)
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Bootstraps one model per line of a seed file
    /// (`{"predicate": "...", "seeds": [...]}`), registering each target
    /// predicate in the Ontology namespace.
    pub fn from_seed_file(store: &mut KgStore, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct SeedLine {
            predicate: String,
            seeds: Vec<String>,
        }
        let reader = std::io::BufReader::new(open_file(path)?);
        let mut rules = RuleSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: SeedLine =
                serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let pid = store.register_predicate(&parsed.predicate, Namespace::Ontology)?;
            let model = PredicateRuleModel::bootstrap(store.graph(), pid, &parsed.seeds)
                .map_err(|e| Error::Pipeline { line: i + 1, source: Box::new(e) })?;
            rules.insert(model);
        }
        Ok(rules)
    }

    /// Maps a raw phrase to an ontology predicate, or `None` when unmapped.
    ///
    /// Exact token-sequence matches beat subset matches, then longer rule
    /// phrases win, then the lexicographically smallest predicate name.
    pub fn map_predicate(&self, phrase: &str) -> Result<Option<PredicateId>> {
        let norm = normalize_phrase(phrase)?;
        Ok(self.map_normalized(&norm))
    }

    pub fn map_normalized(&self, norm: &PhraseNorm) -> Option<PredicateId> {
        let input = norm.token_set();
        // (exact, rule length); name order comes from BTreeMap iteration.
        let mut best: Option<((bool, usize), PredicateId)> = None;
        for model in self.models.values() {
            for rule in model.phrases() {
                let exact = rule == norm;
                if !exact && !rule.token_set().is_subset(&input) {
                    continue;
                }
                let key = (exact, rule.len());
                if best.as_ref().is_none_or(|(k, _)| key > *k) {
                    best = Some((key, model.target));
                }
            }
        }
        best.map(|(_, p)| p)
    }

    /// Distant-supervision expansion over a batch of raw triples.
    pub fn expand(
        &mut self,
        raw: &[RawTriple],
        curated: &Graph,
        linker: &LinkerConfig,
        params: ExpandParams,
    ) -> Result<ExpansionReport> {
        if params.min_evidence < 1 {
            return Err(Error::InvalidArgument("min_evidence must be >= 1".into()));
        }
        if !(params.min_precision > 0.0 && params.min_precision <= 1.0) {
            return Err(Error::InvalidArgument("min_precision must lie in (0, 1]".into()));
        }
        let mut report = ExpansionReport::default();
        // phrase -> predicate -> distinct (s, o) pairs
        let mut pairs: BTreeMap<PhraseNorm, BTreeMap<PredicateId, BTreeSet<(EntityId, EntityId)>>> =
            BTreeMap::new();
        for t in raw {
            let Ok(norm) = normalize_phrase(&t.predicate_phrase) else {
                report.unlinked += 1;
                continue;
            };
            let s = link_mention(curated, &t.subject_mention, &t.context_tokens, linker)?;
            let o = link_mention(curated, &t.object_mention, &t.context_tokens, linker)?;
            let (Some(sid), Some(oid), true, true) = (s.resolved, o.resolved, s.accepted, o.accepted) else {
                report.unlinked += 1;
                continue;
            };
            let connecting: BTreeSet<PredicateId> = curated
                .outgoing(sid)
                .filter(|f| f.object == oid && f.provenance.is_curated())
                .map(|f| f.predicate)
                .filter(|p| {
                    curated
                        .predicate(*p)
                        .is_some_and(|p| p.namespace == Namespace::Ontology)
                })
                .collect();
            if connecting.is_empty() {
                report.unconnected += 1;
                continue;
            }
            let entry = pairs.entry(norm).or_default();
            for p in connecting {
                entry.entry(p).or_default().insert((sid, oid));
            }
        }

        let seed_phrases: BTreeSet<&PhraseNorm> = self.models.values().flat_map(|m| m.seeds.iter()).collect();
        let by_id: BTreeMap<PredicateId, String> = self
            .models
            .values()
            .map(|m| (m.target, m.target_name.clone()))
            .collect();

        let mut promotions: Vec<(String, PhraseNorm, Evidence)> = Vec::new();
        for (phrase, per_pred) in &pairs {
            let mut qualifying: Vec<(String, Evidence)> = Vec::new();
            let mut rows: Vec<(String, Evidence)> = Vec::new();
            for (pid, supporting) in per_pred {
                let Some(name) = by_id.get(pid) else { continue };
                let conflicting: BTreeSet<&(EntityId, EntityId)> = per_pred
                    .iter()
                    .filter(|(q, _)| *q != pid)
                    .flat_map(|(_, set)| set.iter())
                    .filter(|pair| !supporting.contains(pair))
                    .collect();
                let ev = Evidence {
                    support: supporting.len(),
                    conflicts: conflicting.len(),
                };
                rows.push((name.clone(), ev));
                if ev.support >= params.min_evidence
                    && ev.precision() >= params.min_precision
                    && !seed_phrases.contains(phrase)
                {
                    qualifying.push((name.clone(), ev));
                }
            }
            // A phrase may be learned by at most one predicate.
            let already_elsewhere = |name: &str| {
                self.models
                    .values()
                    .any(|m| m.target_name != name && m.learned.contains_key(phrase))
            };
            let winner = match qualifying.as_slice() {
                [(name, ev)] if !already_elsewhere(name) => Some((name.clone(), *ev)),
                _ => None,
            };
            for (name, ev) in rows {
                let promoted = winner.as_ref().is_some_and(|(w, _)| *w == name);
                report.predicates.entry(name).or_default().push(PhraseReport {
                    phrase: phrase.to_string(),
                    support: ev.support,
                    conflicts: ev.conflicts,
                    promoted,
                });
            }
            if let Some((name, ev)) = winner {
                promotions.push((name, phrase.clone(), ev));
            }
        }
        for (name, phrase, ev) in promotions {
            if let Some(model) = self.models.get_mut(&name) {
                model.learned.insert(phrase, ev);
            }
        }
        Ok(report)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let stored: Vec<StoredModel> = self
            .models
            .values()
            .map(|m| StoredModel {
                predicate: m.target_name.clone(),
                seeds: m.seeds.iter().cloned().collect(),
                learned: m
                    .learned
                    .iter()
                    .map(|(p, ev)| StoredLearned {
                        phrase: p.clone(),
                        support: ev.support,
                        conflicts: ev.conflicts,
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_value(stored).expect("rule set serializes")
    }

    /// Restores a rule set written by [`RuleSet::to_json`], registering the
    /// target predicates in the Ontology namespace.
    pub fn from_json(store: &mut KgStore, value: serde_json::Value) -> Result<Self> {
        let stored: Vec<StoredModel> =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        let mut rules = RuleSet::new();
        for m in stored {
            let target = store.register_predicate(&m.predicate, Namespace::Ontology)?;
            rules.insert(PredicateRuleModel {
                target,
                target_name: m.predicate,
                seeds: m.seeds.into_iter().collect(),
                learned: m
                    .learned
                    .into_iter()
                    .map(|l| {
                        (
                            l.phrase,
                            Evidence {
                                support: l.support,
                                conflicts: l.conflicts,
                            },
                        )
                    })
                    .collect(),
            });
        }
        Ok(rules)
    }
}
