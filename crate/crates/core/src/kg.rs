//! The dynamic knowledge graph.
//!
//! A [`KgStore`] is owned by a single writer. Readers work on [`KgSnapshot`]s,
//! which are cheap to take (one `Arc` clone) and never observe later writes:
//! the first write after a snapshot copies the graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{open_file, Error, Result};

/// Predicate names treated as type assertions when loading curated data.
pub const TYPE_PREDICATES: &[&str] = &["type", "rdf:type", "isa", "is a", "instanceof"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    Curated,
    Extracted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Namespace {
    Ontology,
    Extracted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    Curated,
    Extracted(String),
}

impl Provenance {
    pub fn is_curated(&self) -> bool {
        matches!(self, Provenance::Curated)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Curated => f.write_str("curated"),
            Provenance::Extracted(source) => write!(f, "extracted:{source}"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "curated" {
            Ok(Provenance::Curated)
        } else if let Some(source) = s.strip_prefix("extracted:") {
            Ok(Provenance::Extracted(source.to_string()))
        } else {
            Err(format!("unknown provenance {s:?}"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub id: EntityId,
    pub label: String,
    pub aliases: BTreeSet<String>,
    pub type_labels: Vec<String>,
    pub origin: Origin,
}

impl Entity {
    /// First type label, used as the vertex label in mined patterns.
    pub fn primary_type(&self) -> Option<&str> {
        self.type_labels.first().map(String::as_str)
    }

    /// Canonical label followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub id: PredicateId,
    pub name: String,
    pub namespace: Namespace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fact {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: EntityId,
    pub confidence: f64,
    pub timestamp: i64,
    pub provenance: Provenance,
    pub seq: u64,
}

type FactKey = (EntityId, PredicateId, EntityId, Provenance);

/// Outcome of [`KgStore::add_fact`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactInsert {
    Appended(u64),
    /// An identical (s, p, o, provenance) fact already existed; its
    /// confidence became the max of old and new.
    Merged(u64),
}

impl FactInsert {
    pub fn seq(self) -> u64 {
        match self {
            FactInsert::Appended(s) | FactInsert::Merged(s) => s,
        }
    }
}

/// Lowercased, NFC-composed, whitespace-collapsed form of a label.
pub fn normalize_label(raw: &str) -> String {
    let composed: String = raw.nfc().collect::<String>().to_lowercase();
    let composed: String = composed.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The graph state shared by the store and its snapshots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    entities: Vec<Entity>,
    labels: HashMap<String, EntityId>,
    predicates: Vec<Predicate>,
    predicate_index: HashMap<(Namespace, String), PredicateId>,
    facts: Vec<Fact>,
    fact_index: HashMap<FactKey, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl Graph {
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Highest seq included, `None` when there are no facts.
    pub fn max_seq(&self) -> Option<u64> {
        self.facts.last().map(|f| f.seq)
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.0 as usize)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    /// Looks up an entity by canonical label or alias, after normalization.
    pub fn entity_by_label(&self, raw: &str) -> Option<EntityId> {
        self.labels.get(&normalize_label(raw)).copied()
    }

    pub fn predicate(&self, id: PredicateId) -> Option<&Predicate> {
        self.predicates.get(id.0 as usize)
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn predicate_in(&self, namespace: Namespace, name: &str) -> Option<PredicateId> {
        self.predicate_index
            .get(&(namespace, name.to_string()))
            .copied()
    }

    /// Ontology predicate of that name if one exists, else the extracted one.
    pub fn predicate_by_name(&self, name: &str) -> Option<PredicateId> {
        self.predicate_in(Namespace::Ontology, name)
            .or_else(|| self.predicate_in(Namespace::Extracted, name))
    }

    pub fn predicate_name(&self, id: PredicateId) -> &str {
        self.predicates
            .get(id.0 as usize)
            .map(|p| p.name.as_str())
            .unwrap_or("?")
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        self.entities
            .get(id.0 as usize)
            .map(|e| e.label.as_str())
            .unwrap_or("?")
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, seq: u64) -> Option<&Fact> {
        self.facts.get(seq as usize)
    }

    pub fn outgoing(&self, id: EntityId) -> impl Iterator<Item = &Fact> {
        self.outgoing
            .get(id.0 as usize)
            .into_iter()
            .flatten()
            .map(|&i| &self.facts[i])
    }

    pub fn incoming(&self, id: EntityId) -> impl Iterator<Item = &Fact> {
        self.incoming
            .get(id.0 as usize)
            .into_iter()
            .flatten()
            .map(|&i| &self.facts[i])
    }

    /// Outgoing then incoming facts of an entity.
    pub fn incident(&self, id: EntityId) -> impl Iterator<Item = &Fact> {
        self.outgoing(id).chain(self.incoming(id))
    }

    pub fn degree(&self, id: EntityId) -> usize {
        self.outgoing.get(id.0 as usize).map_or(0, Vec::len)
            + self.incoming.get(id.0 as usize).map_or(0, Vec::len)
    }

    /// Writes every fact as `subject\tpredicate\tobject\tconfidence\ttimestamp\tprovenance`.
    pub fn write_fact_file<W: Write>(&self, mut out: W) -> Result<()> {
        for f in &self.facts {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                self.entity_label(f.subject),
                self.predicate_name(f.predicate),
                self.entity_label(f.object),
                f.confidence,
                f.timestamp,
                sanitize_field(&f.provenance.to_string()),
            )?;
        }
        Ok(())
    }
}

fn sanitize_field(s: &str) -> String {
    s.chars()
        .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
        .collect()
}

/// Immutable point-in-time view of the graph.
#[derive(Clone, Debug, Default)]
pub struct KgSnapshot(Arc<Graph>);

impl Deref for KgSnapshot {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.0
    }
}

impl PartialEq for KgSnapshot {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

/// Single-writer knowledge graph store.
#[derive(Debug, Default)]
pub struct KgStore {
    graph: Arc<Graph>,
}

impl KgStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Read access to the live graph for the writer thread.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn snapshot(&self) -> KgSnapshot {
        KgSnapshot(Arc::clone(&self.graph))
    }

    fn graph_mut(&mut self) -> &mut Graph {
        Arc::make_mut(&mut self.graph)
    }

    /// Returns the id registered for the normalized label, creating the
    /// entity if needed. Type labels missing on an existing entity are added.
    pub fn create_entity(&mut self, label: &str, type_labels: &[String], origin: Origin) -> Result<EntityId> {
        let norm = normalize_label(label);
        if norm.is_empty() {
            return Err(Error::EmptyLabel);
        }
        let types: Vec<String> = type_labels
            .iter()
            .map(|t| normalize_label(t))
            .filter(|t| !t.is_empty())
            .collect();
        if let Some(&id) = self.graph.labels.get(&norm) {
            let missing = {
                let e = &self.graph.entities[id.0 as usize];
                types.iter().any(|t| !e.type_labels.contains(t))
            };
            if missing {
                let e = &mut self.graph_mut().entities[id.0 as usize];
                for t in types {
                    if !e.type_labels.contains(&t) {
                        e.type_labels.push(t);
                    }
                }
            }
            return Ok(id);
        }
        let g = self.graph_mut();
        let id = EntityId(g.entities.len() as u32);
        let mut type_labels: Vec<String> = Vec::with_capacity(types.len());
        for t in types {
            if !type_labels.contains(&t) {
                type_labels.push(t);
            }
        }
        g.entities.push(Entity {
            id,
            label: norm.clone(),
            aliases: BTreeSet::new(),
            type_labels,
            origin,
        });
        g.labels.insert(norm, id);
        g.outgoing.push(Vec::new());
        g.incoming.push(Vec::new());
        Ok(id)
    }

    /// Registers an alias for an entity. Aliases already taken by another
    /// entity are ignored and `false` is returned.
    pub fn add_alias(&mut self, id: EntityId, alias: &str) -> Result<bool> {
        let norm = normalize_label(alias);
        if norm.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if self.graph.entity(id).is_none() {
            return Err(Error::UnknownEntity(id.to_string()));
        }
        match self.graph.labels.get(&norm) {
            Some(&other) => Ok(other == id),
            None => {
                let g = self.graph_mut();
                g.labels.insert(norm.clone(), id);
                g.entities[id.0 as usize].aliases.insert(norm);
                Ok(true)
            }
        }
    }

    pub fn add_type(&mut self, id: EntityId, type_label: &str) -> Result<()> {
        let t = normalize_label(type_label);
        if t.is_empty() {
            return Err(Error::EmptyLabel);
        }
        let e = self
            .graph
            .entity(id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))?;
        if !e.type_labels.contains(&t) {
            self.graph_mut().entities[id.0 as usize].type_labels.push(t);
        }
        Ok(())
    }

    /// Registers (or finds) a predicate in a namespace. Names are trimmed but
    /// otherwise kept as given.
    pub fn register_predicate(&mut self, name: &str, namespace: Namespace) -> Result<PredicateId> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::EmptyLabel);
        }
        let key = (namespace, name.to_string());
        if let Some(&id) = self.graph.predicate_index.get(&key) {
            return Ok(id);
        }
        let g = self.graph_mut();
        let id = PredicateId(g.predicates.len() as u32);
        g.predicates.push(Predicate {
            id,
            name: name.to_string(),
            namespace,
        });
        g.predicate_index.insert(key, id);
        Ok(id)
    }

    pub fn add_fact(
        &mut self,
        subject: EntityId,
        predicate: PredicateId,
        object: EntityId,
        confidence: f64,
        timestamp: i64,
        provenance: Provenance,
    ) -> Result<FactInsert> {
        for id in [subject, object] {
            if self.graph.entity(id).is_none() {
                return Err(Error::UnknownEntity(id.to_string()));
            }
        }
        if self.graph.predicate(predicate).is_none() {
            return Err(Error::UnknownPredicate(format!("P{}", predicate.0)));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::ConfidenceOutOfRange(confidence));
        }
        let key = (subject, predicate, object, provenance);
        if let Some(&idx) = self.graph.fact_index.get(&key) {
            if confidence > self.graph.facts[idx].confidence {
                self.graph_mut().facts[idx].confidence = confidence;
            }
            return Ok(FactInsert::Merged(idx as u64));
        }
        let g = self.graph_mut();
        let idx = g.facts.len();
        g.facts.push(Fact {
            subject,
            predicate,
            object,
            confidence,
            timestamp,
            provenance: key.3.clone(),
            seq: idx as u64,
        });
        g.fact_index.insert(key, idx);
        g.outgoing[subject.0 as usize].push(idx);
        g.incoming[object.0 as usize].push(idx);
        Ok(FactInsert::Appended(idx as u64))
    }

    /// Loads a fact file written by [`Graph::write_fact_file`].
    ///
    /// A predicate lands in the Ontology namespace when it is listed in
    /// `ontology` or used by at least one curated fact. Entity origin follows
    /// the provenance of the first fact that mentions the entity.
    pub fn load_fact_file(path: &Path, ontology: &BTreeSet<String>) -> Result<Self> {
        let reader = BufReader::new(open_file(path)?);
        let mut rows = Vec::new();
        let mut curated_predicates = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(Error::parse(i + 1, format!("expected 6 columns, got {}", cols.len())));
            }
            let confidence: f64 = cols[3]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad confidence {:?}", cols[3])))?;
            let timestamp: i64 = cols[4]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad timestamp {:?}", cols[4])))?;
            let provenance: Provenance = cols[5].parse().map_err(|e| Error::parse(i + 1, e))?;
            if provenance.is_curated() {
                curated_predicates.insert(cols[1].to_string());
            }
            rows.push((i + 1, cols[0].to_string(), cols[1].to_string(), cols[2].to_string(), confidence, timestamp, provenance));
        }
        let mut store = KgStore::new();
        for name in ontology {
            store.register_predicate(name, Namespace::Ontology)?;
        }
        for (line, s, p, o, confidence, timestamp, provenance) in rows {
            let origin = if provenance.is_curated() { Origin::Curated } else { Origin::Extracted };
            let wrap = |e: Error| Error::Pipeline { line, source: Box::new(e) };
            let sid = store.create_entity(&s, &[], origin).map_err(wrap)?;
            let oid = store.create_entity(&o, &[], origin).map_err(wrap)?;
            let ns = if ontology.contains(&p) || curated_predicates.contains(&p) {
                Namespace::Ontology
            } else {
                Namespace::Extracted
            };
            let pid = store.register_predicate(&p, ns).map_err(wrap)?;
            if ns == Namespace::Ontology && is_type_predicate(&p) {
                store.add_type(sid, &o).map_err(wrap)?;
            }
            store
                .add_fact(sid, pid, oid, confidence, timestamp, provenance)
                .map_err(wrap)?;
        }
        Ok(store)
    }
}

pub fn is_type_predicate(name: &str) -> bool {
    let n = normalize_label(name);
    TYPE_PREDICATES.contains(&n.as_str())
}

/// Per-predicate fact counts, ordered by predicate name.
pub fn predicate_histogram(graph: &Graph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in graph.facts() {
        *out.entry(graph.predicate_name(f.predicate).to_string()).or_insert(0) += 1;
    }
    out
}
