//! The engine: store, rules, models, topic model and miner window behind
//! one writer, with cheap read-only [`View`]s for queries.
//!
//! State lives in a data directory:
//!
//! | file            | contents                                         |
//! |-----------------|--------------------------------------------------|
//! | `facts.tsv`     | every fact, 6-column TSV                         |
//! | `rules.json`    | predicate rule models                            |
//! | `models.bpr`    | BPR vectors (JSON)                               |
//! | `topics.json`   | topic model                                      |
//! | `window.json`   | miner window batches and the next batch index    |
//! | `emission.json` | latest trending array                            |

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bpr::{BprModels, RetrainReport};
use crate::config::EngineConfig;
use crate::error::{open_file, Error, Result};
use crate::ingest::{load_curated_kb, read_raw_triples, Batch, CuratedLoadReport, IngestReport, Pipeline};
use crate::kg::{EntityId, Graph, KgSnapshot, KgStore};
use crate::linker::{candidates, link_mention, string_similarity, LinkerConfig};
use crate::mine::{mine_window, miner_edges, Emission, MinerEdge, WindowState};
use crate::predmap::{ExpansionReport, RuleSet};
use crate::topics::{find_paths, read_entity_docs, train_lda, QaConfig, TopicModel};
use crate::views::{self, EntityCard, PathView, PatternView, Stats};

pub const FACTS_FILE: &str = "facts.tsv";
pub const RULES_FILE: &str = "rules.json";
pub const MODELS_FILE: &str = "models.bpr";
pub const TOPICS_FILE: &str = "topics.json";
pub const WINDOW_FILE: &str = "window.json";
pub const EMISSION_FILE: &str = "emission.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TopicSummary {
    pub documents: usize,
    pub unmatched: usize,
    pub vocabulary: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetrainSummary {
    pub bpr: RetrainReport,
    pub topics: Option<TopicSummary>,
}

/// Path query parameters as they arrive from the CLI or HTTP.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathRequest {
    pub from: String,
    pub to: String,
    pub rel: Option<String>,
    pub k: Option<usize>,
    pub max_hops: Option<usize>,
}

/// An immutable, cheaply cloned view for readers.
#[derive(Clone)]
pub struct View {
    pub graph: KgSnapshot,
    pub topics: Arc<TopicModel>,
    pub emission: Arc<Emission>,
    pub qa: QaConfig,
    pub linker: LinkerConfig,
    pub card_facts: usize,
    pub bpr_version: u64,
}

impl View {
    /// Exact normalized label match, else an accepted entity link.
    pub fn resolve(&self, name: &str) -> Result<EntityId> {
        if name.trim().is_empty() {
            return Err(Error::EmptyMention);
        }
        if let Some(id) = self.graph.entity_by_label(name) {
            return Ok(id);
        }
        if !self.graph.entities().is_empty() {
            let d = link_mention(&self.graph, name, &[], &self.linker)?;
            if let (true, Some(id)) = (d.accepted, d.resolved) {
                return Ok(id);
            }
        }
        Err(Error::UnknownEntity(name.to_string()))
    }

    /// Labels of up to `n` entities whose names resemble `name`, for
    /// not-found responses.
    pub fn suggestions(&self, name: &str, n: usize) -> Vec<String> {
        let Ok(ids) = candidates(&self.graph, name, n) else {
            return Vec::new();
        };
        ids.into_iter()
            .filter(|id| string_similarity(&self.graph, name, *id) >= 0.5)
            .map(|id| self.graph.entity_label(id).to_string())
            .collect()
    }

    pub fn entity_card(&self, name: &str) -> Result<EntityCard> {
        let id = self.resolve(name)?;
        EntityCard::build(&self.graph, id, self.card_facts).ok_or_else(|| Error::UnknownEntity(name.to_string()))
    }

    pub fn paths(&self, req: &PathRequest) -> Result<Vec<PathView>> {
        let s = self.resolve(&req.from)?;
        let t = self.resolve(&req.to)?;
        if s == t {
            return Err(Error::InvalidArgument(format!(
                "from and to resolve to the same entity {:?}",
                self.graph.entity_label(s)
            )));
        }
        let rel = match req.rel.as_deref().map(str::trim).filter(|r| !r.is_empty()) {
            None => None,
            Some(r) => Some(
                self.graph
                    .predicate_by_name(r)
                    .ok_or_else(|| Error::UnknownPredicate(r.to_string()))?,
            ),
        };
        let mut q = self.qa.query(s, t, rel);
        if let Some(k) = req.k {
            q.k = k;
        }
        if let Some(h) = req.max_hops {
            q.max_hops = h;
        }
        if q.k == 0 || q.max_hops == 0 {
            return Err(Error::InvalidArgument("k and maxHops must be >= 1".into()));
        }
        let found = find_paths(&self.graph, &self.topics, &q)?;
        Ok(found.iter().map(|p| PathView::build(&self.graph, p)).collect())
    }

    pub fn trending(&self) -> Vec<PatternView> {
        views::trending(&self.emission)
    }

    pub fn stats(&self) -> Stats {
        Stats {
            entities: self.graph.entity_count(),
            facts: self.graph.fact_count(),
            patterns: self.emission.current.len(),
            predicates: self.graph.predicates().len(),
            last_batch: self.emission.window.map(|w| w.last_batch),
            bpr_version: self.bpr_version,
            topic_model: self.topics.is_trained(),
        }
    }
}

pub struct Engine {
    config: EngineConfig,
    store: KgStore,
    rules: RuleSet,
    models: BprModels,
    topics: Arc<TopicModel>,
    window: WindowState,
    emission: Arc<Emission>,
    next_batch: u64,
}

impl Engine {
    /// An empty engine. Nothing is read from disk.
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Engine {
            topics: Arc::new(TopicModel::untrained(config.qa.topics)),
            window: WindowState::new(config.miner.clone()),
            config,
            store: KgStore::new(),
            rules: RuleSet::new(),
            models: BprModels::default(),
            emission: Arc::new(Emission::default()),
            next_batch: 0,
        })
    }

    /// Restores whatever state the configured data directory holds.
    pub fn open(config: EngineConfig) -> Result<Self> {
        let mut engine = Engine::new(config)?;
        let Some(dir) = engine.config.paths.data_dir.clone() else {
            return Ok(engine);
        };
        let rules_json = read_json(&dir.join(RULES_FILE))?;
        let ontology: BTreeSet<String> = rules_json
            .as_ref()
            .and_then(|v| v.as_array())
            .into_iter()
            .flatten()
            .filter_map(|m| m.get("predicate")?.as_str().map(String::from))
            .collect();
        let facts = dir.join(FACTS_FILE);
        if facts.exists() {
            engine.store = KgStore::load_fact_file(&facts, &ontology)?;
        }
        if let Some(v) = rules_json {
            engine.rules = RuleSet::from_json(&mut engine.store, v)?;
        }
        if let Some(v) = read_json(&dir.join(MODELS_FILE))? {
            engine.models = BprModels::from_json(engine.store.graph(), v)?;
        }
        if let Some(v) = read_json(&dir.join(TOPICS_FILE))? {
            engine.topics = Arc::new(TopicModel::from_json(engine.store.graph(), v)?);
        }
        if let Some(v) = read_json(&dir.join(WINDOW_FILE))? {
            let stored: StoredWindow = serde_json::from_value(v).map_err(|e| Error::Format(e.to_string()))?;
            engine.next_batch = stored.next_batch;
            let batches = stored
                .batches
                .into_iter()
                .map(|b| (b.index, b.edges.into_iter().filter_map(|e| e.resolve(engine.store.graph())).collect()))
                .collect();
            let (window, mut emission) = WindowState::from_batches(engine.config.miner.clone(), batches);
            emission.added.clear();
            emission.removed.clear();
            engine.window = window;
            engine.emission = Arc::new(emission);
        }
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn graph(&self) -> &Graph {
        self.store.graph()
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn models(&self) -> &BprModels {
        &self.models
    }

    pub fn topics(&self) -> &TopicModel {
        &self.topics
    }

    pub fn emission(&self) -> &Emission {
        &self.emission
    }

    pub fn window(&self) -> &WindowState {
        &self.window
    }

    pub fn view(&self) -> View {
        View {
            graph: self.store.snapshot(),
            topics: Arc::clone(&self.topics),
            emission: Arc::clone(&self.emission),
            qa: self.config.qa.clone(),
            linker: self.config.linker.clone(),
            card_facts: self.config.service.card_facts,
            bpr_version: self.models.version,
        }
    }

    pub fn load_kb(&mut self, path: &Path) -> Result<CuratedLoadReport> {
        load_curated_kb(&mut self.store, path)
    }

    /// Adds one rule model per seed-file line; returns how many.
    pub fn load_seeds(&mut self, path: &Path) -> Result<usize> {
        let loaded = RuleSet::from_seed_file(&mut self.store, path)?;
        let mut n = 0;
        for m in loaded.models() {
            self.rules.insert(m.clone());
            n += 1;
        }
        Ok(n)
    }

    fn ensure_rules(&mut self) -> Result<()> {
        if self.rules.is_empty() {
            if let Some(seeds) = self.config.paths.seeds.clone() {
                self.load_seeds(&seeds)?;
            }
        }
        Ok(())
    }

    pub fn ingest_file(&mut self, path: &Path) -> Result<IngestReport> {
        let reader = BufReader::new(open_file(path)?);
        self.ingest_reader(reader)
    }

    /// Ingests JSON-lines raw triples; every closed batch advances the
    /// miner window.
    pub fn ingest_reader<R: BufRead>(&mut self, reader: R) -> Result<IngestReport> {
        self.ensure_rules()?;
        let mode = self.config.miner.label_mode;
        let window = &mut self.window;
        let emission = &mut self.emission;
        let mut sink = |batch: Batch, graph: &Graph| {
            let edges = miner_edges(graph, &batch.facts, mode);
            *emission = Arc::new(window.push_batch(batch.index, edges));
        };
        let mut pipeline = Pipeline {
            store: &mut self.store,
            rules: &self.rules,
            linker: &self.config.linker,
            models: &self.models,
            prior: self.config.bpr.prior,
            config: &self.config.ingest,
            next_batch: &mut self.next_batch,
        };
        pipeline.ingest_reader(reader, &mut sink)
    }

    /// Distant-supervision expansion of the rule models from a raw-triple
    /// file, using the current graph as evidence.
    pub fn expand_file(&mut self, path: &Path) -> Result<ExpansionReport> {
        self.ensure_rules()?;
        if self.rules.is_empty() {
            return Err(Error::InvalidArgument(
                "no predicate rules: configure paths.seeds or load a seed file".into(),
            ));
        }
        let raw = read_raw_triples(path)?;
        let params = self.config.expand.params();
        self.rules.expand(&raw, self.store.graph(), &self.config.linker, params)
    }

    /// Retrains every BPR model, and the topic model when a document file
    /// is configured.
    pub fn retrain(&mut self) -> Result<RetrainSummary> {
        let (models, bpr) = self.models.retrain(self.store.graph(), &self.config.bpr, None)?;
        self.models = models;
        let topics = match self.config.paths.docs.clone() {
            Some(p) => Some(self.retrain_topics(&p)?),
            None => None,
        };
        Ok(RetrainSummary { bpr, topics })
    }

    pub fn retrain_topics(&mut self, docs_path: &Path) -> Result<TopicSummary> {
        let mut docs: BTreeMap<EntityId, Vec<String>> = BTreeMap::new();
        let mut unmatched = 0;
        for (label, tokens) in read_entity_docs(docs_path)? {
            match self.store.graph().entity_by_label(&label) {
                Some(id) => docs.entry(id).or_default().extend(tokens),
                None => unmatched += 1,
            }
        }
        let qa = &self.config.qa;
        let model = train_lda(&docs, qa.topics, qa.alpha(), qa.beta, qa.gibbs_iters, qa.seed)?;
        let summary = TopicSummary {
            documents: model.theta.len(),
            unmatched,
            vocabulary: model.vocab.len(),
            k: model.k,
        };
        self.topics = Arc::new(model);
        Ok(summary)
    }

    /// Closed frequent patterns of the live window, mined from scratch.
    pub fn mine(&self) -> Vec<PatternView> {
        let m = &self.config.miner;
        let emission = Emission {
            current: mine_window(&self.window.live_edges(), m.min_support, m.max_edges),
            window: self.window.span(),
            ..Emission::default()
        };
        views::trending(&emission)
    }

    /// Writes all state to the data directory, if one is configured.
    pub fn save(&self) -> Result<()> {
        let Some(dir) = &self.config.paths.data_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let graph = self.store.graph();
        let mut facts = Vec::new();
        graph.write_fact_file(&mut facts)?;
        write_atomic(&dir.join(FACTS_FILE), &facts)?;
        write_atomic(&dir.join(RULES_FILE), views::render(&self.rules.to_json()).as_bytes())?;
        write_atomic(&dir.join(MODELS_FILE), views::render(&self.models.to_json(graph)).as_bytes())?;
        if self.topics.is_trained() {
            write_atomic(&dir.join(TOPICS_FILE), views::render(&self.topics.to_json(graph)).as_bytes())?;
        }
        let window = StoredWindow {
            next_batch: self.next_batch,
            batches: self
                .window
                .batches()
                .map(|(index, edges)| StoredBatch {
                    index: *index,
                    edges: edges.iter().map(|e| StoredEdge::new(graph, e)).collect(),
                })
                .collect(),
        };
        write_atomic(&dir.join(WINDOW_FILE), views::render(&window).as_bytes())?;
        write_atomic(&dir.join(EMISSION_FILE), views::render(&views::trending(&self.emission)).as_bytes())?;
        Ok(())
    }

    pub fn data_dir(&self) -> Option<&PathBuf> {
        self.config.paths.data_dir.as_ref()
    }
}

fn read_json(path: &Path) -> Result<Option<serde_json::Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredWindow {
    next_batch: u64,
    batches: Vec<StoredBatch>,
}

#[derive(Serialize, Deserialize)]
struct StoredBatch {
    index: u64,
    edges: Vec<StoredEdge>,
}

/// A miner edge with entities stored by label, since ids are reassigned
/// when the fact file is reloaded.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredEdge {
    src: String,
    src_label: String,
    pred: String,
    dst: String,
    dst_label: String,
}

impl StoredEdge {
    fn new(graph: &Graph, e: &MinerEdge) -> Self {
        StoredEdge {
            src: graph.entity_label(EntityId(e.src)).to_string(),
            src_label: e.src_label.clone(),
            pred: e.pred.clone(),
            dst: graph.entity_label(EntityId(e.dst)).to_string(),
            dst_label: e.dst_label.clone(),
        }
    }

    fn resolve(self, graph: &Graph) -> Option<MinerEdge> {
        Some(MinerEdge {
            src: graph.entity_by_label(&self.src)?.0,
            src_label: self.src_label,
            pred: self.pred,
            dst: graph.entity_by_label(&self.dst)?.0,
            dst_label: self.dst_label,
        })
    }
}
