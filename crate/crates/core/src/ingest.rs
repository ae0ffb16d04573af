//! Curated-KB loading, raw-triple parsing, and the fusion pipeline that turns
//! a raw-triple stream into scored facts grouped into batches.

use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bpr::BprModels;
use crate::error::{open_file, Error, Result};
use crate::kg::{is_type_predicate, FactInsert, Graph, KgStore, Namespace, Origin, Provenance};
use crate::linker::{link_or_create, LinkerConfig};
use crate::predmap::{normalize_phrase, RuleSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub timestamp: i64,
    pub source_id: String,
    pub subject_mention: String,
    pub predicate_phrase: String,
    pub object_mention: String,
    pub context_tokens: Vec<String>,
}

/// A closed stream quantum: the seqs of facts appended while it was open.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub index: u64,
    pub facts: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BatchBy {
    Count,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PredicatePolicy {
    Create,
    Drop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct IngestConfig {
    pub batch_size: usize,
    pub batch_by: BatchBy,
    pub bucket_seconds: i64,
    pub extracted_predicate_policy: PredicatePolicy,
    /// Extracted facts scoring below this are rejected.
    pub min_accept_confidence: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            batch_size: 10,
            batch_by: BatchBy::Count,
            bucket_seconds: 86_400,
            extracted_predicate_policy: PredicatePolicy::Create,
            min_accept_confidence: 0.0,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidConfig {
                key: format!("ingest.{key}"),
                reason: reason.into(),
            })
        };
        if self.batch_size == 0 {
            return bad("batchSize", "must be >= 1");
        }
        if self.bucket_seconds <= 0 {
            return bad("bucketSeconds", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.min_accept_confidence) {
            return bad("minAcceptConfidence", "must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CuratedLoadReport {
    pub admitted: usize,
    pub skipped: usize,
    pub skipped_lines: Vec<usize>,
}

type CuratedRow<'a> = (&'a str, &'a str, &'a str, f64);

/// Parses one curated TSV line: `subject\tpredicate\tobject[\tconfidence]`.
/// Returns `None` for comments, blanks and malformed lines.
fn parse_curated_line(line: &str) -> Option<std::result::Result<CuratedRow<'_>, ()>> {
    if line.trim().is_empty() || line.starts_with('#') {
        return None;
    }
    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
    let parsed = match cols.as_slice() {
        [s, p, o] => Some((*s, *p, *o, 1.0)),
        [s, p, o, c] => c.parse::<f64>().ok().map(|c| (*s, *p, *o, c)),
        _ => None,
    };
    Some(match parsed {
        Some((s, p, o, c)) if !s.is_empty() && !p.is_empty() && !o.is_empty() && (0.0..=1.0).contains(&c) => {
            Ok((s, p, o, c))
        }
        _ => Err(()),
    })
}

/// Loads a curated KB TSV into the store. Type-assertion predicates
/// (`type`, `isA`, ...) also add the object label to the subject's types.
pub fn load_curated_kb(store: &mut KgStore, path: &Path) -> Result<CuratedLoadReport> {
    let reader = BufReader::new(open_file(path)?);
    let mut report = CuratedLoadReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        match parse_curated_line(&line) {
            None => {}
            Some(Err(())) => {
                report.skipped += 1;
                report.skipped_lines.push(i + 1);
            }
            Some(Ok((s, p, o, c))) => {
                let wrap = |e: Error| Error::Pipeline { line: i + 1, source: Box::new(e) };
                let sid = store.create_entity(s, &[], Origin::Curated).map_err(wrap)?;
                let oid = store.create_entity(o, &[], Origin::Curated).map_err(wrap)?;
                let pid = store.register_predicate(p, Namespace::Ontology).map_err(wrap)?;
                if is_type_predicate(p) {
                    store.add_type(sid, o).map_err(wrap)?;
                }
                store.add_fact(sid, pid, oid, c, 0, Provenance::Curated).map_err(wrap)?;
                report.admitted += 1;
            }
        }
    }
    if report.admitted == 0 {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(report)
}

/// Epoch seconds for an integer or a `YYYY-MM-DD` date (midnight UTC).
fn parse_timestamp(v: &Value) -> std::result::Result<i64, String> {
    match v {
        Value::Number(n) => n.as_i64().ok_or_else(|| format!("ts {n} is not an integer")),
        Value::String(s) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp())
            .map_err(|e| format!("ts {s:?}: {e}")),
        other => Err(format!("ts must be an integer or YYYY-MM-DD string, got {other}")),
    }
}

/// Parses one JSON-lines raw triple. `line_no` is only used for errors.
pub fn parse_raw_triple_line(line: &str, line_no: usize) -> Result<RawTriple> {
    let obj: Value = serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
    let Value::Object(map) = obj else {
        return Err(Error::parse(line_no, "expected a JSON object"));
    };
    let string_field = |key: &str, non_empty: bool| -> Result<String> {
        match map.get(key) {
            None => Err(Error::parse(line_no, format!("missing {key}"))),
            Some(Value::String(s)) if non_empty && s.trim().is_empty() => {
                Err(Error::parse(line_no, format!("{key} is empty")))
            }
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(_) => Err(Error::parse(line_no, format!("{key} must be a string"))),
        }
    };
    let timestamp = match map.get("ts") {
        None => return Err(Error::parse(line_no, "missing ts")),
        Some(v) => parse_timestamp(v).map_err(|r| Error::parse(line_no, r))?,
    };
    let context_tokens = match map.get("ctx") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                _ => Err(Error::parse(line_no, "ctx must be an array of strings")),
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(Error::parse(line_no, "ctx must be an array of strings")),
    };
    Ok(RawTriple {
        timestamp,
        source_id: string_field("source", false)?,
        subject_mention: string_field("subj", true)?,
        predicate_phrase: string_field("pred", true)?,
        object_mention: string_field("obj", true)?,
        context_tokens,
    })
}

/// Parses every non-blank line of a JSON-lines raw triple file.
pub fn read_raw_triples(path: &Path) -> Result<Vec<RawTriple>> {
    let reader = BufReader::new(open_file(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_raw_triple_line(&line, i + 1)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestReport {
    pub admitted: usize,
    pub new_entities: usize,
    pub unmapped_predicates: usize,
    pub rejected: usize,
    pub batches: usize,
    /// Duplicates folded into an existing fact (no new seq).
    pub merged: usize,
}

/// Components the pipeline reads or writes while ingesting.
pub struct Pipeline<'a> {
    pub store: &'a mut KgStore,
    pub rules: &'a RuleSet,
    pub linker: &'a LinkerConfig,
    pub models: &'a BprModels,
    pub prior: f64,
    pub config: &'a IngestConfig,
    /// Index assigned to the next closed batch; advanced by the pipeline.
    pub next_batch: &'a mut u64,
}

struct OpenBatch {
    facts: Vec<u64>,
    bucket: Option<i64>,
}

impl Pipeline<'_> {
    fn close(&mut self, open: &mut OpenBatch, report: &mut IngestReport, sink: &mut dyn FnMut(Batch, &Graph)) {
        if open.facts.is_empty() {
            return;
        }
        let batch = Batch {
            index: *self.next_batch,
            facts: std::mem::take(&mut open.facts),
        };
        *self.next_batch += 1;
        open.bucket = None;
        report.batches += 1;
        sink(batch, self.store.graph());
    }

    fn process(&mut self, t: &RawTriple, open: &mut OpenBatch, report: &mut IngestReport, sink: &mut dyn FnMut(Batch, &Graph)) -> Result<()> {
        let norm = normalize_phrase(&t.predicate_phrase)?;
        let predicate = match self.rules.map_normalized(&norm) {
            Some(p) => p,
            None => {
                report.unmapped_predicates += 1;
                match self.config.extracted_predicate_policy {
                    PredicatePolicy::Drop => {
                        report.rejected += 1;
                        return Ok(());
                    }
                    PredicatePolicy::Create => self.store.register_predicate(&norm.to_string(), Namespace::Extracted)?,
                }
            }
        };
        let subj = link_or_create(self.store, &t.subject_mention, &t.context_tokens, self.linker)?;
        report.new_entities += usize::from(subj.created);
        let obj = link_or_create(self.store, &t.object_mention, &t.context_tokens, self.linker)?;
        report.new_entities += usize::from(obj.created);
        let (Some(s), Some(o)) = (subj.resolved, obj.resolved) else {
            unreachable!("link_or_create always resolves")
        };
        let confidence = self.models.score_triple(s, predicate, o, self.prior).value;
        if confidence < self.config.min_accept_confidence {
            report.rejected += 1;
            return Ok(());
        }
        if self.config.batch_by == BatchBy::Time {
            let bucket = t.timestamp.div_euclid(self.config.bucket_seconds);
            if open.bucket.is_some_and(|b| b != bucket) {
                self.close(open, report, sink);
            }
            open.bucket = Some(bucket);
        }
        match self.store.add_fact(s, predicate, o, confidence, t.timestamp, Provenance::Extracted(t.source_id.clone()))? {
            FactInsert::Appended(seq) => {
                report.admitted += 1;
                open.facts.push(seq);
            }
            FactInsert::Merged(_) => report.merged += 1,
        }
        if self.config.batch_by == BatchBy::Count && open.facts.len() >= self.config.batch_size {
            self.close(open, report, sink);
        }
        Ok(())
    }

    /// Runs raw triples through predicate mapping, entity linking, scoring
    /// and insertion, closing batches as configured. The trailing partial
    /// batch is closed at the end.
    pub fn ingest_triples<'t>(
        &mut self,
        triples: impl IntoIterator<Item = (usize, &'t RawTriple)>,
        sink: &mut dyn FnMut(Batch, &Graph),
    ) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        let mut open = OpenBatch {
            facts: Vec::new(),
            bucket: None,
        };
        for (line, t) in triples {
            if let Err(e) = self.process(t, &mut open, &mut report, sink) {
                self.close(&mut open, &mut report, sink);
                return Err(Error::Pipeline { line, source: Box::new(e) });
            }
        }
        self.close(&mut open, &mut report, sink);
        Ok(report)
    }

    /// Reads JSON-lines raw triples from `reader` and ingests them.
    /// A parse error aborts before any triple is processed.
    pub fn ingest_reader<R: BufRead>(&mut self, reader: R, sink: &mut dyn FnMut(Batch, &Graph)) -> Result<IngestReport> {
        let mut triples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            triples.push((i + 1, parse_raw_triple_line(&line, i + 1)?));
        }
        self.ingest_triples(triples.iter().map(|(l, t)| (*l, t)), sink)
    }

    pub fn ingest_stream(&mut self, path: &Path, sink: &mut dyn FnMut(Batch, &Graph)) -> Result<IngestReport> {
        let reader = BufReader::new(open_file(path)?);
        self.ingest_reader(reader, sink)
    }
}
