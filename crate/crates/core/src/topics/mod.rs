//! Entity topic distributions (collapsed Gibbs LDA) and topic-coherent path
//! search between entities.

mod paths;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{open_file, Error, Result};
use crate::kg::{EntityId, Graph};

pub use paths::{
    beam_frontiers, coherence, find_paths, CoherenceMode, ConstraintMode, PathQuery, PathStep, QaConfig,
    ScoredPath,
};

pub const FORMAT_NAME: &str = "nous-topics";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub vocab: Vec<String>,
    /// K rows over the vocabulary.
    pub phi: Vec<Vec<f64>>,
    pub theta: BTreeMap<EntityId, Vec<f64>>,
}

impl TopicModel {
    /// A model with no documents: every entity falls back to uniform.
    pub fn untrained(k: usize) -> Self {
        TopicModel {
            k: k.max(1),
            alpha: 0.0,
            beta: 0.0,
            iterations: 0,
            seed: 0,
            vocab: Vec::new(),
            phi: Vec::new(),
            theta: BTreeMap::new(),
        }
    }

    pub fn is_trained(&self) -> bool {
        !self.theta.is_empty()
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.k as f64; self.k]
    }

    pub fn to_json(&self, graph: &Graph) -> serde_json::Value {
        let theta = self
            .theta
            .iter()
            .map(|(e, row)| (graph.entity_label(*e).to_string(), row.clone()))
            .collect();
        serde_json::to_value(StoredTopics {
            format: FORMAT_NAME.into(),
            format_version: FORMAT_VERSION,
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            seed: self.seed,
            vocab: self.vocab.clone(),
            phi: self.phi.clone(),
            theta,
        })
        .expect("topics serialize")
    }

    /// Loads a stored model; θ rows for labels unknown to `graph` are
    /// dropped.
    pub fn from_json(graph: &Graph, value: serde_json::Value) -> Result<Self> {
        let s: StoredTopics = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        if s.format != FORMAT_NAME || s.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported topic file {} v{}",
                s.format, s.format_version
            )));
        }
        let bad_row = |row: &Vec<f64>, len: usize| row.len() != len || row.iter().any(|x| !x.is_finite());
        if s.k == 0 || s.phi.len() != s.k || s.phi.iter().any(|r| bad_row(r, s.vocab.len())) {
            return Err(Error::Format("phi shape does not match k and vocab".into()));
        }
        let mut theta = BTreeMap::new();
        for (label, row) in s.theta {
            if bad_row(&row, s.k) {
                return Err(Error::Format(format!("bad theta row for {label}")));
            }
            if let Some(id) = graph.entity_by_label(&label) {
                theta.insert(id, row);
            }
        }
        Ok(TopicModel {
            k: s.k,
            alpha: s.alpha,
            beta: s.beta,
            iterations: s.iterations,
            seed: s.seed,
            vocab: s.vocab,
            phi: s.phi,
            theta,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoredTopics {
    format: String,
    format_version: u32,
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
    vocab: Vec<String>,
    phi: Vec<Vec<f64>>,
    theta: BTreeMap<String, Vec<f64>>,
}

/// Collapsed Gibbs sampling. Documents iterate in entity order and tokens
/// in their given order, so a fixed seed fixes the whole chain.
pub fn train_lda(
    docs: &BTreeMap<EntityId, Vec<String>>,
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<TopicModel> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 topics, got {k}")));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument("alpha and beta must be positive".into()));
    }
    let docs: Vec<(EntityId, &Vec<String>)> = docs
        .iter()
        .filter(|(_, toks)| !toks.is_empty())
        .map(|(e, t)| (*e, t))
        .collect();
    if docs.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if docs.len() < 2 {
        return Err(Error::TooFewDocs(docs.len()));
    }
    let vocab: Vec<String> = docs
        .iter()
        .flat_map(|(_, t)| t.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let v = vocab.len();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|(_, t)| t.iter().map(|w| vocab.binary_search(w).expect("in vocab")).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dk = vec![vec![0usize; k]; docs.len()];
    let mut n_kw = vec![vec![0usize; v]; k];
    let mut n_k = vec![0usize; k];
    let mut z: Vec<Vec<usize>> = words
        .iter()
        .enumerate()
        .map(|(d, ws)| {
            ws.iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    n_dk[d][t] += 1;
                    n_kw[t][w] += 1;
                    n_k[t] += 1;
                    t
                })
                .collect()
        })
        .collect();

    let vbeta = v as f64 * beta;
    let mut p = vec![0.0f64; k];
    for _ in 0..iterations {
        for (d, ws) in words.iter().enumerate() {
            for (i, &w) in ws.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta) / (n_k[t] as f64 + vbeta);
                    p[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = p.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let kalpha = k as f64 * alpha;
    let theta = docs
        .iter()
        .enumerate()
        .map(|(d, (e, _))| {
            let n_d = words[d].len() as f64;
            let row = (0..k).map(|t| (n_dk[d][t] as f64 + alpha) / (n_d + kalpha)).collect();
            (*e, normalize(row))
        })
        .collect();
    let phi = (0..k)
        .map(|t| normalize((0..v).map(|w| (n_kw[t][w] as f64 + beta) / (n_k[t] as f64 + vbeta)).collect()))
        .collect();
    Ok(TopicModel {
        k,
        alpha,
        beta,
        iterations,
        seed,
        vocab,
        phi,
        theta,
    })
}

/// Rescales so the components sum to 1 as closely as floating point allows.
fn normalize(mut row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|x| *x /= s);
    }
    row
}

/// Jensen-Shannon divergence in nats, within [0, ln 2].
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            kl_p += a * (a / m).ln();
        }
        if b > 0.0 {
            kl_q += b * (b / m).ln();
        }
    }
    Ok((0.5 * kl_p + 0.5 * kl_q).clamp(0.0, std::f64::consts::LN_2))
}

/// θ of the entity's own document, else the renormalized mean over
/// neighbors that have one, else uniform.
pub fn entity_topic(model: &TopicModel, graph: &Graph, e: EntityId) -> Vec<f64> {
    if let Some(row) = model.theta.get(&e) {
        return row.clone();
    }
    let neighbors: BTreeSet<EntityId> = graph
        .incident(e)
        .map(|f| if f.subject == e { f.object } else { f.subject })
        .filter(|n| *n != e)
        .collect();
    let rows: Vec<&Vec<f64>> = neighbors.iter().filter_map(|n| model.theta.get(n)).collect();
    if rows.is_empty() {
        return model.uniform();
    }
    let mut mean = vec![0.0; model.k];
    for row in &rows {
        for (m, x) in mean.iter_mut().zip(row.iter()) {
            *m += x;
        }
    }
    normalize(mean)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocLine {
    entity: String,
    tokens: Vec<String>,
}

/// Reads JSON-lines entity documents. Tokens are lowercased; blank lines
/// are skipped.
pub fn read_entity_docs(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let reader = BufReader::new(open_file(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocLine = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let tokens = doc
            .tokens
            .iter()
            .map(|t| t.trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        out.push((doc.entity, tokens));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KgStore, Namespace, Origin, Provenance};

    fn docs(rows: &[(u32, &[&str])]) -> BTreeMap<EntityId, Vec<String>> {
        rows.iter()
            .map(|(e, t)| (EntityId(*e), t.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn jsd_reference_values() {
        assert_eq!(js_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - ln2).abs() < 1e-12);
        let got = js_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        let want = 0.5 * (1.0f64 / 0.75).ln() + 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln());
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.2157).abs() < 1e-4);
        assert!(matches!(js_divergence(&[1.0], &[0.5, 0.5]), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn lda_rows_normalized_and_deterministic() {
        let d = docs(&[(0, &["a", "b", "a"]), (1, &["c", "d"]), (2, &["a", "d"])]);
        let m1 = train_lda(&d, 3, 0.5, 0.1, 30, 7).unwrap();
        let m2 = train_lda(&d, 3, 0.5, 0.1, 30, 7).unwrap();
        assert_eq!(m1, m2);
        for row in m1.theta.values().chain(m1.phi.iter()) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(m1.vocab, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn lda_preconditions() {
        assert!(matches!(
            train_lda(&docs(&[(0, &["a"])]), 2, 0.5, 0.1, 1, 0),
            Err(Error::TooFewDocs(1))
        ));
        assert!(matches!(
            train_lda(&docs(&[(0, &[]), (1, &[])]), 2, 0.5, 0.1, 1, 0),
            Err(Error::EmptyVocabulary)
        ));
        assert!(train_lda(&docs(&[(0, &["a"]), (1, &["b"])]), 1, 0.5, 0.1, 1, 0).is_err());
    }

    #[test]
    fn fallback_topics() {
        let mut st = KgStore::new();
        let a = st.create_entity("a", &[], Origin::Curated).unwrap();
        let b = st.create_entity("b", &[], Origin::Curated).unwrap();
        let c = st.create_entity("c", &[], Origin::Curated).unwrap();
        let lone = st.create_entity("lone", &[], Origin::Curated).unwrap();
        let r = st.register_predicate("r", Namespace::Ontology).unwrap();
        st.add_fact(c, r, a, 1.0, 0, Provenance::Curated).unwrap();
        st.add_fact(b, r, c, 1.0, 0, Provenance::Curated).unwrap();
        let mut m = TopicModel::untrained(2);
        m.theta.insert(a, vec![1.0, 0.0]);
        m.theta.insert(b, vec![0.0, 1.0]);
        let g = st.graph();
        assert_eq!(entity_topic(&m, g, a), vec![1.0, 0.0]);
        assert_eq!(entity_topic(&m, g, c), vec![0.5, 0.5]);
        assert_eq!(entity_topic(&m, g, lone), vec![0.5, 0.5]);
    }

    #[test]
    fn persistence_round_trip_is_exact() {
        let mut st = KgStore::new();
        let a = st.create_entity("alpha", &[], Origin::Curated).unwrap();
        let b = st.create_entity("beta", &[], Origin::Curated).unwrap();
        let mut d = BTreeMap::new();
        d.insert(a, vec!["x".to_string(), "y".to_string()]);
        d.insert(b, vec!["y".to_string(), "z".to_string()]);
        let m = train_lda(&d, 2, 0.1, 0.01, 20, 3).unwrap();
        let text = serde_json::to_string(&m.to_json(st.graph())).unwrap();
        let back = TopicModel::from_json(st.graph(), serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
