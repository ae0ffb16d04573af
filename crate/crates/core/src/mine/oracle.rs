//! From-scratch mining: pattern growth over embeddings found by
//! backtracking search.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::Result;

use super::canonical::Shape;
use super::{MinerEdge, Pattern, PatternEdge};

/// Simple labeled digraph of the distinct window edges.
pub(crate) struct DataGraph {
    labels: Vec<String>,
    edges: Vec<(usize, String, usize)>,
    pairs: HashMap<(usize, usize), Vec<String>>,
    incident: Vec<Vec<usize>>,
}

impl DataGraph {
    pub fn build(window: &[MinerEdge]) -> Self {
        let mut ids: HashMap<(u32, &str), usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut distinct = BTreeSet::new();
        for e in window {
            let mut ends = [0usize; 2];
            for (slot, (id, label)) in [(e.src, e.src_label.as_str()), (e.dst, e.dst_label.as_str())]
                .into_iter()
                .enumerate()
            {
                ends[slot] = *ids.entry((id, label)).or_insert_with(|| {
                    labels.push(label.to_string());
                    labels.len() - 1
                });
            }
            let [s, d] = ends;
            if s != d {
                distinct.insert((s, e.pred.clone(), d));
            }
        }
        let mut g = DataGraph {
            incident: vec![Vec::new(); labels.len()],
            labels,
            edges: Vec::new(),
            pairs: HashMap::new(),
        };
        for (s, p, d) in distinct {
            let i = g.edges.len();
            g.incident[s].push(i);
            g.incident[d].push(i);
            g.pairs.entry((s, d)).or_default().push(p.clone());
            g.edges.push((s, p, d));
        }
        g
    }

    fn has_edge(&self, s: usize, p: &str, d: usize) -> bool {
        self.pairs
            .get(&(s, d))
            .is_some_and(|ps| ps.iter().any(|x| x == p))
    }
}

/// Every injective, label- and direction-preserving mapping of pattern
/// variables onto data vertices.
pub(crate) fn embeddings(shape: &Shape, g: &DataGraph) -> Vec<Vec<usize>> {
    let n = shape.var_count();
    // BFS variable order; each later variable has an anchor edge back to an
    // earlier one.
    let mut order = vec![0usize];
    let mut anchor: Vec<Option<usize>> = vec![None; n];
    let mut placed = vec![false; n];
    placed[0] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for (i, (s, _, d)) in shape.edges.iter().enumerate() {
            for (a, b) in [(*s, *d), (*d, *s)] {
                if a == v && !placed[b] {
                    placed[b] = true;
                    anchor[b] = Some(i);
                    order.push(b);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut map = vec![usize::MAX; n];
    let mut used = HashSet::new();
    extend(shape, g, &order, &anchor, 0, &mut map, &mut used, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    shape: &Shape,
    g: &DataGraph,
    order: &[usize],
    anchor: &[Option<usize>],
    depth: usize,
    map: &mut Vec<usize>,
    used: &mut HashSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == order.len() {
        out.push(map.clone());
        return;
    }
    let v = order[depth];
    let candidates: Vec<usize> = match anchor[v] {
        None => (0..g.labels.len()).collect(),
        Some(i) => {
            let (s, p, d) = &shape.edges[i];
            let (known, outgoing) = if *d == v { (map[*s], true) } else { (map[*d], false) };
            g.incident[known]
                .iter()
                .filter_map(|&ei| {
                    let (es, ep, ed) = &g.edges[ei];
                    if ep != p {
                        return None;
                    }
                    if outgoing && *es == known {
                        Some(*ed)
                    } else if !outgoing && *ed == known {
                        Some(*es)
                    } else {
                        None
                    }
                })
                .collect()
        }
    };
    for c in candidates {
        if g.labels[c] != shape.labels[v] || used.contains(&c) {
            continue;
        }
        map[v] = c;
        let consistent = shape.edges.iter().all(|(s, p, d)| {
            let (ms, md) = (map[*s], map[*d]);
            if (*s != v && *d != v) || ms == usize::MAX || md == usize::MAX {
                return true;
            }
            g.has_edge(ms, p, md)
        });
        if consistent {
            used.insert(c);
            extend(shape, g, order, anchor, depth + 1, map, used, out);
            used.remove(&c);
        }
        map[v] = usize::MAX;
    }
}

/// Minimum over variables of the number of distinct vertices the variable
/// takes across all embeddings.
pub(crate) fn mni(n: usize, embeddings: &[Vec<usize>]) -> usize {
    if embeddings.is_empty() {
        return 0;
    }
    (0..n)
        .map(|v| embeddings.iter().map(|m| m[v]).collect::<HashSet<_>>().len())
        .min()
        .unwrap_or(0)
}

/// MNI support of `pattern` in the window.
pub fn mni_support(pattern: &[PatternEdge], window: &[MinerEdge]) -> Result<usize> {
    let shape = Shape::from_pattern_edges(pattern, usize::MAX)?;
    let g = DataGraph::build(window);
    Ok(mni(shape.var_count(), &embeddings(&shape, &g)))
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Target {
    Var(usize),
    New(String),
}

/// Codes of all one-edge extensions of `shape` that occur in the data.
fn extensions(shape: &Shape, g: &DataGraph, embs: &[Vec<usize>]) -> BTreeMap<String, Shape> {
    let mut cache: HashMap<(usize, bool, String, Target), Option<String>> = HashMap::new();
    let mut out = BTreeMap::new();
    for m in embs {
        for (v, &node) in m.iter().enumerate() {
            for &ei in &g.incident[node] {
                let (s, p, d) = &g.edges[ei];
                let (outgoing, other) = if *s == node { (true, *d) } else { (false, *s) };
                let target = match m.iter().position(|&x| x == other) {
                    Some(u) => Target::Var(u),
                    None => Target::New(g.labels[other].clone()),
                };
                let key = (v, outgoing, p.clone(), target.clone());
                if cache.contains_key(&key) {
                    continue;
                }
                let mut ext = shape.clone();
                let u = match target {
                    Target::Var(u) => u,
                    Target::New(label) => {
                        ext.labels.push(label);
                        ext.labels.len() - 1
                    }
                };
                let edge = if outgoing { (v, p.clone(), u) } else { (u, p.clone(), v) };
                let code = if ext.edges.contains(&edge) {
                    None
                } else {
                    ext.edges.push(edge);
                    let c = ext.canonicalize();
                    out.entry(c.code.clone()).or_insert(c.shape);
                    Some(c.code)
                };
                cache.insert(key, code);
            }
        }
    }
    out
}

/// Closed frequent connected patterns with 1..=max_edges edges, sorted by
/// code.
pub fn mine_window(window: &[MinerEdge], min_sup: usize, max_edges: usize) -> Vec<Pattern> {
    let g = DataGraph::build(window);
    let mut level: BTreeMap<String, Shape> = BTreeMap::new();
    for (s, p, d) in &g.edges {
        let shape = Shape {
            labels: vec![g.labels[*s].clone(), g.labels[*d].clone()],
            edges: vec![(0, p.clone(), 1)],
        };
        let c = shape.canonicalize();
        level.entry(c.code).or_insert(c.shape);
    }
    let mut support: HashMap<String, usize> = HashMap::new();
    let mut frequent: BTreeMap<String, (Shape, usize)> = BTreeMap::new();
    let mut children: HashMap<String, BTreeSet<String>> = HashMap::new();
    for size in 1..=max_edges {
        let mut next = BTreeMap::new();
        for (code, shape) in level {
            let embs = embeddings(&shape, &g);
            let sup = mni(shape.var_count(), &embs);
            support.insert(code.clone(), sup);
            if sup < min_sup {
                continue;
            }
            if size < max_edges {
                let ext = extensions(&shape, &g, &embs);
                children.insert(code.clone(), ext.keys().cloned().collect());
                next.extend(ext);
            }
            frequent.insert(code, (shape, sup));
        }
        level = next;
    }
    frequent
        .into_iter()
        .filter(|(code, (_, sup))| {
            children
                .get(code)
                .is_none_or(|cs| cs.iter().all(|c| support.get(c) != Some(sup)))
        })
        .map(|(code, (shape, sup))| Pattern {
            code,
            edges: shape.to_pattern_edges(),
            support: sup,
            closed: true,
        })
        .collect()
}
