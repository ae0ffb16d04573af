//! Incremental maintenance of the closed frequent set.
//!
//! Every connected edge subset of the live graph with at most `maxEdges`
//! edges is indexed as an image of its pattern. Arriving edges add the
//! subsets that contain them; departing edges drop every image that uses
//! them. Each pattern keeps, per automorphism orbit of its variables, a
//! count of the vertices that orbit maps to, so MNI support is a minimum
//! over those maps. Only patterns whose image sets changed, plus their
//! one-edge-smaller parents, have support or closedness re-evaluated. A
//! pattern shadowed by a larger one of equal support comes back as soon as
//! the larger one loses support, since its own images were never dropped.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::canonical::Shape;
use super::{MinerConfig, MinerEdge, Pattern};

type NodeIx = u32;
type EdgeIx = u64;
type ImageKey = Vec<EdgeIx>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowSpan {
    pub first_batch: u64,
    pub last_batch: u64,
}

/// Result of one [`WindowState::advance`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub added: Vec<Pattern>,
    pub removed: Vec<Pattern>,
    pub current: Vec<Pattern>,
    pub window: Option<WindowSpan>,
}

struct LiveEdge {
    src: NodeIx,
    pred: String,
    dst: NodeIx,
    count: usize,
}

struct Entry {
    shape: Shape,
    orbit_slot: Vec<usize>,
    parents: BTreeSet<String>,
    images: HashMap<ImageKey, Vec<NodeIx>>,
    counts: Vec<HashMap<NodeIx, usize>>,
    support: usize,
}

impl Entry {
    fn new(shape: Shape) -> Self {
        let orbits = shape.orbits();
        let reps: Vec<usize> = orbits.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let orbit_slot = orbits
            .iter()
            .map(|o| reps.binary_search(o).expect("orbit rep"))
            .collect();
        Entry {
            parents: shape.parent_codes(),
            counts: vec![HashMap::new(); reps.len()],
            shape,
            orbit_slot,
            images: HashMap::new(),
            support: 0,
        }
    }

    fn add_image(&mut self, key: ImageKey, map: Vec<NodeIx>) {
        for (v, node) in map.iter().enumerate() {
            *self.counts[self.orbit_slot[v]].entry(*node).or_insert(0) += 1;
        }
        self.images.insert(key, map);
    }

    fn remove_image(&mut self, key: &ImageKey) {
        let Some(map) = self.images.remove(key) else {
            return;
        };
        for (v, node) in map.iter().enumerate() {
            let slot = &mut self.counts[self.orbit_slot[v]];
            if let Some(c) = slot.get_mut(node) {
                *c -= 1;
                if *c == 0 {
                    slot.remove(node);
                }
            }
        }
    }

    fn refresh_support(&mut self) {
        self.support = self.counts.iter().map(HashMap::len).min().unwrap_or(0);
    }
}

/// Sliding window of batches with its closed frequent pattern set.
pub struct WindowState {
    config: MinerConfig,
    batches: VecDeque<(u64, Vec<MinerEdge>)>,
    nodes: HashMap<(u32, String), NodeIx>,
    node_labels: Vec<String>,
    edge_ix: HashMap<(NodeIx, String, NodeIx), EdgeIx>,
    edges: HashMap<EdgeIx, LiveEdge>,
    incident: HashMap<NodeIx, BTreeSet<EdgeIx>>,
    next_edge: EdgeIx,
    entries: HashMap<String, Entry>,
    children: HashMap<String, BTreeSet<String>>,
    edge_images: HashMap<EdgeIx, Vec<(String, ImageKey)>>,
    current: BTreeMap<String, Pattern>,
}

impl WindowState {
    pub fn new(config: MinerConfig) -> Self {
        WindowState {
            config,
            batches: VecDeque::new(),
            nodes: HashMap::new(),
            node_labels: Vec::new(),
            edge_ix: HashMap::new(),
            edges: HashMap::new(),
            incident: HashMap::new(),
            next_edge: 0,
            entries: HashMap::new(),
            children: HashMap::new(),
            edge_images: HashMap::new(),
            current: BTreeMap::new(),
        }
    }

    /// Rebuilds a state by replaying `batches` in order.
    pub fn from_batches(config: MinerConfig, batches: Vec<(u64, Vec<MinerEdge>)>) -> (Self, Emission) {
        let mut state = WindowState::new(config);
        let mut last = Emission::default();
        for (index, edges) in batches {
            last = state.push_batch(index, edges);
        }
        (state, last)
    }

    pub fn config(&self) -> &MinerConfig {
        &self.config
    }

    pub fn batches(&self) -> impl Iterator<Item = &(u64, Vec<MinerEdge>)> {
        self.batches.iter()
    }

    /// All edges currently in the window, batch by batch.
    pub fn live_edges(&self) -> Vec<MinerEdge> {
        self.batches.iter().flat_map(|(_, b)| b.iter().cloned()).collect()
    }

    pub fn span(&self) -> Option<WindowSpan> {
        Some(WindowSpan {
            first_batch: self.batches.front()?.0,
            last_batch: self.batches.back()?.0,
        })
    }

    pub fn current(&self) -> Vec<Pattern> {
        self.current.values().cloned().collect()
    }

    /// Number of indexed patterns, frequent or not.
    pub fn indexed_patterns(&self) -> usize {
        self.entries.len()
    }

    /// Pushes a batch numbered one past the newest.
    pub fn advance(&mut self, edges: Vec<MinerEdge>) -> Emission {
        let index = self.batches.back().map_or(0, |(i, _)| i + 1);
        self.push_batch(index, edges)
    }

    pub fn push_batch(&mut self, index: u64, edges: Vec<MinerEdge>) -> Emission {
        let mut delta: BTreeMap<(NodeIx, String, NodeIx), i64> = BTreeMap::new();
        for e in &edges {
            let s = self.node(e.src, &e.src_label);
            let d = self.node(e.dst, &e.dst_label);
            if s != d {
                *delta.entry((s, e.pred.clone(), d)).or_insert(0) += 1;
            }
        }
        self.batches.push_back((index, edges));
        if self.batches.len() > self.config.window_batches {
            let (_, old) = self.batches.pop_front().expect("non-empty");
            for e in &old {
                let s = self.nodes[&(e.src, e.src_label.clone())];
                let d = self.nodes[&(e.dst, e.dst_label.clone())];
                if s != d {
                    *delta.entry((s, e.pred.clone(), d)).or_insert(0) -= 1;
                }
            }
        }

        let mut added = Vec::new();
        let mut removed = Vec::new();
        for (key, d) in delta {
            match self.edge_ix.get(&key) {
                Some(&ix) => {
                    let edge = self.edges.get_mut(&ix).expect("live edge");
                    let next = edge.count as i64 + d;
                    if next <= 0 {
                        removed.push(ix);
                    } else {
                        edge.count = next as usize;
                    }
                }
                None if d > 0 => added.push((key, d as usize)),
                None => {}
            }
        }

        let mut touched = HashSet::new();
        for ix in removed {
            self.remove_edge(ix, &mut touched);
        }
        let mut fresh = Vec::new();
        for ((s, pred, d), count) in added {
            let ix = self.next_edge;
            self.next_edge += 1;
            self.edge_ix.insert((s, pred.clone(), d), ix);
            self.edges.insert(ix, LiveEdge { src: s, pred, dst: d, count });
            self.incident.entry(s).or_default().insert(ix);
            self.incident.entry(d).or_default().insert(ix);
            fresh.push(ix);
        }
        self.index_new_subsets(&fresh, &mut touched);
        self.settle(touched)
    }

    fn node(&mut self, id: u32, label: &str) -> NodeIx {
        if let Some(&n) = self.nodes.get(&(id, label.to_string())) {
            return n;
        }
        let n = self.node_labels.len() as NodeIx;
        self.node_labels.push(label.to_string());
        self.nodes.insert((id, label.to_string()), n);
        n
    }

    fn remove_edge(&mut self, ix: EdgeIx, touched: &mut HashSet<String>) {
        for (code, key) in self.edge_images.remove(&ix).unwrap_or_default() {
            if let Some(entry) = self.entries.get_mut(&code) {
                entry.remove_image(&key);
            }
            for other in key.iter().filter(|e| **e != ix) {
                if let Some(list) = self.edge_images.get_mut(other) {
                    list.retain(|(c, k)| !(c == &code && k == &key));
                }
            }
            touched.insert(code);
        }
        let edge = self.edges.remove(&ix).expect("live edge");
        self.edge_ix.remove(&(edge.src, edge.pred, edge.dst));
        for n in [edge.src, edge.dst] {
            if let Some(set) = self.incident.get_mut(&n) {
                set.remove(&ix);
                if set.is_empty() {
                    self.incident.remove(&n);
                }
            }
        }
    }

    /// Indexes every connected edge subset (up to `maxEdges`) that contains
    /// at least one fresh edge.
    fn index_new_subsets(&mut self, fresh: &[EdgeIx], touched: &mut HashSet<String>) {
        let max = self.config.max_edges;
        let mut seen: HashSet<ImageKey> = HashSet::new();
        let mut frontier: Vec<ImageKey> = Vec::new();
        for &e in fresh {
            if seen.insert(vec![e]) {
                frontier.push(vec![e]);
            }
        }
        while let Some(set) = frontier.pop() {
            self.index_image(&set, touched);
            if set.len() >= max {
                continue;
            }
            let mut near = BTreeSet::new();
            for e in &set {
                let edge = &self.edges[e];
                for n in [edge.src, edge.dst] {
                    near.extend(self.incident[&n].iter().copied());
                }
            }
            for x in near {
                if set.contains(&x) {
                    continue;
                }
                let mut next = set.clone();
                next.push(x);
                next.sort_unstable();
                if seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
    }

    fn index_image(&mut self, key: &ImageKey, touched: &mut HashSet<String>) {
        let mut vars: Vec<NodeIx> = Vec::new();
        let var_of = |n: NodeIx, vars: &mut Vec<NodeIx>| match vars.iter().position(|x| *x == n) {
            Some(v) => v,
            None => {
                vars.push(n);
                vars.len() - 1
            }
        };
        let mut shape_edges = Vec::with_capacity(key.len());
        for e in key {
            let edge = &self.edges[e];
            let s = var_of(edge.src, &mut vars);
            let d = var_of(edge.dst, &mut vars);
            shape_edges.push((s, edge.pred.clone(), d));
        }
        let shape = Shape {
            labels: vars.iter().map(|n| self.node_labels[*n as usize].clone()).collect(),
            edges: shape_edges,
        };
        let canon = shape.canonicalize();
        let mut map = vec![0; vars.len()];
        for (old, node) in vars.iter().enumerate() {
            map[canon.perm[old]] = *node;
        }
        let code = canon.code;
        if !self.entries.contains_key(&code) {
            let entry = Entry::new(canon.shape);
            for p in &entry.parents {
                self.children.entry(p.clone()).or_default().insert(code.clone());
            }
            self.entries.insert(code.clone(), entry);
        }
        self.entries
            .get_mut(&code)
            .expect("entry")
            .add_image(key.clone(), map);
        for e in key {
            self.edge_images
                .entry(*e)
                .or_default()
                .push((code.clone(), key.clone()));
        }
        touched.insert(code);
    }

    /// Refreshes supports of touched patterns, drops empty ones, and
    /// re-evaluates membership of touched patterns and their parents.
    fn settle(&mut self, touched: HashSet<String>) -> Emission {
        let mut recheck: BTreeSet<String> = BTreeSet::new();
        for code in touched {
            let Some(entry) = self.entries.get_mut(&code) else {
                continue;
            };
            entry.refresh_support();
            recheck.extend(entry.parents.iter().cloned());
            if entry.images.is_empty() {
                let entry = self.entries.remove(&code).expect("entry");
                for p in &entry.parents {
                    if let Some(set) = self.children.get_mut(p) {
                        set.remove(&code);
                        if set.is_empty() {
                            self.children.remove(p);
                        }
                    }
                }
            }
            recheck.insert(code);
        }

        let before = self.current.clone();
        for code in recheck {
            match self.evaluate(&code) {
                Some(p) => {
                    self.current.insert(code, p);
                }
                None => {
                    self.current.remove(&code);
                }
            }
        }
        let added = self
            .current
            .iter()
            .filter(|(c, _)| !before.contains_key(*c))
            .map(|(_, p)| p.clone())
            .collect();
        let removed = before
            .iter()
            .filter(|(c, _)| !self.current.contains_key(*c))
            .map(|(_, p)| p.clone())
            .collect();
        Emission {
            added,
            removed,
            current: self.current(),
            window: self.span(),
        }
    }

    fn evaluate(&self, code: &str) -> Option<Pattern> {
        let entry = self.entries.get(code)?;
        if entry.support < self.config.min_support {
            return None;
        }
        let shadowed = self.children.get(code).is_some_and(|cs| {
            cs.iter()
                .any(|c| self.entries.get(c).is_some_and(|e| e.support == entry.support))
        });
        (!shadowed).then(|| Pattern {
            code: code.to_string(),
            edges: entry.shape.to_pattern_edges(),
            support: entry.support,
            closed: true,
        })
    }
}
