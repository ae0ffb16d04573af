//! Brute-force pattern table: every connected edge subset of the window,
//! with MNI support computed from all variable assignments of each subset.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use nous_core::mine::{canonical_code, MinerEdge, PatternEdge};

pub type Vertex = (u32, String);
type Tuple = (usize, String, String, String, usize);

pub struct Entry {
    pub edges: Vec<PatternEdge>,
    pub images: BTreeSet<Vec<usize>>,
    var_images: Vec<BTreeSet<Vertex>>,
}

impl Entry {
    pub fn support(&self) -> usize {
        self.var_images.iter().map(BTreeSet::len).min().unwrap_or(0)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn distinct_edges(window: &[MinerEdge]) -> Vec<(Vertex, String, Vertex)> {
    let set: BTreeSet<_> = window
        .iter()
        .map(|e| ((e.src, e.src_label.clone()), e.pred.clone(), (e.dst, e.dst_label.clone())))
        .filter(|(s, _, d)| s != d)
        .collect();
    set.into_iter().collect()
}

/// code -> entry for every connected pattern with at most `max_edges` edges
/// that occurs in the window.
pub fn table(window: &[MinerEdge], max_edges: usize) -> BTreeMap<String, Entry> {
    let edges = distinct_edges(window);
    let touches = |a: usize, b: usize| {
        let (s1, _, d1) = &edges[a];
        let (s2, _, d2) = &edges[b];
        s1 == s2 || s1 == d2 || d1 == s2 || d1 == d2
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut stack: Vec<Vec<usize>> = (0..edges.len()).map(|i| vec![i]).collect();
    seen.extend(stack.iter().cloned());
    let mut subsets = Vec::new();
    while let Some(s) = stack.pop() {
        if s.len() < max_edges {
            for x in 0..edges.len() {
                if !s.contains(&x) && s.iter().any(|&y| touches(x, y)) {
                    let mut t = s.clone();
                    t.push(x);
                    t.sort_unstable();
                    if seen.insert(t.clone()) {
                        stack.push(t);
                    }
                }
            }
        }
        subsets.push(s);
    }

    let mut out: BTreeMap<String, Entry> = BTreeMap::new();
    for subset in subsets {
        let mut verts: Vec<Vertex> = Vec::new();
        for &i in &subset {
            let (s, _, d) = &edges[i];
            for v in [s, d] {
                if !verts.contains(v) {
                    verts.push(v.clone());
                }
            }
        }
        let mut best: Option<Vec<Tuple>> = None;
        let mut winners: Vec<Vec<usize>> = Vec::new();
        for perm in permutations(verts.len()) {
            let var = |v: &Vertex| perm[verts.iter().position(|x| x == v).unwrap()];
            let mut t: Vec<Tuple> = subset
                .iter()
                .map(|&i| {
                    let (s, p, d) = &edges[i];
                    (var(s), s.1.clone(), p.clone(), d.1.clone(), var(d))
                })
                .collect();
            t.sort();
            match &best {
                Some(b) if t > *b => {}
                Some(b) if t == *b => winners.push(perm),
                _ => {
                    best = Some(t);
                    winners = vec![perm];
                }
            }
        }
        let best = best.unwrap();
        let pattern: Vec<PatternEdge> = best
            .iter()
            .map(|(s, sl, p, dl, d)| PatternEdge {
                src_label: sl.clone(),
                pred_label: p.clone(),
                dst_label: dl.clone(),
                src_var: *s as u8,
                dst_var: *d as u8,
            })
            .collect();
        let code = canonical_code(&pattern, max_edges).unwrap();
        let entry = out.entry(code).or_insert_with(|| Entry {
            edges: pattern,
            images: BTreeSet::new(),
            var_images: vec![BTreeSet::new(); verts.len()],
        });
        entry.images.insert(subset.clone());
        for perm in winners {
            for (i, v) in verts.iter().enumerate() {
                entry.var_images[perm[i]].insert(v.clone());
            }
        }
    }
    out
}

/// Connected patterns obtained by deleting one edge, with variables
/// compacted.
pub fn one_edge_subpatterns(edges: &[PatternEdge]) -> Vec<Vec<PatternEdge>> {
    let mut out = Vec::new();
    for skip in 0..edges.len() {
        let rest: Vec<_> = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, e)| e.clone())
            .collect();
        if rest.is_empty() {
            continue;
        }
        let used: BTreeSet<u8> = rest.iter().flat_map(|e| [e.src_var, e.dst_var]).collect();
        let remap = |v: u8| used.iter().position(|u| *u == v).unwrap() as u8;
        let rest: Vec<_> = rest
            .into_iter()
            .map(|mut e| {
                e.src_var = remap(e.src_var);
                e.dst_var = remap(e.dst_var);
                e
            })
            .collect();
        if canonical_code(&rest, usize::MAX).is_ok() {
            out.push(rest);
        }
    }
    out
}

/// Every connected proper sub-pattern, by repeated edge deletion.
pub fn all_subpatterns(edges: &[PatternEdge]) -> BTreeMap<String, Vec<PatternEdge>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![edges.to_vec()];
    while let Some(p) = stack.pop() {
        for q in one_edge_subpatterns(&p) {
            let code = canonical_code(&q, usize::MAX).unwrap();
            if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(code) {
                slot.insert(q.clone());
                stack.push(q);
            }
        }
    }
    out
}

/// Closed frequent set derived from the brute-force table.
pub fn closed_frequent(table: &BTreeMap<String, Entry>, min_sup: usize) -> BTreeSet<(String, usize)> {
    let mut shadowed = HashSet::new();
    for entry in table.values() {
        let sup = entry.support();
        if sup < min_sup {
            continue;
        }
        for sub in one_edge_subpatterns(&entry.edges) {
            let code = canonical_code(&sub, usize::MAX).unwrap();
            if table.get(&code).map(Entry::support) == Some(sup) {
                shadowed.insert(code);
            }
        }
    }
    table
        .iter()
        .filter(|(c, e)| e.support() >= min_sup && !shadowed.contains(*c))
        .map(|(c, e)| (c.clone(), e.support()))
        .collect()
}
