//! Canonical codes, automorphism orbits and parent enumeration for small
//! labeled patterns.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::PatternEdge;

/// (source slot, source label, predicate, target label, target slot)
type EdgeKey<'a> = (usize, &'a str, &'a str, &'a str, usize);

/// Pattern in variable space: one label per variable plus directed labeled
/// edges between variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Shape {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, String, usize)>,
}

/// A shape renumbered into its canonical variable order.
#[derive(Clone, Debug)]
pub(crate) struct Canonical {
    pub code: String,
    pub shape: Shape,
    /// `perm[old_var] = canonical_var`.
    pub perm: Vec<usize>,
}

fn escape(out: &mut String, s: &str) {
    for c in s.chars() {
        if matches!(c, '\\' | '(' | ')' | ',') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn serialize(tuples: &[(usize, &str, &str, &str, usize)]) -> String {
    let mut out = String::new();
    for (sv, sl, p, dl, dv) in tuples {
        out.push('(');
        out.push_str(&sv.to_string());
        out.push(',');
        escape(&mut out, sl);
        out.push(',');
        escape(&mut out, p);
        out.push(',');
        escape(&mut out, dl);
        out.push(',');
        out.push_str(&dv.to_string());
        out.push(')');
    }
    out
}

/// Calls `f` with every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

impl Shape {
    pub fn var_count(&self) -> usize {
        self.labels.len()
    }

    fn tuples<'a>(&'a self, perm: &[usize]) -> Vec<EdgeKey<'a>> {
        let mut t: Vec<_> = self
            .edges
            .iter()
            .map(|(s, p, d)| {
                (
                    perm[*s],
                    self.labels[*s].as_str(),
                    p.as_str(),
                    self.labels[*d].as_str(),
                    perm[*d],
                )
            })
            .collect();
        t.sort();
        t
    }

    pub fn is_connected(&self) -> bool {
        let n = self.labels.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (s, _, d) in &self.edges {
                let other = if *s == v {
                    *d
                } else if *d == v {
                    *s
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Exhaustive minimum over variable bijections.
    pub fn canonicalize(&self) -> Canonical {
        let n = self.labels.len();
        let mut best: Option<(Vec<EdgeKey<'_>>, Vec<usize>)> = None;
        for_each_permutation(n, |perm| {
            let t = self.tuples(perm);
            let better = match &best {
                None => true,
                Some((b, _)) => t < *b,
            };
            if better {
                best = Some((t, perm.to_vec()));
            }
        });
        let (tuples, perm) = best.expect("at least one permutation");
        let code = serialize(&tuples);
        let mut labels = vec![String::new(); n];
        for (old, new) in perm.iter().enumerate() {
            labels[*new] = self.labels[old].clone();
        }
        let edges = tuples
            .iter()
            .map(|(s, _, p, _, d)| (*s, p.to_string(), *d))
            .collect();
        Canonical {
            code,
            shape: Shape { labels, edges },
            perm,
        }
    }

    /// Orbit representative (smallest member) of every variable under the
    /// automorphism group.
    pub fn orbits(&self) -> Vec<usize> {
        let n = self.labels.len();
        let target = self.tuples(&(0..n).collect::<Vec<_>>());
        let mut orbit: Vec<usize> = (0..n).collect();
        for_each_permutation(n, |perm| {
            if (0..n).any(|v| self.labels[v] != self.labels[perm[v]]) {
                return;
            }
            if self.tuples(perm) == target {
                for v in 0..n {
                    let (a, b) = (orbit[v], orbit[perm[v]]);
                    let m = a.min(b);
                    for o in orbit.iter_mut() {
                        if *o == a || *o == b {
                            *o = m;
                        }
                    }
                }
            }
        });
        orbit
    }

    /// Shape with edge `i` removed and variables compacted, or `None` when
    /// the remainder is empty or disconnected.
    pub fn without_edge(&self, i: usize) -> Option<Shape> {
        if self.edges.len() <= 1 {
            return None;
        }
        let rest: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e.clone())
            .collect();
        let mut used = vec![false; self.labels.len()];
        for (s, _, d) in &rest {
            used[*s] = true;
            used[*d] = true;
        }
        let mut remap = vec![usize::MAX; self.labels.len()];
        let mut labels = Vec::new();
        for (v, u) in used.iter().enumerate() {
            if *u {
                remap[v] = labels.len();
                labels.push(self.labels[v].clone());
            }
        }
        let shape = Shape {
            labels,
            edges: rest
                .into_iter()
                .map(|(s, p, d)| (remap[s], p, remap[d]))
                .collect(),
        };
        shape.is_connected().then_some(shape)
    }

    /// Codes of all connected one-edge-smaller sub-patterns.
    pub fn parent_codes(&self) -> BTreeSet<String> {
        (0..self.edges.len())
            .filter_map(|i| self.without_edge(i))
            .map(|s| s.canonicalize().code)
            .collect()
    }

    pub fn to_pattern_edges(&self) -> Vec<PatternEdge> {
        self.edges
            .iter()
            .map(|(s, p, d)| PatternEdge {
                src_label: self.labels[*s].clone(),
                pred_label: p.clone(),
                dst_label: self.labels[*d].clone(),
                src_var: *s as u8,
                dst_var: *d as u8,
            })
            .collect()
    }

    /// Validates a user-supplied edge list.
    pub fn from_pattern_edges(edges: &[PatternEdge], max_edges: usize) -> Result<Shape> {
        if edges.is_empty() {
            return Err(Error::InvalidArgument("pattern has no edges".into()));
        }
        if edges.len() > max_edges {
            return Err(Error::TooLarge {
                edges: edges.len(),
                limit: max_edges,
            });
        }
        let n = edges
            .iter()
            .map(|e| e.src_var.max(e.dst_var) as usize + 1)
            .max()
            .unwrap_or(0);
        let mut labels: Vec<Option<String>> = vec![None; n];
        let mut out = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for e in edges {
            if e.src_var == e.dst_var {
                return Err(Error::InvalidArgument(format!(
                    "self-loop on variable {}",
                    e.src_var
                )));
            }
            for (v, l) in [(e.src_var, &e.src_label), (e.dst_var, &e.dst_label)] {
                match &labels[v as usize] {
                    Some(prev) if prev != l => {
                        return Err(Error::InvalidArgument(format!(
                            "variable {v} labeled both {prev:?} and {l:?}"
                        )))
                    }
                    _ => labels[v as usize] = Some(l.clone()),
                }
            }
            let key = (e.src_var as usize, e.pred_label.clone(), e.dst_var as usize);
            if !seen.insert(key.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge {}-[{}]->{}",
                    e.src_var, e.pred_label, e.dst_var
                )));
            }
            out.push(key);
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(v, l)| {
                l.ok_or_else(|| {
                    Error::InvalidArgument(format!("variables not contiguous: {v} unused"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let shape = Shape { labels, edges: out };
        if !shape.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(shape)
    }
}

/// Canonical code of a pattern given as an edge list.
pub fn canonical_code(edges: &[PatternEdge], max_edges: usize) -> Result<String> {
    Ok(Shape::from_pattern_edges(edges, max_edges)?.canonicalize().code)
}
