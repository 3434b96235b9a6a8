//! Aligning explainer effects with ground-truth effects.
//!
//! Effects are vertices of a bipartite graph with an edge wherever two
//! feature sets overlap. Connected components become match groups, and a
//! component made up entirely of exact pairs is split so that each exact
//! pair is compared on its own.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchGroup {
    /// Indices into the ground-truth effects.
    pub model: Vec<usize>,
    /// Indices into the explainer effects.
    pub explainer: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub groups: Vec<MatchGroup>,
    /// `(model effect, explainer effect)` pairs, each inside one group.
    pub edges: Vec<(usize, usize)>,
    pub maiou: f64,
}

#[derive(Serialize, Deserialize)]
struct MatchReport {
    groups: Vec<MatchGroup>,
    maiou: f64,
}

impl MatchResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatchReport { groups: self.groups.clone(), maiou: self.maiou })
            .expect("serializable")
    }

    /// Edges whose endpoints both lie in `group`.
    pub fn group_edges<'a>(&'a self, group: &'a MatchGroup) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.edges
            .iter()
            .copied()
            .filter(move |(j, k)| group.model.contains(j) && group.explainer.contains(k))
    }
}

/// `|a & b| / |a | b|` of two feature sets.
pub fn iou(a: &[usize], b: &[usize]) -> f64 {
    iou_sorted(&sorted(a), &sorted(b))
}

fn iou_sorted(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn overlap_edges(model: &[Vec<usize>], explainer: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let sets: Vec<HashSet<usize>> = model.iter().map(|f| f.iter().copied().collect()).collect();
    let mut edges = Vec::new();
    for (j, set) in sets.iter().enumerate() {
        for (k, feats) in explainer.iter().enumerate() {
            if feats.iter().any(|f| set.contains(f)) {
                edges.push((j, k));
            }
        }
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // the smaller root wins so component ids follow vertex order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn components_from_edges(m: usize, mh: usize, edges: &[(usize, usize)]) -> Vec<MatchGroup> {
    let mut uf = UnionFind::new(m + mh);
    for &(j, k) in edges {
        uf.union(j, m + k);
    }
    let mut by_root: BTreeMap<usize, MatchGroup> = BTreeMap::new();
    for v in 0..m + mh {
        let root = uf.find(v);
        let g = by_root.entry(root).or_insert_with(|| MatchGroup { model: vec![], explainer: vec![] });
        if v < m {
            g.model.push(v);
        } else {
            g.explainer.push(v - m);
        }
    }
    by_root.into_values().collect()
}

/// Connected components of the overlap graph, before any splitting. Groups
/// are ordered by their smallest vertex (model vertices first).
pub fn components(model: &[Vec<usize>], explainer: &[Vec<usize>]) -> Vec<MatchGroup> {
    components_from_edges(model.len(), explainer.len(), &overlap_edges(model, explainer))
}

fn sorted(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// Splits `group` into one group per distinct feature set when every vertex
/// has an identical partner on the other side; otherwise returns it whole.
pub fn split_exact_pairs(group: &MatchGroup, model: &[Vec<usize>], explainer: &[Vec<usize>]) -> Vec<MatchGroup> {
    let model_sets: Vec<Vec<usize>> = group.model.iter().map(|&j| sorted(&model[j])).collect();
    let expl_sets: Vec<Vec<usize>> = group.explainer.iter().map(|&k| sorted(&explainer[k])).collect();
    let all_paired = model_sets.iter().all(|s| expl_sets.contains(s)) && expl_sets.iter().all(|s| model_sets.contains(s));
    if !all_paired || group.model.is_empty() || group.explainer.is_empty() {
        return vec![group.clone()];
    }
    let mut by_set: BTreeMap<Vec<usize>, MatchGroup> = BTreeMap::new();
    for (&j, s) in group.model.iter().zip(&model_sets) {
        by_set.entry(s.clone()).or_insert_with(|| MatchGroup { model: vec![], explainer: vec![] }).model.push(j);
    }
    for (&k, s) in group.explainer.iter().zip(&expl_sets) {
        by_set.get_mut(s).expect("paired").explainer.push(k);
    }
    let mut out: Vec<MatchGroup> = by_set.into_values().collect();
    out.sort();
    out
}

/// Mean over groups of the average IoU of each group's edges; a group with
/// no edges scores 0.
pub fn maiou(groups: &[MatchGroup], edges: &[(usize, usize)], model: &[Vec<usize>], explainer: &[Vec<usize>]) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    let mut owner = vec![usize::MAX; model.len()];
    for (g, group) in groups.iter().enumerate() {
        for &j in &group.model {
            owner[j] = g;
        }
    }
    let model_sets: Vec<Vec<usize>> = model.iter().map(|s| sorted(s)).collect();
    let expl_sets: Vec<Vec<usize>> = explainer.iter().map(|s| sorted(s)).collect();
    let mut sums = vec![0.0; groups.len()];
    let mut counts = vec![0usize; groups.len()];
    for &(j, k) in edges {
        let g = owner[j];
        sums[g] += iou_sorted(&model_sets[j], &expl_sets[k]);
        counts[g] += 1;
    }
    let total: f64 = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .sum();
    total / groups.len() as f64
}

pub fn match_effects(model: &[Vec<usize>], explainer: &[Vec<usize>]) -> MatchResult {
    let all_edges = overlap_edges(model, explainer);
    let mut groups = Vec::new();
    for component in components_from_edges(model.len(), explainer.len(), &all_edges) {
        groups.extend(split_exact_pairs(&component, model, explainer));
    }
    let mut model_side = vec![usize::MAX; model.len()];
    let mut expl_side = vec![usize::MAX; explainer.len()];
    for (g, group) in groups.iter().enumerate() {
        for &j in &group.model {
            model_side[j] = g;
        }
        for &k in &group.explainer {
            expl_side[k] = g;
        }
    }
    // Splitting can separate overlapping effects; their edges no longer count.
    let edges: Vec<(usize, usize)> = all_edges
        .into_iter()
        .filter(|&(j, k)| model_side[j] == expl_side[k])
        .collect();
    let score = maiou(&groups, &edges, model, explainer);
    MatchResult { groups, edges, maiou: score }
}
