//! The resource dependency graph: aggregation and composition edges over
//! resources, kept acyclic, with ancestor queries, composition descent,
//! transitive reduction and reduction distances.
//!
//! Every reachability walk bumps an atomic traversal counter so tests and
//! benchmarks can compare how much graph work different strategies do.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::model::ResourceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Aggregation,
    Composition,
}

impl std::fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DependencyKind::Aggregation => f.write_str("aggregation"),
            DependencyKind::Composition => f.write_str("composition"),
        }
    }
}

type Adjacency = BTreeMap<ResourceId, BTreeMap<ResourceId, DependencyKind>>;

/// Directed acyclic dependency graph. Edges run parent (ancestor) to child
/// (descendant). The distinguished root is a node like any other except that
/// it cannot be deleted and acquires no parents.
#[derive(Debug)]
pub struct Rdg {
    root: ResourceId,
    children: Adjacency,
    parents: Adjacency,
    reduction: OnceLock<Arc<Reduction>>,
    traversals: AtomicU64,
}

impl Clone for Rdg {
    fn clone(&self) -> Self {
        Rdg {
            root: self.root.clone(),
            children: self.children.clone(),
            parents: self.parents.clone(),
            reduction: OnceLock::new(),
            traversals: AtomicU64::new(0),
        }
    }
}

impl Default for Rdg {
    fn default() -> Self {
        Self::new()
    }
}

impl Rdg {
    pub fn new() -> Self {
        let root = ResourceId::root();
        let mut children = Adjacency::new();
        let mut parents = Adjacency::new();
        children.insert(root.clone(), BTreeMap::new());
        parents.insert(root.clone(), BTreeMap::new());
        Rdg { root, children, parents, reduction: OnceLock::new(), traversals: AtomicU64::new(0) }
    }

    pub fn root(&self) -> &ResourceId {
        &self.root
    }

    pub fn contains(&self, id: &ResourceId) -> bool {
        self.children.contains_key(id)
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ResourceId> {
        self.children.keys()
    }

    /// Number of reachability walks performed so far.
    pub fn traversal_count(&self) -> u64 {
        self.traversals.load(Ordering::Relaxed)
    }

    fn count_traversal(&self) {
        self.traversals.fetch_add(1, Ordering::Relaxed);
    }

    fn invalidate(&mut self) {
        self.reduction = OnceLock::new();
    }

    pub fn add_node(&mut self, id: ResourceId) {
        self.children.entry(id.clone()).or_default();
        self.parents.entry(id).or_default();
        self.invalidate();
    }

    pub fn edge_kind(&self, parent: &ResourceId, child: &ResourceId) -> Option<DependencyKind> {
        self.children.get(parent).and_then(|m| m.get(child)).copied()
    }

    /// All edges, sorted, as (parent, child, kind).
    pub fn edges(&self) -> Vec<(ResourceId, ResourceId, DependencyKind)> {
        let mut out = Vec::new();
        for (parent, children) in &self.children {
            for (child, kind) in children {
                out.push((parent.clone(), child.clone(), *kind));
            }
        }
        out
    }

    pub fn add_edge(
        &mut self,
        parent: &ResourceId,
        child: &ResourceId,
        kind: DependencyKind,
    ) -> Result<()> {
        if !self.contains(parent) {
            return Err(EngineError::UnknownResource(parent.to_string()));
        }
        if !self.contains(child) {
            return Err(EngineError::UnknownResource(child.to_string()));
        }
        if parent == child {
            return Err(EngineError::SelfLoop(parent.to_string()));
        }
        if let Some(existing) = self.edge_kind(parent, child) {
            return Err(if existing == kind {
                EngineError::DuplicateEdge { parent: parent.to_string(), child: child.to_string() }
            } else {
                // aggregation and composition never share a pair
                EngineError::MixedKindConflict {
                    parent: parent.to_string(),
                    child: child.to_string(),
                }
            });
        }
        if let Some(reverse) = self.edge_kind(child, parent) {
            return Err(if reverse != kind {
                // r1 <=_AD r2 forbids r2 <=_CD r1 and vice versa
                EngineError::MixedKindConflict {
                    parent: parent.to_string(),
                    child: child.to_string(),
                }
            } else {
                EngineError::CycleDetected {
                    parent: parent.to_string(),
                    child: child.to_string(),
                }
            });
        }
        if self.reaches(child, parent) {
            return Err(EngineError::CycleDetected {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        self.children.get_mut(parent).unwrap().insert(child.clone(), kind);
        self.parents.get_mut(child).unwrap().insert(parent.clone(), kind);
        self.invalidate();
        Ok(())
    }

    pub fn remove_edge(&mut self, parent: &ResourceId, child: &ResourceId) -> Result<()> {
        let kind = self.edge_kind(parent, child).ok_or_else(|| EngineError::UnknownEdge {
            parent: parent.to_string(),
            child: child.to_string(),
        })?;
        if kind == DependencyKind::Composition
            && !self.composition_reachable_without(child, parent, child)
        {
            return Err(EngineError::WouldOrphan {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        self.children.get_mut(parent).unwrap().remove(child);
        self.parents.get_mut(child).unwrap().remove(parent);
        self.invalidate();
        Ok(())
    }

    /// Drops the given nodes and every edge touching them.
    pub fn remove_nodes(&mut self, ids: &BTreeSet<ResourceId>) {
        self.children.retain(|id, _| !ids.contains(id));
        self.parents.retain(|id, _| !ids.contains(id));
        for m in self.children.values_mut() {
            m.retain(|id, _| !ids.contains(id));
        }
        for m in self.parents.values_mut() {
            m.retain(|id, _| !ids.contains(id));
        }
        self.invalidate();
    }

    /// True when `to` is reachable from `from` over combined edges
    /// (including `from == to`).
    pub fn reaches(&self, from: &ResourceId, to: &ResourceId) -> bool {
        self.count_traversal();
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            for next in self.children.get(node).into_iter().flat_map(|m| m.keys()) {
                if next == to {
                    return true;
                }
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        false
    }

    /// Strict ancestors of `r` under the transitive closure of combined
    /// edges; `r` itself is excluded.
    pub fn ancestors(&self, r: &ResourceId) -> Result<BTreeSet<ResourceId>> {
        if !self.contains(r) {
            return Err(EngineError::UnknownResource(r.to_string()));
        }
        self.count_traversal();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([r]);
        while let Some(node) = queue.pop_front() {
            for next in self.parents.get(node).into_iter().flat_map(|m| m.keys()) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    /// Transitive composition descendants of `r`; aggregation edges do not
    /// propagate deletion.
    pub fn composition_descendants(&self, r: &ResourceId) -> Result<BTreeSet<ResourceId>> {
        if !self.contains(r) {
            return Err(EngineError::UnknownResource(r.to_string()));
        }
        self.count_traversal();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([r]);
        while let Some(node) = queue.pop_front() {
            let edges = self.children.get(node).into_iter().flat_map(|m| m.iter());
            for (next, kind) in edges {
                if *kind == DependencyKind::Composition && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    /// Everything reachable from any seed over combined edges, seeds
    /// excluded unless reached through another seed.
    pub fn descendants_of(&self, seeds: &BTreeSet<ResourceId>) -> BTreeSet<ResourceId> {
        self.count_traversal();
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&ResourceId> = seeds.iter().collect();
        while let Some(node) = queue.pop_front() {
            for next in self.children.get(node).into_iter().flat_map(|m| m.keys()) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Is `target` reachable from root over composition edges when the edge
    /// (skip_parent, skip_child) is ignored?
    fn composition_reachable_without(
        &self,
        target: &ResourceId,
        skip_parent: &ResourceId,
        skip_child: &ResourceId,
    ) -> bool {
        self.count_traversal();
        if *target == self.root {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([&self.root]);
        while let Some(node) = queue.pop_front() {
            let edges = self.children.get(node).into_iter().flat_map(|m| m.iter());
            for (next, kind) in edges {
                if *kind != DependencyKind::Composition {
                    continue;
                }
                if node == skip_parent && next == skip_child {
                    continue;
                }
                if next == target {
                    return true;
                }
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        false
    }

    /// The memoized transitive reduction. Recomputed lazily after any
    /// mutation.
    pub fn reduction(&self) -> Arc<Reduction> {
        self.reduction
            .get_or_init(|| {
                self.count_traversal();
                Arc::new(Reduction::compute(&self.children))
            })
            .clone()
    }

    /// Edges of the transitive reduction, with their original kinds.
    pub fn reduced_edges(&self) -> Vec<(ResourceId, ResourceId, DependencyKind)> {
        let reduction = self.reduction();
        let mut out = Vec::new();
        for (parent, children) in &reduction.children {
            for child in children {
                let kind = self.edge_kind(parent, child).expect("reduced edge exists in graph");
                out.push((parent.clone(), child.clone(), kind));
            }
        }
        out
    }

    /// Shortest directed path length from `ancestor` to `descendant` in the
    /// transitive reduction; 0 when they coincide, None when unreachable.
    pub fn dist(&self, ancestor: &ResourceId, descendant: &ResourceId) -> Result<Option<u32>> {
        if !self.contains(ancestor) {
            return Err(EngineError::UnknownResource(ancestor.to_string()));
        }
        if !self.contains(descendant) {
            return Err(EngineError::UnknownResource(descendant.to_string()));
        }
        if ancestor == descendant {
            return Ok(Some(0));
        }
        let reduction = self.reduction();
        self.count_traversal();
        Ok(reduction.bfs_dist(ancestor, descendant))
    }

    /// One edge per line: `parent<TAB>child<TAB>kind`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (parent, child, kind) in self.edges() {
            out.push_str(&format!("{parent}\t{child}\t{kind}\n"));
        }
        out
    }
}

/// A computed transitive reduction: the unique minimal edge set with the
/// same reachability as the source DAG.
#[derive(Debug)]
pub struct Reduction {
    children: BTreeMap<ResourceId, BTreeSet<ResourceId>>,
}

impl Reduction {
    pub fn children_of(&self, id: &ResourceId) -> Option<&BTreeSet<ResourceId>> {
        self.children.get(id)
    }

    fn compute(adjacency: &Adjacency) -> Self {
        let ids: Vec<&ResourceId> = adjacency.keys().collect();
        let index: HashMap<&ResourceId, usize> =
            ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let n = ids.len();
        let succ: Vec<Vec<usize>> = ids
            .iter()
            .map(|id| adjacency[*id].keys().map(|c| index[c]).collect())
            .collect();

        // Kahn topological order; the graph is a DAG by construction.
        let mut indegree = vec![0usize; n];
        for targets in &succ {
            for &t in targets {
                indegree[t] += 1;
            }
        }
        let mut queue: VecDeque<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            topo.push(u);
            for &v in &succ[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        debug_assert_eq!(topo.len(), n, "dependency graph must stay acyclic");

        // reach[u] = all nodes strictly reachable from u
        let mut reach = BitMatrix::new(n);
        for &u in topo.iter().rev() {
            for &v in &succ[u] {
                reach.set(u, v);
                reach.or_into(u, v);
            }
        }

        // an edge (u, v) is redundant iff another direct successor reaches v
        let mut children: BTreeMap<ResourceId, BTreeSet<ResourceId>> = BTreeMap::new();
        for (u, id) in ids.iter().enumerate() {
            let kept: BTreeSet<ResourceId> = succ[u]
                .iter()
                .filter(|&&v| !succ[u].iter().any(|&w| w != v && reach.get(w, v)))
                .map(|&v| ids[v].clone())
                .collect();
            children.insert((*id).clone(), kept);
        }
        Reduction { children }
    }

    fn bfs_dist(&self, from: &ResourceId, to: &ResourceId) -> Option<u32> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([(from, 0u32)]);
        while let Some((node, d)) = queue.pop_front() {
            for next in self.children.get(node).into_iter().flatten() {
                if next == to {
                    return Some(d + 1);
                }
                if seen.insert(next) {
                    queue.push_back((next, d + 1));
                }
            }
        }
        None
    }
}

/// Square bit matrix sized for one row per node.
struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitMatrix { n, words_per_row, bits: vec![0; n * words_per_row] }
    }

    fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.n && col < self.n);
        self.bits[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.words_per_row + col / 64] & (1 << (col % 64)) != 0
    }

    fn or_into(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.words_per_row, src * self.words_per_row);
        for w in 0..self.words_per_row {
            let v = self.bits[s + w];
            self.bits[d + w] |= v;
        }
    }
}
