//! k-trees as construction sequences, and the generator families built on them.
//!
//! A [`ConstructionSequence`] starts from a `(k+1)`-clique on the vertices
//! `0..=k` and attaches each further vertex to a `k`-clique of the graph built
//! so far. Vertex ids are dense and follow construction order, so the id of a
//! step's child always equals the number of vertices that existed before it.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph, Vertex};

/// Default cap on the number of vertices a generator may produce.
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KTreeError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("initial clique must be a permutation of 0..={k}, got {init:?}")]
    InvalidInit { k: usize, init: Vec<Vertex> },
    #[error("step {step}: parent {parent:?} is not a {k}-clique of the graph built so far")]
    InvalidParent {
        step: usize,
        k: usize,
        parent: Vec<Vertex>,
    },
    #[error("step {step}: child {child} is not fresh (expected id {expected})")]
    DuplicateChild {
        step: usize,
        child: Vertex,
        expected: Vertex,
    },
    #[error("generator would produce {requested} vertices, above the cap of {cap}")]
    SizeOverflow { requested: u128, cap: usize },
    #[error("invalid generator arguments: {0}")]
    InvalidArguments(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub parent: Vec<Vertex>,
    pub child: Vertex,
}

/// A k-tree given by its initial clique and an ordered list of attachments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstructionSequence {
    pub k: usize,
    pub init: Vec<Vertex>,
    pub steps: Vec<Step>,
}

impl ConstructionSequence {
    /// The bare `(k+1)`-clique.
    pub fn clique(k: usize) -> Self {
        ConstructionSequence {
            k,
            init: (0..=k as Vertex).collect(),
            steps: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.init.len() + self.steps.len()
    }

    pub fn edge_count(&self) -> usize {
        self.k * (self.k + 1) / 2 + self.k * self.steps.len()
    }

    /// Appends a child of `parent` and returns its id. The parent is not checked here.
    pub fn push_child(&mut self, mut parent: Vec<Vertex>) -> Vertex {
        parent.sort_unstable();
        let child = self.vertex_count() as Vertex;
        self.steps.push(Step { parent, child });
        child
    }

    /// Vertices in construction order: the initial clique as listed, then the children.
    pub fn construction_order(&self) -> Vec<Vertex> {
        self.init
            .iter()
            .copied()
            .chain(self.steps.iter().map(|s| s.child))
            .collect()
    }

    /// Checks every invariant and returns the expanded graph.
    pub fn expand(&self) -> Result<Graph, KTreeError> {
        if self.k == 0 {
            return Err(KTreeError::ZeroK);
        }
        let mut sorted = self.init.clone();
        sorted.sort_unstable();
        if sorted.len() != self.k + 1 || sorted.iter().enumerate().any(|(i, &v)| v != i as Vertex) {
            return Err(KTreeError::InvalidInit {
                k: self.k,
                init: self.init.clone(),
            });
        }
        let n = self.vertex_count();
        let mut edges: HashSet<Edge> = HashSet::with_capacity(self.edge_count());
        for (i, &u) in self.init.iter().enumerate() {
            for &v in &self.init[i + 1..] {
                edges.insert(Edge::new(u, v));
            }
        }
        for (idx, step) in self.steps.iter().enumerate() {
            let expected = (self.k + 1 + idx) as Vertex;
            if step.child != expected {
                return Err(KTreeError::DuplicateChild {
                    step: idx,
                    child: step.child,
                    expected,
                });
            }
            let bad_parent = || KTreeError::InvalidParent {
                step: idx,
                k: self.k,
                parent: step.parent.clone(),
            };
            if step.parent.len() != self.k {
                return Err(bad_parent());
            }
            for (i, &u) in step.parent.iter().enumerate() {
                if u >= step.child {
                    return Err(bad_parent());
                }
                for &v in &step.parent[i + 1..] {
                    if u == v || !edges.contains(&Edge::new(u, v)) {
                        return Err(bad_parent());
                    }
                }
            }
            for &u in &step.parent {
                edges.insert(Edge::new(u, step.child));
            }
        }
        Ok(Graph::from_edges_lossy(n, edges))
    }

    /// Children of each parent clique, keyed by the sorted parent.
    pub fn children_by_parent(&self) -> HashMap<Vec<Vertex>, Vec<Vertex>> {
        let mut map: HashMap<Vec<Vertex>, Vec<Vertex>> = HashMap::new();
        for step in &self.steps {
            let mut p = step.parent.clone();
            p.sort_unstable();
            map.entry(p).or_default().push(step.child);
        }
        map
    }

    /// Parent clique of every vertex (`None` for initial vertices).
    pub fn parents(&self) -> Vec<Option<&[Vertex]>> {
        let mut out = vec![None; self.vertex_count()];
        for step in &self.steps {
            out[step.child as usize] = Some(step.parent.as_slice());
        }
        out
    }
}

/// Construction depth of the edges of an m-ary 2-tree.
///
/// Only edges with a finite depth are stored; the two auxiliary edges of the
/// starting triangle have no depth and never receive children.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeDepthMap {
    depth: HashMap<Edge, u32>,
    max_depth: u32,
}

impl EdgeDepthMap {
    pub fn get(&self, e: Edge) -> Option<u32> {
        self.depth.get(&e).copied()
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.depth.iter().map(|(&e, &d)| (e, d))
    }

    /// Number of edges at each depth `0..=max_depth`.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.max_depth as usize + 1];
        for &d in self.depth.values() {
            h[d as usize] += 1;
        }
        h
    }

    /// Depths of the edges among the first `n` vertices.
    pub fn truncated(&self, n: usize) -> EdgeDepthMap {
        let mut out = EdgeDepthMap::default();
        for (e, d) in self.iter() {
            if (e.hi() as usize) < n {
                out.insert(e, d);
            }
        }
        out
    }

    fn insert(&mut self, e: Edge, d: u32) {
        self.depth.insert(e, d);
        self.max_depth = self.max_depth.max(d);
    }
}

/// Vertex count of `mary_ktree(m, t)`: the triangle plus `m (2m)^(i-1)` children per level.
pub fn mary_vertex_count(m: usize, t: u32) -> u128 {
    let mut total: u128 = 3;
    let mut level_edges: u128 = 1;
    for _ in 0..t {
        total = total.saturating_add(level_edges.saturating_mul(m as u128));
        level_edges = level_edges.saturating_mul(2 * m as u128);
    }
    total
}

/// The m-ary 2-tree of depth `t`, using the default vertex cap.
pub fn mary_ktree(m: usize, t: u32) -> Result<(ConstructionSequence, EdgeDepthMap), KTreeError> {
    mary_ktree_capped(m, t, DEFAULT_VERTEX_CAP)
}

/// Starts from the triangle `{0, 1, 2}` whose edge `{0, 1}` has depth 0, then gives every
/// edge of depth `i < t` exactly `m` children, whose two new edges get depth `i + 1`.
pub fn mary_ktree_capped(
    m: usize,
    t: u32,
    cap: usize,
) -> Result<(ConstructionSequence, EdgeDepthMap), KTreeError> {
    if m == 0 {
        return Err(KTreeError::InvalidArguments("arity m must be at least 1".into()));
    }
    let requested = mary_vertex_count(m, t);
    if requested > cap as u128 {
        return Err(KTreeError::SizeOverflow { requested, cap });
    }
    let mut seq = ConstructionSequence::clique(2);
    seq.steps.reserve(requested as usize - 3);
    let mut depths = EdgeDepthMap::default();
    depths.insert(Edge::new(0, 1), 0);
    let mut frontier = vec![Edge::new(0, 1)];
    for d in 1..=t {
        let mut next = Vec::with_capacity(frontier.len() * 2 * m);
        for e in &frontier {
            for _ in 0..m {
                let child = seq.push_child(vec![e.lo(), e.hi()]);
                for end in e.endpoints() {
                    let f = Edge::new(end, child);
                    depths.insert(f, d);
                    next.push(f);
                }
            }
        }
        frontier = next;
    }
    Ok((seq, depths))
}

/// The 2-tree used for the five-round game strategy, on vertices `0..7`.
///
/// Vertex `i` carries label `i + 1`. The initial edge is `{1, 2}`; vertices
/// 3 through 7 are attached one per round to the edges `{1,2}`, `{1,3}`,
/// `{1,4}`, `{3,4}` and `{3,6}`.
pub fn five_round_witness() -> ConstructionSequence {
    let mut seq = ConstructionSequence::clique(2);
    for parent in FIVE_ROUND_PARENTS.iter().skip(1) {
        seq.push_child(parent.iter().map(|l| l - 1).collect());
    }
    seq
}

/// Parent edges (1-based labels) of vertices 3..=7 of [`five_round_witness`].
pub const FIVE_ROUND_PARENTS: [[Vertex; 2]; 5] = [[1, 2], [1, 3], [1, 4], [3, 4], [3, 6]];

/// A `(k+1)`-clique whose first `k` vertices receive `2s` further children.
pub fn halfclique_family(k: usize, s: usize) -> Result<ConstructionSequence, KTreeError> {
    if k < 2 || s < 1 {
        return Err(KTreeError::InvalidArguments(format!(
            "halfclique family needs k >= 2 and s >= 1, got k={k}, s={s}"
        )));
    }
    let mut seq = ConstructionSequence::clique(k);
    let parent: Vec<Vertex> = (0..k as Vertex).collect();
    for _ in 0..2 * s {
        seq.push_child(parent.clone());
    }
    Ok(seq)
}

/// The designated parent clique of [`halfclique_family`].
pub fn halfclique_parent(k: usize) -> Vec<Vertex> {
    (0..k as Vertex).collect()
}

/// Uniformly random k-tree on `n` vertices: every step picks one of the current
/// k-cliques uniformly, so the same seed always yields the same sequence.
pub fn random_ktree(k: usize, n: usize, seed: u64) -> Result<ConstructionSequence, KTreeError> {
    if k == 0 {
        return Err(KTreeError::ZeroK);
    }
    if n < k + 1 {
        return Err(KTreeError::InvalidArguments(format!(
            "a {k}-tree needs at least {} vertices, got {n}",
            k + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = ConstructionSequence::clique(k);
    let mut cliques: Vec<Vec<Vertex>> = (0..=k as Vertex)
        .map(|skip| (0..=k as Vertex).filter(|&v| v != skip).collect())
        .collect();
    while seq.vertex_count() < n {
        let parent = cliques[rng.gen_range(0..cliques.len())].clone();
        let child = seq.push_child(parent.clone());
        for skip in 0..k {
            let mut c: Vec<Vertex> = parent
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect();
            c.push(child);
            cliques.push(c);
        }
    }
    Ok(seq)
}

/// Random tree on `n` vertices (a random 1-tree).
pub fn random_tree(n: usize, seed: u64) -> Graph {
    if n <= 1 {
        return Graph::empty(n);
    }
    random_ktree(1, n, seed)
        .and_then(|s| s.expand())
        .expect("1-tree generation is infallible for n >= 2")
}
