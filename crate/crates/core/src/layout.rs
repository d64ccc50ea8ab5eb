//! Linear vertex orders, queue assignments and the predicates on them.
//!
//! Two edges nest when one strictly encloses the other in the order, and
//! cross when their endpoints interleave. A queue is a set of edges with no
//! nesting pair. A [`QueueLayout`] does not have to be valid: validity is
//! checked by [`validate_layout`], which returns a re-checkable witness.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph, Vertex};
use crate::ktree::ConstructionSequence;

pub type QueueId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("vertex {0} is not part of the order")]
    UnknownVertex(Vertex),
    #[error("order is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("empty vertex set")]
    EmptySet,
    #[error("layout does not cover the edge set: {missing} missing, {extra} extra (first: {example})")]
    CoverageError {
        missing: usize,
        extra: usize,
        example: String,
    },
    #[error("{0:?} is not the parent clique of any child")]
    NotAParent(Vec<Vertex>),
}

/// A bijection between vertices `0..n` and ranks `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearOrder {
    order: Vec<Vertex>,
    rank: Vec<u32>,
}

impl LinearOrder {
    pub fn new(order: Vec<Vertex>) -> Result<Self, LayoutError> {
        let n = order.len();
        let mut rank = vec![u32::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            if v as usize >= n || rank[v as usize] != u32::MAX {
                return Err(LayoutError::NotAPermutation(n));
            }
            rank[v as usize] = i as u32;
        }
        Ok(LinearOrder { order, rank })
    }

    pub fn identity(n: usize) -> Self {
        LinearOrder {
            order: (0..n as Vertex).collect(),
            rank: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Vertices from left to right.
    pub fn vertices(&self) -> &[Vertex] {
        &self.order
    }

    #[inline]
    pub fn rank(&self, v: Vertex) -> u32 {
        self.rank[v as usize]
    }

    pub fn try_rank(&self, v: Vertex) -> Result<u32, LayoutError> {
        self.rank
            .get(v as usize)
            .copied()
            .ok_or(LayoutError::UnknownVertex(v))
    }

    pub fn at(&self, rank: usize) -> Vertex {
        self.order[rank]
    }

    #[inline]
    pub fn precedes(&self, u: Vertex, v: Vertex) -> bool {
        self.rank(u) < self.rank(v)
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        LinearOrder::new(order).expect("reversal of a permutation")
    }

    /// Endpoint ranks of `e`, smaller first.
    #[inline]
    pub fn interval(&self, e: Edge) -> (u32, u32) {
        let (a, b) = (self.rank(e.lo()), self.rank(e.hi()));
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Leftmost and rightmost rank of a nonempty vertex set.
    pub fn extent(&self, vertices: &[Vertex]) -> Result<(u32, u32), LayoutError> {
        let mut it = vertices.iter();
        let first = *it.next().ok_or(LayoutError::EmptySet)?;
        let r = self.try_rank(first)?;
        let (mut lo, mut hi) = (r, r);
        for &v in it {
            let r = self.try_rank(v)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok((lo, hi))
    }
}

/// Strict enclosure of one interval by the other.
#[inline]
pub fn intervals_nest(a: (u32, u32), b: (u32, u32)) -> bool {
    (a.0 < b.0 && b.1 < a.1) || (b.0 < a.0 && a.1 < b.1)
}

#[inline]
pub fn intervals_cross(a: (u32, u32), b: (u32, u32)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

fn check_edge(e: Edge, ord: &LinearOrder) -> Result<(), LayoutError> {
    ord.try_rank(e.lo())?;
    ord.try_rank(e.hi())?;
    Ok(())
}

/// Whether `e` and `f` nest under `ord`. Edges sharing an endpoint never nest.
pub fn nests(e: Edge, f: Edge, ord: &LinearOrder) -> Result<bool, LayoutError> {
    check_edge(e, ord)?;
    check_edge(f, ord)?;
    Ok(intervals_nest(ord.interval(e), ord.interval(f)))
}

/// Whether `e` and `f` cross under `ord`.
pub fn crosses(e: Edge, f: Edge, ord: &LinearOrder) -> Result<bool, LayoutError> {
    check_edge(e, ord)?;
    check_edge(f, ord)?;
    Ok(intervals_cross(ord.interval(e), ord.interval(f)))
}

/// All vertices between the leftmost and rightmost vertex of `set`, in order.
pub fn span(set: &[Vertex], ord: &LinearOrder) -> Result<Vec<Vertex>, LayoutError> {
    let (lo, hi) = ord.extent(set)?;
    Ok(ord.vertices()[lo as usize..=hi as usize].to_vec())
}

/// `v` lies below the vertex set `h` (which must not contain `v`).
pub fn below(v: Vertex, h: &[Vertex], ord: &LinearOrder) -> Result<bool, LayoutError> {
    let (lo, hi) = ord.extent(h)?;
    let r = ord.try_rank(v)?;
    Ok(lo <= r && r <= hi && !h.contains(&v))
}

pub fn outside(v: Vertex, h: &[Vertex], ord: &LinearOrder) -> Result<bool, LayoutError> {
    Ok(!h.contains(&v) && !below(v, h, ord)?)
}

/// A vertex order plus a queue id for every edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueueLayout {
    pub order: LinearOrder,
    pub assign: BTreeMap<Edge, QueueId>,
}

impl QueueLayout {
    pub fn new(order: LinearOrder, assign: BTreeMap<Edge, QueueId>) -> Self {
        QueueLayout { order, assign }
    }

    pub fn queue_of(&self, e: Edge) -> Option<QueueId> {
        self.assign.get(&e).copied()
    }

    /// Distinct queue ids in use.
    pub fn queue_ids(&self) -> BTreeSet<QueueId> {
        self.assign.values().copied().collect()
    }

    pub fn queue_count(&self) -> usize {
        self.queue_ids().len()
    }

    /// Edges of each queue.
    pub fn queues(&self) -> BTreeMap<QueueId, Vec<Edge>> {
        let mut out: BTreeMap<QueueId, Vec<Edge>> = BTreeMap::new();
        for (&e, &q) in &self.assign {
            out.entry(q).or_default().push(e);
        }
        out
    }

    /// Vertices with at least one incident edge in each queue.
    pub fn queue_vertex_sets(&self) -> BTreeMap<QueueId, BTreeSet<Vertex>> {
        let mut out: BTreeMap<QueueId, BTreeSet<Vertex>> = BTreeMap::new();
        for (&e, &q) in &self.assign {
            let s = out.entry(q).or_default();
            s.insert(e.lo());
            s.insert(e.hi());
        }
        out
    }

    /// Per-vertex sets of incident queue ids.
    pub fn incident_queues(&self) -> Vec<BTreeSet<QueueId>> {
        let mut out = vec![BTreeSet::new(); self.order.len()];
        for (&e, &q) in &self.assign {
            out[e.lo() as usize].insert(q);
            out[e.hi() as usize].insert(q);
        }
        out
    }

    /// Relabels queues by first occurrence along edges sorted by endpoint ranks.
    pub fn canonicalize(&self) -> QueueLayout {
        let mut edges: Vec<Edge> = self.assign.keys().copied().collect();
        edges.sort_by_key(|&e| self.order.interval(e));
        let mut relabel: HashMap<QueueId, QueueId> = HashMap::new();
        let mut assign = BTreeMap::new();
        for e in edges {
            let q = self.assign[&e];
            let next = relabel.len() as QueueId;
            let nq = *relabel.entry(q).or_insert(next);
            assign.insert(e, nq);
        }
        QueueLayout {
            order: self.order.clone(),
            assign,
        }
    }

    /// Keeps only the edges of `sub`, which must share the vertex set.
    pub fn restrict(&self, sub: &Graph) -> QueueLayout {
        let assign = sub
            .edges()
            .iter()
            .filter_map(|e| self.assign.get(e).map(|&q| (*e, q)))
            .collect();
        QueueLayout {
            order: self.order.clone(),
            assign,
        }
    }
}

/// Pairwise nesting edges, optionally all in one queue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RainbowWitness {
    pub edges: Vec<Edge>,
    pub queue: Option<QueueId>,
}

impl RainbowWitness {
    /// Re-checks the witness against an order and, when a queue is named, an assignment.
    pub fn verify(&self, ord: &LinearOrder, assign: Option<&BTreeMap<Edge, QueueId>>) -> bool {
        if self.edges.len() < 2 {
            return false;
        }
        for (i, &e) in self.edges.iter().enumerate() {
            for &f in &self.edges[i + 1..] {
                if !matches!(nests(e, f, ord), Ok(true)) {
                    return false;
                }
            }
        }
        match (self.queue, assign) {
            (Some(q), Some(a)) => self.edges.iter().all(|e| a.get(e) == Some(&q)),
            (Some(_), None) => false,
            (None, _) => true,
        }
    }
}

/// A vertex incident to more queues than allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityViolation {
    pub vertex: Vertex,
    pub queues: Vec<QueueId>,
    pub bound: u32,
}

impl LocalityViolation {
    pub fn verify(&self, g: &Graph, layout: &QueueLayout) -> bool {
        matches!(locality(g, layout, self.vertex), Ok(l) if l > self.bound)
            && self.queues.len() as u32 > self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Ok,
    Rainbow(RainbowWitness),
    Locality(LocalityViolation),
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        matches!(self, Validation::Ok)
    }
}

fn check_coverage(g: &Graph, layout: &QueueLayout) -> Result<(), LayoutError> {
    if layout.order.len() != g.n() {
        return Err(LayoutError::NotAPermutation(g.n()));
    }
    let missing: Vec<Edge> = g
        .edges()
        .iter()
        .filter(|e| !layout.assign.contains_key(e))
        .copied()
        .collect();
    let extra: Vec<Edge> = layout
        .assign
        .keys()
        .filter(|e| !g.has_edge(e.lo(), e.hi()))
        .copied()
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        let example = missing
            .first()
            .or(extra.first())
            .map(|e| e.to_string())
            .unwrap_or_default();
        Err(LayoutError::CoverageError {
            missing: missing.len(),
            extra: extra.len(),
            example,
        })
    }
}

/// First nesting pair inside one set of edges, if any.
pub fn find_nesting_pair(edges: &[Edge], ord: &LinearOrder) -> Option<(Edge, Edge)> {
    let mut iv: Vec<((u32, u32), Edge)> = edges.iter().map(|&e| (ord.interval(e), e)).collect();
    iv.sort_unstable_by_key(|&(i, _)| i);
    // widest interval among strictly smaller left endpoints
    let mut best: Option<((u32, u32), Edge)> = None;
    let mut idx = 0;
    while idx < iv.len() {
        let left = iv[idx].0 .0;
        let mut end = idx;
        while end < iv.len() && iv[end].0 .0 == left {
            end += 1;
        }
        if let Some((outer, oe)) = best {
            for &(inner, ie) in &iv[idx..end] {
                if inner.1 < outer.1 {
                    return Some((oe, ie));
                }
            }
        }
        for &(i, e) in &iv[idx..end] {
            if best.is_none_or(|(b, _)| i.1 > b.1) {
                best = Some((i, e));
            }
        }
        idx = end;
    }
    None
}

/// Checks that every queue is nesting-free and, if `bound` is given, that no
/// vertex sees more than `bound` queues.
pub fn validate_layout(
    g: &Graph,
    layout: &QueueLayout,
    bound: Option<u32>,
) -> Result<Validation, LayoutError> {
    check_coverage(g, layout)?;
    for (q, edges) in layout.queues() {
        if let Some((a, b)) = find_nesting_pair(&edges, &layout.order) {
            return Ok(Validation::Rainbow(RainbowWitness {
                edges: vec![a, b],
                queue: Some(q),
            }));
        }
    }
    if let Some(bound) = bound {
        for (v, qs) in layout.incident_queues().into_iter().enumerate() {
            if qs.len() as u32 > bound {
                return Ok(Validation::Locality(LocalityViolation {
                    vertex: v as Vertex,
                    queues: qs.into_iter().collect(),
                    bound,
                }));
            }
        }
    }
    Ok(Validation::Ok)
}

/// Number of distinct queues on the edges at `v`.
pub fn locality(g: &Graph, layout: &QueueLayout, v: Vertex) -> Result<u32, LayoutError> {
    if !g.contains_vertex(v) {
        return Err(LayoutError::UnknownVertex(v));
    }
    let qs: BTreeSet<QueueId> = layout
        .assign
        .iter()
        .filter(|(e, _)| e.contains(v))
        .map(|(_, &q)| q)
        .collect();
    Ok(qs.len() as u32)
}

/// Maximum locality over all vertices; 0 for an edgeless graph.
pub fn layout_locality(layout: &QueueLayout) -> u32 {
    layout
        .incident_queues()
        .iter()
        .map(|s| s.len() as u32)
        .max()
        .unwrap_or(0)
}

/// Largest set of pairwise nesting edges under `ord`.
///
/// A rainbow is a chain with strictly increasing left and strictly decreasing
/// right endpoints. Edges are sorted by left rank, ties by ascending right rank
/// so that two edges with a shared left endpoint never both enter the chain; the
/// answer is then the longest strictly decreasing subsequence of right ranks.
pub fn max_rainbow(g: &Graph, ord: &LinearOrder) -> (usize, RainbowWitness) {
    let mut iv: Vec<((u32, u32), Edge)> = g.edges().iter().map(|&e| (ord.interval(e), e)).collect();
    iv.sort_unstable_by_key(|&(i, _)| i);
    // tails[len-1] = index of the chain end with the largest right rank among chains of that length
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; iv.len()];
    for i in 0..iv.len() {
        let r = iv[i].0 .1;
        // first chain length whose tail right rank is <= r cannot be extended by i
        let pos = tails.partition_point(|&t| iv[t].0 .1 > r);
        prev[i] = if pos > 0 { Some(tails[pos - 1]) } else { None };
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut chain = Vec::new();
    let mut cur = tails.last().copied();
    while let Some(i) = cur {
        chain.push(iv[i].1);
        cur = prev[i];
    }
    chain.reverse();
    (
        chain.len(),
        RainbowWitness {
            edges: chain,
            queue: None,
        },
    )
}

/// Splits the children of `parent` into those placed below it and those outside.
pub fn nesting_children(
    seq: &ConstructionSequence,
    layout: &QueueLayout,
    parent: &[Vertex],
) -> Result<(Vec<Vertex>, Vec<Vertex>), LayoutError> {
    let mut key = parent.to_vec();
    key.sort_unstable();
    let children: Vec<Vertex> = seq
        .steps
        .iter()
        .filter(|s| {
            let mut p = s.parent.clone();
            p.sort_unstable();
            p == key
        })
        .map(|s| s.child)
        .collect();
    if children.is_empty() {
        return Err(LayoutError::NotAParent(key));
    }
    let mut nesting = Vec::new();
    let mut non_nesting = Vec::new();
    for c in children {
        if below(c, &key, &layout.order)? {
            nesting.push(c);
        } else {
            non_nesting.push(c);
        }
    }
    Ok((nesting, non_nesting))
}
