//! Non-nesting children in 2-local layouts of m-ary 2-trees.
//!
//! Either some edge has many children outside its span, or the walk below
//! (a chain of nested edges at one vertex, two twins with equal queues and a
//! child of the inner twin edge) ends in a same-queue nesting pair.

use std::collections::HashMap;

use queuelay_core::graph::{Edge, Graph, Vertex};
use queuelay_core::ktree::EdgeDepthMap;
use queuelay_core::layout::{
    nests, outside, validate_layout, LayoutError, LinearOrder, LocalityViolation, QueueId, QueueLayout,
    RainbowWitness, Validation,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Children of a clique placed outside its span.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonNestingWitness {
    pub clique: Vec<Vertex>,
    pub children: Vec<Vertex>,
}

impl NonNestingWitness {
    /// Every child is distinct, adjacent to the whole clique and outside its span.
    pub fn verify(&self, g: &Graph, ord: &LinearOrder) -> bool {
        let mut seen = self.children.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.children.len()
            && !self.clique.is_empty()
            && self.children.iter().all(|&x| {
                self.clique.iter().all(|&c| g.has_edge(c, x)) && matches!(outside(x, &self.clique, ord), Ok(true))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCertificate {
    NonNesting(NonNestingWitness),
    Rainbow(RainbowWitness),
    /// The layout is not 2-local.
    Overloaded(LocalityViolation),
}

impl EdgeCertificate {
    pub fn verify(&self, g: &Graph, layout: &QueueLayout, s: usize) -> bool {
        match self {
            EdgeCertificate::NonNesting(w) => w.children.len() >= s && w.verify(g, &layout.order),
            EdgeCertificate::Rainbow(w) => w.queue.is_some() && w.verify(&layout.order, Some(&layout.assign)),
            EdgeCertificate::Overloaded(l) => l.bound == 2 && l.verify(g, layout),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("edge depths do not match the graph: {0}")]
    DepthMismatch(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    /// A valid 2-local layout where every edge keeps most children nested.
    /// Only possible when the tree is too shallow for the walk.
    #[error("no certificate: layout is 2-local and valid, every edge has fewer than {0} outer children")]
    Inconclusive(usize),
}

struct Tree<'a> {
    layout: &'a QueueLayout,
    children: HashMap<Edge, Vec<Vertex>>,
}

impl Tree<'_> {
    fn pos(&self, v: Vertex) -> u32 {
        self.layout.order.rank(v)
    }

    fn queue(&self, a: Vertex, b: Vertex) -> QueueId {
        self.layout.assign[&Edge::new(a, b)]
    }

    fn nested_children(&self, e: Edge) -> Vec<Vertex> {
        let (a, b) = (self.pos(e.lo()), self.pos(e.hi()));
        let (lo, hi) = (a.min(b), a.max(b));
        self.children
            .get(&e)
            .map(|cs| cs.iter().copied().filter(|&c| (lo..hi).contains(&self.pos(c))).collect())
            .unwrap_or_default()
    }

    fn same_queue_nesting(&self, edges: &[Edge]) -> Option<RainbowWitness> {
        let ord = &self.layout.order;
        for (i, &e) in edges.iter().enumerate() {
            for &f in &edges[i + 1..] {
                if self.layout.assign[&e] != self.layout.assign[&f] {
                    continue;
                }
                for (outer, inner) in [(e, f), (f, e)] {
                    if matches!(nests(outer, inner, ord), Ok(true)) {
                        return Some(RainbowWitness {
                            edges: vec![outer, inner],
                            queue: Some(self.layout.assign[&e]),
                        });
                    }
                }
            }
        }
        None
    }

    /// `covers` are nested edges at `v`, `mid` the innermost one.
    fn walk(&self, v: Vertex, covers: &mut Vec<Edge>, mid: Edge, budget: &mut usize) -> Option<RainbowWitness> {
        let e = |a, b| Edge::new(a, b);
        for c in self.nested_children(mid) {
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            let xs = self.nested_children(e(v, c));
            for (i, &x) in xs.iter().enumerate() {
                for &y in &xs[i + 1..] {
                    if (self.queue(v, x), self.queue(x, c)) != (self.queue(v, y), self.queue(y, c)) {
                        continue;
                    }
                    // y is the twin closer to c
                    let (x, y) = if self.pos(x).abs_diff(self.pos(c)) > self.pos(y).abs_diff(self.pos(c)) {
                        (x, y)
                    } else {
                        (y, x)
                    };
                    for u in self.nested_children(e(y, c)) {
                        let mut edges = covers.clone();
                        edges.extend([mid, e(v, c), e(v, x), e(v, y), e(x, c), e(y, c), e(y, u)]);
                        if let Some(w) = self.same_queue_nesting(&edges) {
                            return Some(w);
                        }
                    }
                }
            }
            // restart below a twin edge in a queue the chain has not used
            let used: Vec<QueueId> = covers.iter().chain([&mid]).map(|f| self.layout.assign[f]).collect();
            for &x in &xs {
                if !used.contains(&self.queue(v, x)) {
                    covers.push(mid);
                    let found = self.walk(v, covers, e(v, x), budget);
                    covers.pop();
                    if found.is_some() {
                        return found;
                    }
                }
            }
        }
        None
    }
}

/// Parent edge of every vertex, read off the depths: a vertex created at
/// depth d has exactly two edges of depth d to the endpoints of a depth d-1
/// edge, and all other depth edges at it are deeper.
fn children_by_edge(g: &Graph, depths: &EdgeDepthMap) -> Result<HashMap<Edge, Vec<Vertex>>, AnalysisError> {
    let mut at: Vec<Vec<(u32, Vertex)>> = vec![Vec::new(); g.n()];
    for (e, d) in depths.iter() {
        if !g.has_edge(e.lo(), e.hi()) {
            return Err(AnalysisError::DepthMismatch(format!("edge {e:?} is not in the graph")));
        }
        at[e.lo() as usize].push((d, e.hi()));
        at[e.hi() as usize].push((d, e.lo()));
    }
    let mut children: HashMap<Edge, Vec<Vertex>> = HashMap::new();
    for (c, list) in at.iter_mut().enumerate() {
        list.sort_unstable();
        let Some(&(d, _)) = list.first() else { continue };
        let parents: Vec<Vertex> = list.iter().take_while(|&&(dd, _)| dd == d).map(|&(_, p)| p).collect();
        if d == 0 {
            if parents.len() != 1 {
                return Err(AnalysisError::DepthMismatch(format!("vertex {c} has {} depth-0 edges", parents.len())));
            }
            continue;
        }
        let [a, b] = parents[..] else {
            return Err(AnalysisError::DepthMismatch(format!(
                "vertex {c} has {} edges of its lowest depth {d}",
                parents.len()
            )));
        };
        if depths.get(Edge::new(a, b)) != Some(d - 1) {
            return Err(AnalysisError::DepthMismatch(format!(
                "parents {a}, {b} of vertex {c} are not joined by a depth-{} edge",
                d - 1
            )));
        }
        children.entry(Edge::new(a, b)).or_default().push(c as Vertex);
    }
    for cs in children.values_mut() {
        cs.sort_unstable();
    }
    Ok(children)
}

/// Search budget of the nesting walk, in visited inner edges.
const WALK_BUDGET: usize = 200_000;

/// Certifies a layout of an m-ary 2-tree: an edge with at least `s` children
/// outside its span, a same-queue nesting pair, or a vertex with three queues.
pub fn analyze_edge_children(
    g: &Graph,
    depths: &EdgeDepthMap,
    layout: &QueueLayout,
    s: usize,
) -> Result<EdgeCertificate, AnalysisError> {
    // also rejects layouts that do not cover the graph
    let validation = validate_layout(g, layout, Some(2))?;
    let children = children_by_edge(g, depths)?;
    let tree = Tree { layout, children };
    let mut edges: Vec<(u32, Edge)> = depths.iter().map(|(e, d)| (d, e)).collect();
    edges.sort_unstable();
    for &(_, e) in &edges {
        let outer: Vec<Vertex> = tree.children.get(&e).map_or_else(Vec::new, |cs| {
            cs.iter()
                .copied()
                .filter(|&c| matches!(outside(c, &[e.lo(), e.hi()], &layout.order), Ok(true)))
                .collect()
        });
        if outer.len() >= s {
            return Ok(EdgeCertificate::NonNesting(NonNestingWitness {
                clique: vec![e.lo(), e.hi()],
                children: outer,
            }));
        }
    }
    let root = edges.iter().find(|(d, _)| *d == 0).map(|&(_, e)| e);
    if let Some(top) = root {
        let mut budget = WALK_BUDGET;
        for v in top.endpoints() {
            for w in tree.nested_children(top) {
                if let Some(r) = tree.walk(v, &mut vec![top], Edge::new(v, w), &mut budget) {
                    return Ok(EdgeCertificate::Rainbow(r));
                }
            }
        }
    }
    match validation {
        Validation::Rainbow(w) => Ok(EdgeCertificate::Rainbow(w)),
        Validation::Locality(l) => Ok(EdgeCertificate::Overloaded(l)),
        Validation::Ok => Err(AnalysisError::Inconclusive(s)),
    }
}

/// For a k-clique with children, one of the two halves of the clique (the
/// first or last `ceil(k/2)` vertices by position) has every child outside
/// its span or the other half does; the half that collects more children is
/// returned. Ties go to the left half.
pub fn half_clique_witness(
    g: &Graph,
    ord: &LinearOrder,
    clique: &[Vertex],
    children: &[Vertex],
) -> Result<NonNestingWitness, AnalysisError> {
    let mut sorted = clique.to_vec();
    for &v in sorted.iter().chain(children) {
        ord.try_rank(v)?;
    }
    sorted.sort_by_key(|&v| ord.rank(v));
    let h = clique.len().div_ceil(2);
    let halves = [sorted[..h].to_vec(), sorted[sorted.len() - h..].to_vec()];
    let mut best: Option<NonNestingWitness> = None;
    for half in halves {
        let out: Vec<Vertex> = children
            .iter()
            .copied()
            .filter(|&x| g.has_edge(half[0], x) && matches!(outside(x, &half, ord), Ok(true)))
            .collect();
        if best.as_ref().is_none_or(|b| out.len() > b.children.len()) {
            best = Some(NonNestingWitness {
                clique: half,
                children: out,
            });
        }
    }
    Ok(best.expect("two halves"))
}
