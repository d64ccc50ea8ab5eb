//! Constructive queue layouts: star partitions and BFS orders of trees.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph, Vertex};
use crate::ktree::{ConstructionSequence, KTreeError};
use crate::layout::{LayoutError, LinearOrder, QueueId, QueueLayout};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("input graph is not a tree")]
    NotATree,
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    KTree(#[from] KTreeError),
    #[error("star {star} contains edge {edge} which does not contain its center")]
    NotAStar { star: usize, edge: Edge },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub center: Vertex,
    pub edges: Vec<Edge>,
}

/// An edge partition into stars.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarPartition {
    pub stars: Vec<Star>,
}

impl StarPartition {
    /// Star index of every edge.
    pub fn index(&self) -> BTreeMap<Edge, usize> {
        let mut map = BTreeMap::new();
        for (i, s) in self.stars.iter().enumerate() {
            for &e in &s.edges {
                map.insert(e, i);
            }
        }
        map
    }

    /// Number of stars with an edge at each vertex of a graph on `n` vertices.
    pub fn incidence(&self, n: usize) -> Vec<usize> {
        let mut count = vec![0; n];
        for s in &self.stars {
            let mut seen: Vec<Vertex> = s.edges.iter().flat_map(|e| e.endpoints()).collect();
            seen.sort_unstable();
            seen.dedup();
            for v in seen {
                count[v as usize] += 1;
            }
        }
        count
    }

    /// Each edge lies in exactly one star and every star edge contains the center.
    pub fn check(&self, g: &Graph) -> Result<(), ConstructError> {
        for (i, s) in self.stars.iter().enumerate() {
            if let Some(&edge) = s.edges.iter().find(|e| !e.contains(s.center)) {
                return Err(ConstructError::NotAStar { star: i, edge });
            }
        }
        let total: usize = self.stars.iter().map(|s| s.edges.len()).sum();
        let index = self.index();
        let missing: Vec<&Edge> = g.edges().iter().filter(|e| !index.contains_key(e)).collect();
        let extra = index.keys().filter(|e| !g.has_edge(e.lo(), e.hi())).count();
        let duplicates = total - index.len();
        if missing.is_empty() && extra == 0 && duplicates == 0 {
            Ok(())
        } else {
            Err(LayoutError::CoverageError {
                missing: missing.len(),
                extra: extra + duplicates,
                example: missing.first().map(|e| e.to_string()).unwrap_or_default(),
            }
            .into())
        }
    }
}

/// The star partition of a k-tree in which each vertex owns the edges to its
/// later-constructed neighbours. Empty stars are dropped.
pub fn construction_star_partition(seq: &ConstructionSequence) -> Result<StarPartition, ConstructError> {
    let g = seq.expand()?;
    let order = seq.construction_order();
    let mut pos = vec![0usize; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i;
    }
    let mut owned: Vec<Vec<Edge>> = vec![Vec::new(); order.len()];
    for &e in g.edges() {
        let owner = if pos[e.lo() as usize] < pos[e.hi() as usize] {
            e.lo()
        } else {
            e.hi()
        };
        owned[pos[owner as usize]].push(e);
    }
    let stars = order
        .iter()
        .zip(owned)
        .filter(|(_, edges)| !edges.is_empty())
        .map(|(&center, edges)| Star { center, edges })
        .collect();
    Ok(StarPartition { stars })
}

/// Star-partition queue layout of a k-tree: one queue per vertex holding its
/// edges to later-constructed neighbours. Without an explicit order the
/// construction order is used as the spine.
pub fn star_queue_layout(
    seq: &ConstructionSequence,
    ord: Option<&LinearOrder>,
) -> Result<QueueLayout, ConstructError> {
    let g = seq.expand()?;
    let sp = construction_star_partition(seq)?;
    let order = match ord {
        Some(o) => o.clone(),
        None => LinearOrder::new(seq.construction_order())?,
    };
    stars_to_queues(&g, &sp, &order)
}

/// One queue per star, on any spine order.
pub fn stars_to_queues(
    g: &Graph,
    sp: &StarPartition,
    ord: &LinearOrder,
) -> Result<QueueLayout, ConstructError> {
    sp.check(g)?;
    if ord.len() != g.n() {
        return Err(LayoutError::NotAPermutation(g.n()).into());
    }
    let mut assign = BTreeMap::new();
    for (i, s) in sp.stars.iter().enumerate() {
        for &e in &s.edges {
            assign.insert(e, i as QueueId);
        }
    }
    Ok(QueueLayout::new(ord.clone(), assign))
}

/// Degeneracy ordering as a construction order: repeatedly remove a vertex of
/// minimum degree (ties to the largest id) and reverse the removal sequence.
///
/// Returns the ordering and the degeneracy. Every vertex has at most
/// `degeneracy` neighbours earlier in the returned ordering.
pub fn degeneracy_construction_order(g: &Graph) -> (Vec<Vertex>, usize) {
    let removal = min_degree_removal(g, TieBreak::Largest);
    let d = removal.1;
    let mut order = removal.0;
    order.reverse();
    (order, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TieBreak {
    Smallest,
    Largest,
}

/// Bucket-based minimum-degree elimination. Returns the removal sequence and
/// the largest degree seen at removal time.
pub(crate) fn min_degree_removal(g: &Graph, tie: TieBreak) -> (Vec<Vertex>, usize) {
    let n = g.n();
    let adj = g.adjacency();
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<std::collections::BTreeSet<Vertex>> = vec![Default::default(); max_deg + 1];
    for v in 0..n {
        buckets[deg[v]].insert(v as Vertex);
    }
    let mut removed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    let mut degeneracy = 0;
    let mut lowest = 0;
    for _ in 0..n {
        while buckets[lowest].is_empty() {
            lowest += 1;
        }
        let v = match tie {
            TieBreak::Smallest => *buckets[lowest].iter().next().unwrap(),
            TieBreak::Largest => *buckets[lowest].iter().next_back().unwrap(),
        };
        buckets[lowest].remove(&v);
        removed[v as usize] = true;
        degeneracy = degeneracy.max(lowest);
        out.push(v);
        for &w in &adj[v as usize] {
            let w = w as usize;
            if !removed[w] {
                buckets[deg[w]].remove(&(w as Vertex));
                deg[w] -= 1;
                buckets[deg[w]].insert(w as Vertex);
                lowest = lowest.min(deg[w]);
            }
        }
    }
    (out, degeneracy)
}

/// Star partition from a degeneracy ordering: the star at `v` holds the edges
/// to neighbours later in the ordering, so each vertex meets at most
/// `degeneracy + 1` stars.
pub fn degeneracy_star_partition(g: &Graph) -> StarPartition {
    let (order, _) = degeneracy_construction_order(g);
    let mut pos = vec![0usize; g.n()];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i;
    }
    let mut owned: Vec<Vec<Edge>> = vec![Vec::new(); g.n()];
    for &e in g.edges() {
        let owner = if pos[e.lo() as usize] < pos[e.hi() as usize] {
            e.lo()
        } else {
            e.hi()
        };
        owned[pos[owner as usize]].push(e);
    }
    StarPartition {
        stars: order
            .iter()
            .zip(owned)
            .filter(|(_, e)| !e.is_empty())
            .map(|(&center, edges)| Star { center, edges })
            .collect(),
    }
}

/// Single-queue layout of a tree on a BFS order rooted at vertex 0, children
/// visited in ascending id.
pub fn bfs_tree_layout(tree: &Graph) -> Result<QueueLayout, ConstructError> {
    if !tree.is_tree() {
        return Err(ConstructError::NotATree);
    }
    let adj = tree.adjacency();
    let mut seen = vec![false; tree.n()];
    let mut order = Vec::with_capacity(tree.n());
    let mut queue = VecDeque::from([0 as Vertex]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &adj[v as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    let assign = tree.edges().iter().map(|&e| (e, 0)).collect();
    Ok(QueueLayout::new(LinearOrder::new(order)?, assign))
}
