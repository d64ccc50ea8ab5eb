//! Undirected simple graphs on dense vertex ids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Vertex identifier. Vertices of a graph with `n` vertices are `0..n`.
pub type Vertex = u32;

/// An undirected edge stored with its smaller endpoint first. Serializes as
/// the string `"u-v"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(Vertex, Vertex);

impl Edge {
    /// Builds the edge `{u, v}`. Panics on a self-loop.
    pub fn new(u: Vertex, v: Vertex) -> Self {
        assert_ne!(u, v, "self-loop {u}-{v}");
        if u < v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    pub fn try_new(u: Vertex, v: Vertex) -> Result<Self, GraphError> {
        if u == v {
            Err(GraphError::SelfLoop(u))
        } else {
            Ok(Edge::new(u, v))
        }
    }

    #[inline]
    pub fn lo(self) -> Vertex {
        self.0
    }

    #[inline]
    pub fn hi(self) -> Vertex {
        self.1
    }

    #[inline]
    pub fn endpoints(self) -> [Vertex; 2] {
        [self.0, self.1]
    }

    #[inline]
    pub fn contains(self, v: Vertex) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`, if `v` is an endpoint.
    pub fn other(self, v: Vertex) -> Option<Vertex> {
        if self.0 == v {
            Some(self.1)
        } else if self.1 == v {
            Some(self.0)
        } else {
            None
        }
    }

    pub fn shares_endpoint(self, other: Edge) -> bool {
        self.contains(other.0) || self.contains(other.1)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once('-').ok_or_else(|| format!("expected u-v, got {s:?}"))?;
        let u: Vertex = a.trim().parse().map_err(|_| format!("bad vertex {a:?}"))?;
        let v: Vertex = b.trim().parse().map_err(|_| format!("bad vertex {b:?}"))?;
        Edge::try_new(u, v).map_err(|e| e.to_string())
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
}

/// Simple undirected graph: a vertex count and a sorted, duplicate-free edge list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            list.push(Edge::try_new(u, v)?);
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0]));
        }
        Ok(Graph { n, edges: list })
    }

    /// Builds a graph from edges already known to be valid; duplicates are merged.
    pub fn from_edges_lossy<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut list: Vec<Edge> = edges.into_iter().collect();
        list.sort_unstable();
        list.dedup();
        debug_assert!(list.iter().all(|e| (e.hi() as usize) < n));
        Graph { n, edges: list }
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n as Vertex {
            for v in u + 1..n as Vertex {
                edges.push(Edge(u, v));
            }
        }
        Graph { n, edges }
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n as Vertex).map(|v| Edge(v - 1, v)).collect();
        Graph { n, edges }
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges = (1..=leaves as Vertex).map(|v| Edge(0, v)).collect();
        Graph { n: leaves + 1, edges }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        0..self.n as Vertex
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        (v as usize) < self.n
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u != v && self.edges.binary_search(&Edge::new(u, v)).is_ok()
    }

    pub fn adjacency(&self) -> Vec<Vec<Vertex>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.0 as usize].push(e.1);
            adj[e.1 as usize].push(e.0);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.0 as usize] += 1;
            deg[e.1 as usize] += 1;
        }
        deg
    }

    /// Same vertex set, only the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(Edge) -> bool) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges.iter().copied().filter(|&e| keep(e)).collect(),
        }
    }

    /// Subgraph induced by `vertices`, relabelled to `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[Vertex]) -> Graph {
        let mut index = vec![u32::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v as usize] = i as Vertex;
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                let (a, b) = (index[e.0 as usize], index[e.1 as usize]);
                (a != u32::MAX && b != u32::MAX).then(|| Edge::new(a, b))
            })
            .collect::<Vec<_>>();
        Graph::from_edges_lossy(vertices.len(), edges)
    }

    /// Number of edges with both endpoints in the vertex bitmask (only for `n <= 64`).
    pub fn edges_within_mask(&self, mask: u64) -> usize {
        self.edges
            .iter()
            .filter(|e| mask >> e.0 & 1 == 1 && mask >> e.1 & 1 == 1)
            .count()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0 as Vertex];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && self.is_connected()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::new(3, [(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(Edge::new(0, 1)))
        );
        assert!(matches!(
            Graph::new(2, [(0, 2)]),
            Err(GraphError::VertexOutOfRange { vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn canonical_edges() {
        let g = Graph::new(4, [(3, 0), (1, 2), (2, 0)]).unwrap();
        assert_eq!(
            g.edges(),
            &[Edge::new(0, 2), Edge::new(0, 3), Edge::new(1, 2)]
        );
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(1, 3));
    }

    #[test]
    fn families() {
        assert_eq!(Graph::complete(5).edge_count(), 10);
        assert!(Graph::path(6).is_tree());
        assert!(Graph::star(9).is_tree());
        assert!(!Graph::complete(3).is_tree());
        let k4 = Graph::complete(4);
        assert_eq!(k4.induced(&[3, 1, 0]), Graph::complete(3));
    }
}
