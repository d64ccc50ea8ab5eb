//! Density invariants in exact rational arithmetic and the bounds they imply
//! for the local queue number.
//!
//! * `mad(G)`: the maximum of `2|E(H)|/|V(H)|` over nonempty subgraphs.
//! * Nash-Williams value: the maximum of `ceil(|E(H)| / (|V(H)| - 1))` over
//!   subgraphs with at least two vertices, i.e. the arboricity.
//! * Local queue number sandwich: `mad/4 <= lqn <= mad/2 + 2`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructors::{min_degree_removal, TieBreak};
use crate::flow::{FlowNetwork, INF};
use crate::graph::{Graph, Vertex};
use crate::layout::{validate_layout, LayoutError, QueueId, QueueLayout, Validation};

pub type Rational = Ratio<i64>;

/// Graphs up to this size use subset enumeration instead of flows.
pub const BRUTE_FORCE_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph needs at least two vertices")]
    TooSmall,
    #[error("layout is not a valid queue layout: {0:?}")]
    InvalidLayout(Validation),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Serde helper writing a rational as `{"num": .., "den": ..}`.
pub mod rational_json {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: i64,
        den: i64,
    }

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            num: *r.numer(),
            den: *r.denom(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational::new(r.num, r.den))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    #[serde(with = "rational_json")]
    pub mad: Rational,
    pub degeneracy: u32,
    pub arboricity_nw: u32,
    #[serde(with = "rational_json")]
    pub lqn_lower: Rational,
    #[serde(with = "rational_json")]
    pub lqn_upper: Rational,
}

impl BoundsReport {
    /// Integer range implied for the local queue number.
    pub fn lqn_integer_range(&self) -> (i64, i64) {
        (self.lqn_lower.ceil().to_integer(), self.lqn_upper.floor().to_integer())
    }
}

fn adjacency_masks(g: &Graph) -> Vec<u64> {
    let mut adj = vec![0u64; g.n()];
    for e in g.edges() {
        adj[e.lo() as usize] |= 1 << e.hi();
        adj[e.hi() as usize] |= 1 << e.lo();
    }
    adj
}

fn induced_edges(adj: &[u64], mask: u64) -> u32 {
    let mut twice = 0;
    let mut m = mask;
    while m != 0 {
        let v = m.trailing_zeros() as usize;
        twice += (adj[v] & mask).count_ones();
        m &= m - 1;
    }
    twice / 2
}

/// Maximum average degree by enumerating every nonempty vertex subset.
pub fn mad_brute_force(g: &Graph) -> Result<Rational, BoundsError> {
    if g.n() == 0 {
        return Err(BoundsError::EmptyGraph);
    }
    assert!(g.n() <= 24, "subset enumeration is limited to 24 vertices");
    let adj = adjacency_masks(g);
    let mut best = Rational::from_integer(0);
    for mask in 1u64..(1 << g.n()) {
        let e = induced_edges(&adj, mask) as i64;
        let d = Rational::new(2 * e, mask.count_ones() as i64);
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// Solves `max q|E(H)| - p|V(H)|` over vertex sets `H` (with `forced` included)
/// as a maximum-weight closure. Returns the optimum value and the chosen set.
fn max_closure(g: &Graph, p: i64, q: i64, forced: Option<Vertex>) -> (i64, Vec<bool>) {
    let m = g.edge_count();
    let n = g.n();
    let s = m + n;
    let t = s + 1;
    let mut net = FlowNetwork::new(m + n + 2);
    for (i, e) in g.edges().iter().enumerate() {
        net.add_edge(s, i, q);
        net.add_edge(i, m + e.lo() as usize, INF);
        net.add_edge(i, m + e.hi() as usize, INF);
    }
    for v in 0..n {
        net.add_edge(m + v, t, p);
    }
    let base = q * m as i64;
    if let Some(f) = forced {
        // an infinite source arc keeps the vertex on the source side
        net.add_edge(s, m + f as usize, INF);
    }
    let cut = net.max_flow(s, t);
    let side = net.source_side(s);
    let chosen: Vec<bool> = (0..n).map(|v| side[m + v]).collect();
    (base - cut, chosen)
}

fn count_inside(g: &Graph, chosen: &[bool]) -> (i64, i64) {
    let v = chosen.iter().filter(|&&c| c).count() as i64;
    let e = g
        .edges()
        .iter()
        .filter(|e| chosen[e.lo() as usize] && chosen[e.hi() as usize])
        .count() as i64;
    (e, v)
}

/// Exact maximum average degree.
///
/// Small graphs are enumerated; larger ones use parametric min-cut: starting
/// from the density of the whole graph, a maximum-weight closure either finds
/// a strictly denser subgraph or certifies the current one optimal.
pub fn mad(g: &Graph) -> Result<Rational, BoundsError> {
    if g.n() == 0 {
        return Err(BoundsError::EmptyGraph);
    }
    if g.n() <= BRUTE_FORCE_LIMIT {
        return mad_brute_force(g);
    }
    mad_flow(g)
}

/// The flow-based route of [`mad`], exposed for cross-checking.
pub fn mad_flow(g: &Graph) -> Result<Rational, BoundsError> {
    if g.n() == 0 {
        return Err(BoundsError::EmptyGraph);
    }
    if g.edge_count() == 0 {
        return Ok(Rational::from_integer(0));
    }
    let (mut e, mut v) = (g.edge_count() as i64, g.n() as i64);
    loop {
        let (value, chosen) = max_closure(g, e, v, None);
        if value <= 0 {
            break;
        }
        let (ne, nv) = count_inside(g, &chosen);
        debug_assert!(ne * v > e * nv);
        e = ne;
        v = nv;
    }
    Ok(Rational::new(2 * e, v))
}

/// Nash-Williams arboricity value.
pub fn nash_williams_arboricity(g: &Graph) -> Result<u32, BoundsError> {
    if g.n() < 2 {
        return Err(BoundsError::TooSmall);
    }
    if g.n() <= BRUTE_FORCE_LIMIT {
        return Ok(arboricity_brute_force(g));
    }
    Ok(arboricity_flow(g))
}

pub fn arboricity_brute_force(g: &Graph) -> u32 {
    assert!(g.n() <= 24);
    let adj = adjacency_masks(g);
    let mut best = 0;
    for mask in 1u64..(1 << g.n()) {
        let v = mask.count_ones();
        if v < 2 {
            continue;
        }
        let e = induced_edges(&adj, mask);
        best = best.max(e.div_ceil(v - 1));
    }
    best
}

/// Smallest `k` with `|E(H)| <= k (|V(H)| - 1)` for all `H`, checked per
/// forced vertex with a closure on `|E(H)| - k |V(H)|`.
fn arboricity_flow(g: &Graph) -> u32 {
    let (n, m) = (g.n() as i64, g.edge_count() as i64);
    if m == 0 {
        return 0;
    }
    let mut k = ((m + n - 2) / (n - 1)).max(1);
    'search: loop {
        for u in 0..g.n() as Vertex {
            let (value, _) = max_closure(g, k, 1, Some(u));
            if value > -k {
                k += 1;
                continue 'search;
            }
        }
        return k as u32;
    }
}

/// Degeneracy by minimum-degree removal, ties to the smallest id.
pub fn degeneracy(g: &Graph) -> u32 {
    min_degree_removal(g, TieBreak::Smallest).1 as u32
}

pub fn density_bounds(g: &Graph) -> Result<BoundsReport, BoundsError> {
    let mad = mad(g)?;
    let arboricity_nw = if g.n() < 2 {
        0
    } else {
        nash_williams_arboricity(g)?
    };
    Ok(BoundsReport {
        mad,
        degeneracy: degeneracy(g),
        arboricity_nw,
        lqn_lower: mad / 4,
        lqn_upper: mad / 2 + 2,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueBoundViolation {
    pub queue: QueueId,
    pub edges: usize,
    pub vertices: usize,
}

/// Checks `|E(Q)| <= 2|V_Q| - 3` for every queue of a valid layout. A nonempty
/// answer means the layout machinery is broken, not the input.
pub fn queue_edge_bound_check(
    g: &Graph,
    layout: &QueueLayout,
) -> Result<Vec<QueueBoundViolation>, BoundsError> {
    match validate_layout(g, layout, None)? {
        Validation::Ok => {}
        other => return Err(BoundsError::InvalidLayout(other)),
    }
    let sets = layout.queue_vertex_sets();
    Ok(layout
        .queues()
        .into_iter()
        .filter_map(|(q, edges)| {
            let vertices = sets[&q].len();
            (vertices >= 2 && edges.len() + 3 > 2 * vertices).then_some(QueueBoundViolation {
                queue: q,
                edges: edges.len(),
                vertices,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::bfs_tree_layout;
    use crate::ktree::{random_ktree, random_tree};
    use crate::layout::LinearOrder;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&Graph::complete(4)).unwrap(), r(3, 1));
        let t = random_tree(9, 3);
        assert_eq!(mad(&t).unwrap(), r(16, 9));
        let mut edges: Vec<(u32, u32)> = Graph::complete(4).edges().iter().map(|e| (e.lo(), e.hi())).collect();
        edges.push((3, 4));
        assert_eq!(mad(&Graph::new(5, edges).unwrap()).unwrap(), r(3, 1));
        assert_eq!(mad(&Graph::empty(0)), Err(BoundsError::EmptyGraph));
        assert_eq!(mad(&Graph::empty(3)).unwrap(), r(0, 1));
    }

    #[test]
    fn flow_route_agrees_on_ktrees() {
        for seed in 0..5 {
            let g = random_ktree(3, 14, seed).unwrap().expand().unwrap();
            assert_eq!(mad_flow(&g).unwrap(), mad_brute_force(&g).unwrap());
            assert_eq!(arboricity_flow(&g), arboricity_brute_force(&g));
        }
    }

    #[test]
    fn arboricity_examples() {
        assert_eq!(nash_williams_arboricity(&random_tree(12, 1)).unwrap(), 1);
        assert_eq!(nash_williams_arboricity(&Graph::complete(4)).unwrap(), 2);
        assert_eq!(nash_williams_arboricity(&Graph::complete(5)).unwrap(), 3);
        assert_eq!(nash_williams_arboricity(&Graph::empty(1)), Err(BoundsError::TooSmall));
    }

    #[test]
    fn density_bound_examples() {
        let rep = density_bounds(&Graph::complete(4)).unwrap();
        assert_eq!(rep.lqn_lower, r(3, 4));
        assert_eq!(rep.lqn_upper, r(7, 2));
        let n = 10;
        let rep = density_bounds(&random_tree(n, 5)).unwrap();
        assert_eq!(rep.lqn_upper, r(2 * (n as i64 - 1), 2 * n as i64) + 2);
        assert!(rep.lqn_upper < r(3, 1));
    }

    #[test]
    fn queue_bound_examples() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let l = QueueLayout::new(LinearOrder::identity(2), [(crate::graph::Edge::new(0, 1), 0)].into());
        assert!(queue_edge_bound_check(&g, &l).unwrap().is_empty());
        let t = random_tree(40, 2);
        let l = bfs_tree_layout(&t).unwrap();
        assert!(queue_edge_bound_check(&t, &l).unwrap().is_empty());

        let bad = Graph::new(4, [(0, 3), (1, 2)]).unwrap();
        let l = QueueLayout::new(LinearOrder::identity(4), bad.edges().iter().map(|&e| (e, 0)).collect());
        assert!(matches!(
            queue_edge_bound_check(&bad, &l),
            Err(BoundsError::InvalidLayout(_))
        ));
    }
}
