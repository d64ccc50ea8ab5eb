//! Exact queue number and local queue number for small graphs.
//!
//! Both searches build the spine left to right. When a vertex is placed, its
//! edges to earlier vertices become fully known, and a new edge `(l, r)` nests
//! over an earlier edge `(l', r')` exactly when `l < l'`. That makes nesting a
//! prefix property, so infeasible prefixes are cut before any order is
//! completed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::mad;
use crate::constructors::{degeneracy_star_partition, stars_to_queues};
use crate::graph::{Edge, Graph, Vertex};
use crate::layout::{layout_locality, LinearOrder, QueueId, QueueLayout};

pub const DEFAULT_CAP: usize = 10;
/// Queue ids are tracked in a 128-bit mask per vertex.
const MAX_QUEUES: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("graph has {n} vertices, above the solver cap of {cap}")]
    TooLarge { n: usize, cap: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub value: u32,
    pub witness: QueueLayout,
    pub stats: SolveStats,
    /// False when the budget ran out and `value` is only an upper bound.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub cap: usize,
    pub budget: Option<Duration>,
    pub parallel: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cap: DEFAULT_CAP,
            budget: None,
            parallel: true,
        }
    }
}

/// Minimum number of queues on a fixed spine, by greedy layering: each edge
/// goes one layer above the deepest edge enclosing it.
pub fn min_queues_for_order(g: &Graph, ord: &LinearOrder) -> SolveResult {
    let start = Instant::now();
    let n = ord.len();
    let mut iv: Vec<((u32, u32), Edge)> = g.edges().iter().map(|&e| (ord.interval(e), e)).collect();
    // enclosing edges first: left ascending, right descending
    iv.sort_unstable_by(|a, b| a.0 .0.cmp(&b.0 .0).then(b.0 .1.cmp(&a.0 .1)));
    // Fenwick tree over reversed right ranks holding the max layer seen
    let mut tree = vec![0u32; n + 1];
    let query = |tree: &Vec<u32>, mut i: usize| {
        let mut best = 0;
        while i > 0 {
            best = best.max(tree[i]);
            i &= i - 1;
        }
        best
    };
    let mut assign = BTreeMap::new();
    let mut nodes = 0;
    let mut idx = 0;
    while idx < iv.len() {
        let left = iv[idx].0 .0;
        let mut end = idx;
        while end < iv.len() && iv[end].0 .0 == left {
            end += 1;
        }
        let mut layers = Vec::with_capacity(end - idx);
        for &((_, r), e) in &iv[idx..end] {
            // enclosing edges have right rank > r, i.e. reversed index < n-1-r
            let depth = query(&tree, n - 1 - r as usize);
            layers.push((r, depth + 1));
            assign.insert(e, depth as QueueId);
            nodes += 1;
        }
        for (r, layer) in layers {
            let mut i = n - r as usize;
            while i <= n {
                tree[i] = tree[i].max(layer);
                i += i & i.wrapping_neg();
            }
        }
        idx = end;
    }
    let layout = QueueLayout::new(ord.clone(), assign);
    SolveResult {
        value: layout.queue_count() as u32,
        witness: layout,
        stats: SolveStats {
            nodes,
            elapsed: start.elapsed(),
        },
        exact: true,
    }
}

struct Control<'a> {
    best_task: &'a AtomicUsize,
    task: usize,
    deadline: Option<Instant>,
    timed_out: &'a AtomicBool,
}

impl Control<'_> {
    fn should_stop(&self) -> bool {
        if self.best_task.load(Ordering::Relaxed) < self.task || self.timed_out.load(Ordering::Relaxed) {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }
}

struct TaskOutcome {
    found: Option<QueueLayout>,
    nodes: u64,
}

/// Spine prefixes of length two, in lexicographic order, consistent with the
/// reversal pruning `first < last`.
fn prefix_tasks(n: usize) -> Vec<Vec<Vertex>> {
    if n <= 2 {
        return vec![if n == 2 { vec![0, 1] } else { (0..n as Vertex).collect() }];
    }
    let mut out = Vec::new();
    for a in 0..n as Vertex {
        for b in 0..n as Vertex {
            if a != b && a + 1 < n as Vertex {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

/// Runs one search per prefix and keeps the lexicographically first success,
/// so the result does not depend on scheduling.
fn drive<F>(n: usize, budget: Option<Duration>, parallel: bool, run: F) -> (Option<QueueLayout>, u64, bool)
where
    F: Fn(&[Vertex], &Control) -> TaskOutcome + Sync,
{
    let tasks = prefix_tasks(n);
    let best_task = AtomicUsize::new(usize::MAX);
    let timed_out = AtomicBool::new(false);
    let deadline = budget.map(|b| Instant::now() + b);
    let work = |(i, prefix): (usize, &Vec<Vertex>)| {
        let ctl = Control {
            best_task: &best_task,
            task: i,
            deadline,
            timed_out: &timed_out,
        };
        if ctl.should_stop() {
            return TaskOutcome { found: None, nodes: 0 };
        }
        let out = run(prefix, &ctl);
        if out.found.is_some() {
            best_task.fetch_min(i, Ordering::Relaxed);
        }
        out
    };
    let outcomes: Vec<TaskOutcome> = if parallel {
        tasks.par_iter().enumerate().map(work).collect()
    } else {
        tasks.iter().enumerate().map(work).collect()
    };
    let timed_out = timed_out.load(Ordering::Relaxed);
    let mut nodes = 0;
    for out in outcomes {
        nodes += out.nodes;
        if out.found.is_some() {
            return (out.found, nodes, timed_out);
        }
    }
    (None, nodes, timed_out)
}

/// Shared spine-building state.
struct Spine<'a> {
    n: usize,
    adj: &'a [Vec<Vertex>],
    rank: Vec<u32>,
    order: Vec<Vertex>,
    prefix: &'a [Vertex],
    fixed: Option<&'a [Vertex]>,
    nodes: u64,
    stopped: bool,
}

const UNPLACED: u32 = u32::MAX;

impl<'a> Spine<'a> {
    fn new(n: usize, adj: &'a [Vec<Vertex>], prefix: &'a [Vertex], fixed: Option<&'a [Vertex]>) -> Self {
        Spine {
            n,
            adj,
            rank: vec![UNPLACED; n],
            order: Vec::with_capacity(n),
            prefix,
            fixed,
            nodes: 0,
            stopped: false,
        }
    }

    fn candidates(&self, pos: usize) -> Vec<Vertex> {
        if let Some(f) = self.fixed {
            return vec![f[pos]];
        }
        if pos < self.prefix.len() {
            return vec![self.prefix[pos]];
        }
        let last = pos + 1 == self.n && self.n >= 2;
        (0..self.n as Vertex)
            .filter(|&v| self.rank[v as usize] == UNPLACED && (!last || v > self.order[0]))
            .collect()
    }

    fn tick(&mut self, ctl: Option<&Control>) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && ctl.is_some_and(|c| c.should_stop()) {
            self.stopped = true;
        }
        !self.stopped
    }

    fn push(&mut self, v: Vertex) -> Vec<Vertex> {
        let pos = self.order.len() as u32;
        self.rank[v as usize] = pos;
        self.order.push(v);
        let mut lefts: Vec<Vertex> = self.adj[v as usize]
            .iter()
            .copied()
            .filter(|&u| self.rank[u as usize] < pos)
            .collect();
        lefts.sort_unstable_by_key(|&u| self.rank[u as usize]);
        lefts
    }

    fn pop(&mut self) {
        let v = self.order.pop().unwrap();
        self.rank[v as usize] = UNPLACED;
    }
}

struct LocalSearch<'a> {
    spine: Spine<'a>,
    ell: u32,
    maxleft: Vec<i64>,
    vmask: Vec<u128>,
    stack: Vec<(Vertex, Vertex, u32)>,
}

impl LocalSearch<'_> {
    fn place(&mut self, ctl: Option<&Control>) -> bool {
        let pos = self.spine.order.len();
        if pos == self.spine.n {
            return true;
        }
        if !self.spine.tick(ctl) {
            return false;
        }
        for v in self.spine.candidates(pos) {
            let lefts = self.spine.push(v);
            if self.assign(v, &lefts, 0, ctl) {
                return true;
            }
            self.spine.pop();
            if self.spine.stopped {
                return false;
            }
        }
        false
    }

    fn assign(&mut self, v: Vertex, lefts: &[Vertex], i: usize, ctl: Option<&Control>) -> bool {
        if i == lefts.len() {
            let new = &self.stack[self.stack.len() - lefts.len()..];
            let mut saved = Vec::with_capacity(new.len());
            for &(u, _, q) in new {
                let lu = self.spine.rank[u as usize] as i64;
                saved.push((q as usize, self.maxleft[q as usize]));
                self.maxleft[q as usize] = self.maxleft[q as usize].max(lu);
            }
            let ok = self.place(ctl);
            for (q, old) in saved.into_iter().rev() {
                self.maxleft[q] = old;
            }
            return ok;
        }
        let u = lefts[i];
        let lu = self.spine.rank[u as usize] as i64;
        let qcount = self.maxleft.len();
        for q in 0..=qcount.min(MAX_QUEUES - 1) {
            let fresh = q == qcount;
            if !fresh && lu < self.maxleft[q] {
                continue;
            }
            let bit = 1u128 << q;
            let (mu, mv) = (self.vmask[u as usize], self.vmask[v as usize]);
            if (mu | bit).count_ones() > self.ell || (mv | bit).count_ones() > self.ell {
                continue;
            }
            self.vmask[u as usize] |= bit;
            self.vmask[v as usize] |= bit;
            if fresh {
                self.maxleft.push(-1);
            }
            self.stack.push((u, v, q as u32));
            if self.assign(v, lefts, i + 1, ctl) {
                return true;
            }
            self.stack.pop();
            if fresh {
                self.maxleft.pop();
            }
            self.vmask[u as usize] = mu;
            self.vmask[v as usize] = mv;
            if self.spine.stopped {
                return false;
            }
        }
        false
    }

    fn layout(&self) -> QueueLayout {
        let order = LinearOrder::new(self.spine.order.clone()).expect("complete spine");
        let assign = self.stack.iter().map(|&(u, v, q)| (Edge::new(u, v), q)).collect();
        QueueLayout::new(order, assign).canonicalize()
    }
}

fn local_search<'a>(
    adj: &'a [Vec<Vertex>],
    ell: u32,
    prefix: &'a [Vertex],
    fixed: Option<&'a [Vertex]>,
    ctl: Option<&Control>,
) -> TaskOutcome {
    let n = adj.len();
    let mut s = LocalSearch {
        spine: Spine::new(n, adj, prefix, fixed),
        ell,
        maxleft: Vec::new(),
        vmask: vec![0; n],
        stack: Vec::new(),
    };
    let ok = s.place(ctl);
    TaskOutcome {
        found: ok.then(|| s.layout()),
        nodes: s.spine.nodes,
    }
}

/// A layout on the given spine in which every vertex sees at most `ell`
/// queues, or `None` if no such assignment exists.
pub fn min_locality_for_order(g: &Graph, ord: &LinearOrder, ell: u32) -> Option<QueueLayout> {
    assert_eq!(ord.len(), g.n(), "order must cover the graph");
    let adj = g.adjacency();
    local_search(&adj, ell, &[], Some(ord.vertices()), None).found
}

fn trivial_result(g: &Graph, start: Instant) -> SolveResult {
    SolveResult {
        value: 0,
        witness: QueueLayout::new(LinearOrder::identity(g.n()), BTreeMap::new()),
        stats: SolveStats {
            nodes: 0,
            elapsed: start.elapsed(),
        },
        exact: true,
    }
}

/// Exact local queue number by iterative deepening on the locality bound.
pub fn exact_lqn(g: &Graph, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    if g.n() > opts.cap {
        return Err(SolverError::TooLarge { n: g.n(), cap: opts.cap });
    }
    if g.edge_count() == 0 {
        return Ok(trivial_result(g, start));
    }
    let lower = (mad(g).expect("nonempty graph") / 4).ceil().to_integer().max(1) as u32;
    let star = stars_to_queues(g, &degeneracy_star_partition(g), &LinearOrder::identity(g.n()))
        .expect("degeneracy partition covers the graph")
        .canonicalize();
    let upper = layout_locality(&star);
    let adj = g.adjacency();
    let mut nodes = 0;
    for ell in lower..upper {
        let (found, used, timed_out) = drive(g.n(), opts.budget, opts.parallel, |prefix, ctl| {
            local_search(&adj, ell, prefix, None, Some(ctl))
        });
        nodes += used;
        if let Some(witness) = found {
            return Ok(SolveResult {
                value: ell,
                witness,
                stats: SolveStats {
                    nodes,
                    elapsed: start.elapsed(),
                },
                exact: true,
            });
        }
        if timed_out {
            return Ok(SolveResult {
                value: upper,
                witness: star,
                stats: SolveStats {
                    nodes,
                    elapsed: start.elapsed(),
                },
                exact: false,
            });
        }
    }
    Ok(SolveResult {
        value: upper,
        witness: star,
        stats: SolveStats {
            nodes,
            elapsed: start.elapsed(),
        },
        exact: true,
    })
}

struct RainbowSearch<'a> {
    spine: Spine<'a>,
    bound: u32,
    /// deepest chain ending at an edge with the given left rank
    by_left: Vec<u32>,
    stack: Vec<(Vertex, Vertex, u32)>,
}

impl RainbowSearch<'_> {
    fn place(&mut self, ctl: Option<&Control>) -> bool {
        let pos = self.spine.order.len();
        if pos == self.spine.n {
            return true;
        }
        if !self.spine.tick(ctl) {
            return false;
        }
        for v in self.spine.candidates(pos) {
            let lefts = self.spine.push(v);
            let mut ok = true;
            let mut depths = Vec::with_capacity(lefts.len());
            for &u in &lefts {
                let lu = self.spine.rank[u as usize] as usize;
                let inner = self.by_left[lu + 1..pos].iter().copied().max().unwrap_or(0);
                if inner + 1 > self.bound {
                    ok = false;
                    break;
                }
                depths.push((u, inner + 1));
            }
            if ok {
                let saved: Vec<(usize, u32)> = depths
                    .iter()
                    .map(|&(u, d)| {
                        let lu = self.spine.rank[u as usize] as usize;
                        let old = self.by_left[lu];
                        self.by_left[lu] = old.max(d);
                        (lu, old)
                    })
                    .collect();
                for &(u, d) in &depths {
                    self.stack.push((u, v, d - 1));
                }
                if self.place(ctl) {
                    return true;
                }
                self.stack.truncate(self.stack.len() - depths.len());
                for (lu, old) in saved.into_iter().rev() {
                    self.by_left[lu] = old;
                }
            }
            self.spine.pop();
            if self.spine.stopped {
                return false;
            }
        }
        false
    }
}

fn rainbow_search(adj: &[Vec<Vertex>], bound: u32, prefix: &[Vertex], ctl: &Control) -> TaskOutcome {
    let n = adj.len();
    let mut s = RainbowSearch {
        spine: Spine::new(n, adj, prefix, None),
        bound,
        by_left: vec![0; n],
        stack: Vec::new(),
    };
    let ok = s.place(Some(ctl));
    let found = ok.then(|| {
        let order = LinearOrder::new(s.spine.order.clone()).expect("complete spine");
        let assign = s.stack.iter().map(|&(u, v, q)| (Edge::new(u, v), q)).collect();
        QueueLayout::new(order, assign).canonicalize()
    });
    TaskOutcome {
        found,
        nodes: s.spine.nodes,
    }
}

/// Exact queue number: the minimum over spines of the largest rainbow.
pub fn exact_qn(g: &Graph, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    if g.n() > opts.cap {
        return Err(SolverError::TooLarge { n: g.n(), cap: opts.cap });
    }
    if g.edge_count() == 0 {
        return Ok(trivial_result(g, start));
    }
    let (n, m) = (g.n(), g.edge_count());
    // a queue on q vertices holds at most 2q - 3 edges
    let lower = if n >= 2 { m.div_ceil(2 * n - 3).max(1) as u32 } else { 1 };
    let fallback = min_queues_for_order(g, &LinearOrder::identity(n));
    let upper = fallback.value;
    let adj = g.adjacency();
    let mut nodes = fallback.stats.nodes;
    for bound in lower..upper {
        let (found, used, timed_out) = drive(n, opts.budget, opts.parallel, |prefix, ctl| {
            rainbow_search(&adj, bound, prefix, ctl)
        });
        nodes += used;
        if let Some(witness) = found {
            return Ok(SolveResult {
                value: bound,
                witness,
                stats: SolveStats {
                    nodes,
                    elapsed: start.elapsed(),
                },
                exact: true,
            });
        }
        if timed_out {
            return Ok(SolveResult {
                value: upper,
                witness: fallback.witness.canonicalize(),
                stats: SolveStats {
                    nodes,
                    elapsed: start.elapsed(),
                },
                exact: false,
            });
        }
    }
    Ok(SolveResult {
        value: upper,
        witness: fallback.witness.canonicalize(),
        stats: SolveStats {
            nodes,
            elapsed: start.elapsed(),
        },
        exact: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{max_rainbow, validate_layout, Validation};

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn per_order_examples() {
        let k3 = Graph::complete(3);
        assert_eq!(min_queues_for_order(&k3, &LinearOrder::identity(3)).value, 1);
        let k4 = Graph::complete(4);
        assert_eq!(min_queues_for_order(&k4, &LinearOrder::identity(4)).value, 2);
        let rb = Graph::new(6, [(0, 5), (1, 4), (2, 3)]).unwrap();
        let r = min_queues_for_order(&rb, &LinearOrder::identity(6));
        assert_eq!(r.value, 3);
        assert_eq!(max_rainbow(&rb, &LinearOrder::identity(6)).0, 3);
        assert_eq!(validate_layout(&rb, &r.witness, None).unwrap(), Validation::Ok);
    }

    #[test]
    fn locality_per_order() {
        assert!(min_locality_for_order(&Graph::complete(3), &LinearOrder::identity(3), 1).is_some());
        let k4 = Graph::complete(4);
        for perm in [[0, 1, 2, 3], [2, 0, 3, 1], [3, 1, 0, 2]] {
            let ord = LinearOrder::new(perm.to_vec()).unwrap();
            assert!(min_locality_for_order(&k4, &ord, 1).is_none());
            let l = min_locality_for_order(&k4, &ord, 2).unwrap();
            assert_eq!(validate_layout(&k4, &l, Some(2)).unwrap(), Validation::Ok);
        }
    }

    #[test]
    fn exact_examples() {
        assert_eq!(exact_lqn(&Graph::complete(3), &opts()).unwrap().value, 1);
        assert_eq!(exact_lqn(&Graph::complete(4), &opts()).unwrap().value, 2);
        assert_eq!(exact_lqn(&Graph::star(9), &opts()).unwrap().value, 1);
        assert_eq!(exact_qn(&Graph::complete(3), &opts()).unwrap().value, 1);
        assert_eq!(exact_qn(&Graph::complete(4), &opts()).unwrap().value, 2);
        assert_eq!(exact_qn(&Graph::path(6), &opts()).unwrap().value, 1);
        assert!(matches!(
            exact_lqn(&Graph::empty(11), &opts()),
            Err(SolverError::TooLarge { .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = Graph::complete(5);
        let seq = SolveOptions {
            parallel: false,
            ..opts()
        };
        let a = exact_lqn(&g, &seq).unwrap();
        let b = exact_lqn(&g, &opts()).unwrap();
        assert_eq!((a.value, &a.witness, a.stats.nodes), (b.value, &b.witness, b.stats.nodes));
        let a = exact_qn(&g, &seq).unwrap();
        let b = exact_qn(&g, &opts()).unwrap();
        assert_eq!((a.value, &a.witness), (b.value, &b.witness));
    }
}
