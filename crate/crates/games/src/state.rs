//! Game configuration, positions and moves.
//!
//! A position holds the graph grown so far together with Bob's layout of it.
//! Vertices are numbered in creation order. In a round with `m` children the
//! new left children get ids `n..n+m` in placement order, and in paired games
//! their copies get ids `n+m..n+2m` in the same order.

use std::collections::BTreeMap;

use queuelay_core::graph::{Edge, Graph, Vertex};
use queuelay_core::ktree::{ConstructionSequence, Step};
use queuelay_core::layout::{LinearOrder, QueueId, QueueLayout};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Level = u8;

pub const LEVEL_NAMES: [&str; 7] = ["i", "ii", "iii", "iv", "v", "vi", "vii"];

pub fn parse_level(s: &str) -> Option<Level> {
    if let Some(i) = LEVEL_NAMES.iter().position(|&n| n.eq_ignore_ascii_case(s)) {
        return Some(i as Level + 1);
    }
    s.parse::<Level>().ok().filter(|l| (1..=7).contains(l))
}

pub fn level_name(level: Level) -> &'static str {
    LEVEL_NAMES[(level as usize).clamp(1, 7) - 1]
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid Alice move: {0}")]
    InvalidAliceMove(String),
    #[error("invalid Bob move: {0}")]
    InvalidBobMove(String),
    #[error("strategy does not fit the configuration: {0}")]
    ConfigMismatch(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("pigeonhole failure: {0}")]
    PigeonholeFailure(String),
    #[error("reduction gap: {0}")]
    ReductionGap(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_vertices: usize,
    pub max_rounds: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_vertices: 64,
            max_rounds: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: usize,
    pub ell: u32,
    /// Conditions `1..=level` are active.
    pub level: Level,
    pub caps: Caps,
}

impl GameConfig {
    pub fn new(k: usize, ell: u32, level: Level) -> Result<Self, GameError> {
        let cfg = GameConfig {
            k,
            ell,
            level,
            caps: Caps::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        self
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(1..=7).contains(&self.level) {
            return Err(GameError::InvalidConfig(format!("level {} outside 1..=7", self.level)));
        }
        if self.k == 0 || self.ell == 0 {
            return Err(GameError::InvalidConfig("k and l must be positive".into()));
        }
        if self.level >= 5 && self.ell as usize > self.k {
            return Err(GameError::InvalidConfig(format!(
                "l = {} exceeds k = {} at level {}",
                self.ell,
                self.k,
                level_name(self.level)
            )));
        }
        Ok(())
    }

    pub fn paired(&self) -> bool {
        self.level >= 6
    }

    pub fn active(&self, condition: Level) -> bool {
        self.level >= condition
    }

    pub fn at_level(&self, level: Level) -> Self {
        GameConfig { level, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// `clique` is a k-clique of the left graph; in paired games its copy gets
/// the same number of children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AliceMove {
    pub clique: Vec<Vertex>,
    pub m: usize,
}

impl AliceMove {
    pub fn new(mut clique: Vec<Vertex>, m: usize) -> Self {
        clique.sort_unstable();
        AliceMove { clique, m }
    }
}

/// `ranks[i]` is the final spine position of the i-th new vertex.
/// `queues` follows [`GameState::new_edges`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BobMove {
    pub ranks: Vec<u32>,
    pub queues: Vec<QueueId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub clique: Vec<Vertex>,
    pub copy_clique: Option<Vec<Vertex>>,
    pub m: usize,
    pub children: Vec<Vertex>,
    pub copy_children: Vec<Vertex>,
}

/// A new edge of a round: `clique_vertex` joined to `child`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewEdge {
    pub edge: Edge,
    pub child: Vertex,
    pub clique_vertex: Vertex,
    /// Index of the child among the new vertices of its side.
    pub twin: usize,
    pub side: Side,
    /// Index of the left edge this one copies (right edges only).
    pub copy_of: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    pub k: usize,
    pub paired: bool,
    parent: Vec<Option<Vec<Vertex>>>,
    side: Vec<Side>,
    copy: Vec<Option<Vertex>>,
    round_of: Vec<u32>,
    init: [Vec<Vertex>; 2],
    pub layout: QueueLayout,
    pub rounds: Vec<RoundRecord>,
}

impl GameState {
    /// The initial clique(s) laid out by `order` and `assign`.
    /// Unpaired: vertices `0..k`. Paired: left `0..k`, right `k..2k` with
    /// `copy(i) = i + k`.
    pub fn initial(
        k: usize,
        paired: bool,
        order: Vec<Vertex>,
        assign: BTreeMap<Edge, QueueId>,
    ) -> Result<Self, GameError> {
        let n = if paired { 2 * k } else { k };
        let order = LinearOrder::new(order).map_err(|e| GameError::InvalidBobMove(e.to_string()))?;
        if order.len() != n {
            return Err(GameError::InvalidBobMove(format!("initial order must have {n} vertices")));
        }
        let left: Vec<Vertex> = (0..k as Vertex).collect();
        let right: Vec<Vertex> = if paired { (k as Vertex..n as Vertex).collect() } else { vec![] };
        let mut expected: Vec<Edge> = Vec::new();
        for side in [&left, &right] {
            for (i, &a) in side.iter().enumerate() {
                for &b in &side[i + 1..] {
                    expected.push(Edge::new(a, b));
                }
            }
        }
        expected.sort();
        if assign.keys().copied().collect::<Vec<_>>() != expected {
            return Err(GameError::InvalidBobMove("initial assignment must cover the clique edges".into()));
        }
        let mut side = vec![Side::Left; n];
        let mut copy = vec![None; n];
        if paired {
            for i in 0..k {
                side[k + i] = Side::Right;
                copy[i] = Some((k + i) as Vertex);
                copy[k + i] = Some(i as Vertex);
            }
        }
        Ok(GameState {
            k,
            paired,
            parent: vec![None; n],
            side,
            copy,
            round_of: vec![0; n],
            init: [left, right],
            layout: QueueLayout::new(order, assign),
            rounds: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.rounds.len()
    }

    pub fn init_clique(&self, side: Side) -> &[Vertex] {
        &self.init[side as usize]
    }

    pub fn parent_of(&self, v: Vertex) -> Option<&[Vertex]> {
        self.parent[v as usize].as_deref()
    }

    pub fn side_of(&self, v: Vertex) -> Side {
        self.side[v as usize]
    }

    pub fn copy_of(&self, v: Vertex) -> Option<Vertex> {
        self.copy[v as usize]
    }

    /// 0 for initial vertices, otherwise the 1-based round that created `v`.
    pub fn round_of(&self, v: Vertex) -> u32 {
        self.round_of[v as usize]
    }

    pub fn position(&self, v: Vertex) -> u32 {
        self.layout.order.rank(v)
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        a != b && self.layout.assign.contains_key(&Edge::new(a, b))
    }

    pub fn queue(&self, a: Vertex, b: Vertex) -> Option<QueueId> {
        self.layout.assign.get(&Edge::new(a, b)).copied()
    }

    /// Queue ids in use are always `0..queue_count()`.
    pub fn queue_count(&self) -> u32 {
        self.layout.assign.values().map(|&q| q + 1).max().unwrap_or(0)
    }

    pub fn graph(&self) -> Graph {
        Graph::new(self.n(), self.layout.assign.keys().map(|e| (e.lo(), e.hi())))
            .expect("game graphs are simple")
    }

    pub fn is_clique(&self, vs: &[Vertex]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(i, &a)| vs[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }

    pub fn vertices_of(&self, side: Side) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n() as Vertex).filter(move |&v| self.side[v as usize] == side)
    }

    /// Children whose parent clique contains `v`.
    pub fn children_of(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n() as Vertex).filter(move |&x| self.parent[x as usize].as_ref().is_some_and(|p| p.contains(&v)))
    }

    /// The left clique of a move and, in paired games, its copy.
    pub fn check_alice_move(&self, mv: &AliceMove) -> Result<(Vec<Vertex>, Option<Vec<Vertex>>), GameError> {
        let bad = |msg: String| Err(GameError::InvalidAliceMove(msg));
        if mv.m == 0 {
            return bad("m must be at least 1".into());
        }
        let mut c = mv.clique.clone();
        c.sort_unstable();
        c.dedup();
        if c.len() != self.k || mv.clique.len() != self.k {
            return bad(format!("clique {:?} does not have {} distinct vertices", mv.clique, self.k));
        }
        if c.iter().any(|&v| v as usize >= self.n()) {
            return bad(format!("clique {:?} names unknown vertices", mv.clique));
        }
        if !self.is_clique(&c) {
            return bad(format!("{c:?} is not a clique"));
        }
        if self.paired {
            if c.iter().any(|&v| self.side_of(v) != Side::Left) {
                return bad(format!("{c:?} is not in the left graph"));
            }
            let mut cc: Vec<Vertex> = c.iter().map(|&v| self.copy_of(v).expect("paired")).collect();
            cc.sort_unstable();
            Ok((c, Some(cc)))
        } else {
            Ok((c, None))
        }
    }

    /// Ids of the new left children and right children of a move.
    pub fn new_vertices(&self, mv: &AliceMove) -> (Vec<Vertex>, Vec<Vertex>) {
        let n = self.n() as Vertex;
        let m = mv.m as Vertex;
        let left = (n..n + m).collect();
        let right = if self.paired { (n + m..n + 2 * m).collect() } else { vec![] };
        (left, right)
    }

    /// New edges in canonical order: left children first, each child's edges
    /// by clique vertex id, then the right children the same way.
    pub fn new_edges(&self, mv: &AliceMove) -> Vec<NewEdge> {
        let (left, right) = self.new_vertices(mv);
        let mut clique = mv.clique.clone();
        clique.sort_unstable();
        let mut out = Vec::with_capacity((left.len() + right.len()) * clique.len());
        for (i, &x) in left.iter().enumerate() {
            for &c in &clique {
                out.push(NewEdge {
                    edge: Edge::new(c, x),
                    child: x,
                    clique_vertex: c,
                    twin: i,
                    side: Side::Left,
                    copy_of: None,
                });
            }
        }
        if !right.is_empty() {
            let k = clique.len();
            for (i, &y) in right.iter().enumerate() {
                // sort the copy clique by the ids of the originals so that
                // edge j of y copies edge j of x
                for (j, &c) in clique.iter().enumerate() {
                    let cc = self.copy_of(c).expect("paired");
                    out.push(NewEdge {
                        edge: Edge::new(cc, y),
                        child: y,
                        clique_vertex: cc,
                        twin: i,
                        side: Side::Right,
                        copy_of: Some(i * k + j),
                    });
                }
            }
        }
        out
    }

    /// Applies a move without checking any game condition.
    pub fn apply(&self, mv: &AliceMove, bob: &BobMove) -> Result<GameState, GameError> {
        let (c, cc) = self.check_alice_move(mv)?;
        let (left, right) = self.new_vertices(mv);
        let t = left.len() + right.len();
        let total = self.n() + t;
        let edges = self.new_edges(mv);
        if bob.ranks.len() != t {
            return Err(GameError::InvalidBobMove(format!("expected {t} ranks, got {}", bob.ranks.len())));
        }
        if bob.queues.len() != edges.len() {
            return Err(GameError::InvalidBobMove(format!(
                "expected {} queue ids, got {}",
                edges.len(),
                bob.queues.len()
            )));
        }
        let mut slots: Vec<Option<Vertex>> = vec![None; total];
        for (i, &r) in bob.ranks.iter().enumerate() {
            let r = r as usize;
            if r >= total || slots[r].is_some() {
                return Err(GameError::InvalidBobMove(format!("rank {r} is out of range or repeated")));
            }
            slots[r] = Some((self.n() + i) as Vertex);
        }
        let mut old = self.layout.order.vertices().iter().copied();
        let order: Vec<Vertex> = slots
            .into_iter()
            .map(|s| s.unwrap_or_else(|| old.next().expect("slot count matches")))
            .collect();
        let mut next = self.clone();
        next.layout.order = LinearOrder::new(order).expect("merge of two permutations");
        for (ne, &q) in edges.iter().zip(&bob.queues) {
            next.layout.assign.insert(ne.edge, q);
        }
        let round = self.rounds.len() as u32 + 1;
        for _ in &left {
            next.parent.push(Some(c.clone()));
            next.side.push(Side::Left);
            next.copy.push(None);
            next.round_of.push(round);
        }
        for (i, &y) in right.iter().enumerate() {
            next.parent.push(cc.clone());
            next.side.push(Side::Right);
            next.copy.push(Some(left[i]));
            next.round_of.push(round);
            next.copy[left[i] as usize] = Some(y);
        }
        next.rounds.push(RoundRecord {
            clique: c,
            copy_clique: cc,
            m: mv.m,
            children: left,
            copy_children: right,
        });
        Ok(next)
    }

    /// The move that produced round `r` (0-based) and Bob's reply to it.
    pub fn replay_round(&self, r: usize) -> (AliceMove, BobMove) {
        let rec = &self.rounds[r];
        let mv = AliceMove::new(rec.clique.clone(), rec.m);
        let new: Vec<Vertex> = rec.children.iter().chain(&rec.copy_children).copied().collect();
        let keep = |v: Vertex| self.round_of(v) <= r as u32 + 1;
        let order: Vec<Vertex> = self.layout.order.vertices().iter().copied().filter(|&v| keep(v)).collect();
        let ranks = new
            .iter()
            .map(|&v| order.iter().position(|&u| u == v).expect("present") as u32)
            .collect();
        let prefix = self.prefix(r);
        let queues = prefix
            .new_edges(&mv)
            .iter()
            .map(|ne| self.layout.assign[&ne.edge])
            .collect();
        (mv, BobMove { ranks, queues })
    }

    /// The position after the first `r` rounds.
    pub fn prefix(&self, r: usize) -> GameState {
        let n = self.round_of.iter().filter(|&&x| x as usize <= r).count();
        let order: Vec<Vertex> = self
            .layout
            .order
            .vertices()
            .iter()
            .copied()
            .filter(|&v| (v as usize) < n)
            .collect();
        let assign = self
            .layout
            .assign
            .iter()
            .filter(|(e, _)| (e.hi() as usize) < n)
            .map(|(&e, &q)| (e, q))
            .collect();
        let mut copy: Vec<Option<Vertex>> = self.copy[..n].to_vec();
        for c in copy.iter_mut() {
            if c.is_some_and(|w| w as usize >= n) {
                *c = None;
            }
        }
        GameState {
            k: self.k,
            paired: self.paired,
            parent: self.parent[..n].to_vec(),
            side: self.side[..n].to_vec(),
            copy,
            round_of: self.round_of[..n].to_vec(),
            init: self.init.clone(),
            layout: QueueLayout::new(LinearOrder::new(order).expect("prefix of ids"), assign),
            rounds: self.rounds[..r].to_vec(),
        }
    }

    /// The left graph as a construction sequence, once the first round has
    /// turned the initial k-clique into a (k+1)-clique. Ids are kept.
    pub fn sequence(&self) -> Option<ConstructionSequence> {
        let first = self.rounds.first()?;
        let k = self.k;
        let mut init: Vec<Vertex> = self.init[0].clone();
        init.push(first.children[0]);
        if init.iter().enumerate().any(|(i, &v)| v as usize != i) {
            return None;
        }
        let steps = (0..self.n() as Vertex)
            .filter(|&v| v as usize > k && self.side_of(v) == Side::Left)
            .map(|v| Step {
                parent: self.parent_of(v).expect("non-initial").to_vec(),
                child: v,
            })
            .collect::<Vec<_>>();
        // ids of left vertices must be contiguous for a sequence
        if steps.iter().enumerate().any(|(i, s)| s.child as usize != k + 1 + i) {
            return None;
        }
        Some(ConstructionSequence { k, init, steps })
    }
}

/// Every layout of the initial clique(s) Bob may choose, up to queue
/// relabeling. Paired games interleave the cliques as v1 w1 v2 w2 ...
pub fn initial_layouts(cfg: &GameConfig) -> Vec<GameState> {
    let k = cfg.k;
    let mut edges = Vec::new();
    for a in 0..k as Vertex {
        for b in a + 1..k as Vertex {
            edges.push(Edge::new(a, b));
        }
    }
    let mut out = Vec::new();
    for perm in permutations(k) {
        let order: Vec<Vertex> = if cfg.paired() {
            perm.iter().flat_map(|&v| [v, v + k as Vertex]).collect()
        } else {
            perm.clone()
        };
        for qs in restricted_growth(edges.len()) {
            let mut assign: BTreeMap<Edge, QueueId> = edges.iter().copied().zip(qs.iter().copied()).collect();
            if cfg.paired() {
                for (&e, &q) in edges.iter().zip(&qs) {
                    assign.insert(Edge::new(e.lo() + k as Vertex, e.hi() + k as Vertex), q);
                }
            }
            let st = GameState::initial(k, cfg.paired(), order.clone(), assign).expect("well formed");
            let g = st.graph();
            if queuelay_core::layout::validate_layout(&g, &st.layout, Some(cfg.ell))
                .expect("layout covers the graph")
                .is_ok()
            {
                out.push(st);
            }
        }
    }
    out
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<Vertex>> {
    fn rec(cur: &mut Vec<Vertex>, used: &mut [bool], out: &mut Vec<Vec<Vertex>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v as Vertex);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Restricted growth strings of length `len`.
pub(crate) fn restricted_growth(len: usize) -> Vec<Vec<QueueId>> {
    let mut out = Vec::new();
    fn rec(cur: &mut Vec<QueueId>, len: usize, next: QueueId, out: &mut Vec<Vec<QueueId>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for q in 0..=next {
            cur.push(q);
            rec(cur, len, next.max(q + 1), out);
            cur.pop();
        }
    }
    rec(&mut Vec::new(), len, 0, &mut out);
    out
}
