//! The game conditions and Bob's legal replies.
//!
//! Condition numbers follow the game levels: a game at level `n` enforces
//! conditions `1..=n`. Replies are canonical: twins are named in placement
//! order and fresh queue ids appear in increasing order along
//! [`GameState::new_edges`].

use queuelay_core::graph::Vertex;
use queuelay_core::layout::{validate_layout, QueueId, Validation};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::state::{AliceMove, BobMove, GameConfig, GameError, GameState, Side};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: u8,
    pub detail: String,
}

fn violation(condition: u8, detail: String) -> Option<Violation> {
    Some(Violation { condition, detail })
}

/// Conditions on the vertex order only: (ii), (iii), the placement half of
/// (v) and the alternation of (vi). `next` is `before` with the last round applied.
pub fn placement_violation(before: &GameState, next: &GameState, cfg: &GameConfig) -> Option<Violation> {
    let rec = next.rounds.last().expect("a round was played");
    let pos = |v: Vertex| next.position(v);
    let sides: Vec<(Side, &[Vertex], Option<&Vec<Vertex>>)> = if next.paired {
        vec![
            (Side::Left, &rec.children[..], Some(&rec.clique)),
            (Side::Right, &rec.copy_children[..], rec.copy_clique.as_ref()),
        ]
    } else {
        vec![(Side::Left, &rec.children[..], Some(&rec.clique))]
    };
    if cfg.active(2) && before.round() == 0 {
        for &(side, kids, _) in &sides {
            let init_max = next.init_clique(side).iter().map(|&v| pos(v)).max().unwrap_or(0);
            if let Some(&x) = kids.iter().find(|&&x| pos(x) < init_max) {
                return violation(2, format!("vertex {x} is not right of the initial clique"));
            }
        }
    }
    if cfg.active(3) {
        for &(side, kids, _) in &sides {
            let lo = kids.iter().map(|&x| pos(x)).min().expect("m >= 1");
            let hi = kids.iter().map(|&x| pos(x)).max().expect("m >= 1");
            if let Some(y) = before.vertices_of(side).find(|&y| lo < pos(y) && pos(y) < hi) {
                return violation(3, format!("old vertex {y} lies between new twins"));
            }
        }
    }
    if cfg.active(5) {
        for &(_, kids, parent) in &sides {
            let parent = parent.expect("both sides have a clique");
            let top = parent.iter().map(|&c| pos(c)).max().expect("k >= 1");
            if let Some(&x) = kids.iter().find(|&&x| pos(x) < top) {
                return violation(5, format!("vertex {x} is not right of its parent clique"));
            }
        }
    }
    if cfg.active(6) {
        for &x in &rec.children {
            for skip in 0..rec.clique.len().max(1) {
                let mut clique: Vec<Vertex> = rec
                    .clique
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &c)| c)
                    .collect();
                if rec.clique.len() == 1 {
                    clique.clear();
                }
                clique.push(x);
                clique.sort_by_key(|&v| pos(v));
                let mut seq = Vec::with_capacity(2 * clique.len());
                for &v in &clique {
                    seq.push(pos(v));
                    seq.push(pos(next.copy_of(v).expect("paired")));
                }
                if seq.windows(2).any(|w| w[0] >= w[1]) {
                    return violation(6, format!("clique {clique:?} and its copy do not alternate"));
                }
            }
        }
    }
    None
}

/// Rule-shaped conditions on the assignment: (iv), the queue half of (v),
/// copy queues of (vi) and (vii). Validity and locality are not checked here.
pub fn assignment_violation(next: &GameState, cfg: &GameConfig) -> Option<Violation> {
    let rec = next.rounds.last().expect("a round was played");
    let mut sides = vec![(&rec.children, &rec.clique)];
    if let Some(cc) = &rec.copy_clique {
        sides.push((&rec.copy_children, cc));
    }
    if cfg.active(4) {
        for &(kids, clique) in &sides {
            for &c in clique {
                let q0 = next.queue(c, kids[0]);
                if let Some(&x) = kids.iter().find(|&&x| next.queue(c, x) != q0) {
                    return violation(4, format!("twin edges {c}-{} and {c}-{x} use different queues", kids[0]));
                }
            }
        }
    }
    if cfg.active(5) {
        for &(kids, clique) in &sides {
            for &x in kids {
                let mut qs: Vec<QueueId> = clique.iter().map(|&c| next.queue(c, x).expect("edge")).collect();
                qs.sort_unstable();
                if qs.windows(2).any(|w| w[0] == w[1]) {
                    return violation(5, format!("edges of vertex {x} share a queue"));
                }
            }
        }
    }
    if cfg.active(6) {
        for &x in &rec.children {
            let y = next.copy_of(x).expect("paired");
            for &c in &rec.clique {
                let cc = next.copy_of(c).expect("paired");
                if next.queue(c, x) != next.queue(cc, y) {
                    return violation(6, format!("edge {c}-{x} and its copy {cc}-{y} use different queues"));
                }
            }
        }
    }
    if cfg.active(7) {
        if let Some(v) = condition_seven(next) {
            return Some(v);
        }
    }
    None
}

/// For a left edge ab with a before b, its copy a'b', and a child x of a to
/// the right of all four endpoints, ax and ab must use different queues.
fn condition_seven(next: &GameState) -> Option<Violation> {
    let pos = |v: Vertex| next.position(v);
    for (&e, &q) in &next.layout.assign {
        let (mut a, mut b) = (e.lo(), e.hi());
        if next.side_of(a) != Side::Left {
            continue;
        }
        if pos(b) < pos(a) {
            std::mem::swap(&mut a, &mut b);
        }
        let (Some(ca), Some(cb)) = (next.copy_of(a), next.copy_of(b)) else {
            continue;
        };
        let right = pos(a).max(pos(b)).max(pos(ca)).max(pos(cb));
        for x in next.children_of(a) {
            if pos(x) > right && next.queue(a, x) == Some(q) {
                return violation(7, format!("edges {a}-{x} and {a}-{b} share queue {q}"));
            }
        }
    }
    None
}

/// Applies a reply and reports the first violated condition, if any.
pub fn check_transition(
    state: &GameState,
    cfg: &GameConfig,
    mv: &AliceMove,
    bob: &BobMove,
) -> Result<(GameState, Option<Violation>), GameError> {
    let next = state.apply(mv, bob)?;
    if let Some(v) = placement_violation(state, &next, cfg) {
        return Ok((next, Some(v)));
    }
    if let Some(v) = assignment_violation(&next, cfg) {
        return Ok((next, Some(v)));
    }
    let v = match validate_layout(&next.graph(), &next.layout, Some(cfg.ell)).expect("layout covers graph") {
        Validation::Ok => None,
        Validation::Rainbow(w) => violation(1, format!("edges {:?} nest in queue {:?}", w.edges, w.queue)),
        Validation::Locality(l) => violation(1, format!("vertex {} sees {} queues", l.vertex, l.queues.len())),
    };
    Ok((next, v))
}

/// Final ranks of the new vertices for every interleaving allowed by the
/// order conditions.
pub fn candidate_placements(state: &GameState, cfg: &GameConfig, mv: &AliceMove) -> Result<Vec<Vec<u32>>, GameError> {
    let (clique, copy_clique) = state.check_alice_move(mv)?;
    let (left, right) = state.new_vertices(mv);
    let old: Vec<Vertex> = state.layout.order.vertices().to_vec();
    let first_round = state.round() == 0;
    let mut m = Merge {
        state,
        old: &old,
        kids: [&left, &right],
        need: [
            needs(cfg, first_round, &clique, state.init_clique(Side::Left)),
            copy_clique
                .as_ref()
                .map(|cc| needs(cfg, first_round, cc, state.init_clique(Side::Right)))
                .unwrap_or_default(),
        ],
        consecutive: cfg.active(3),
        copies_follow: cfg.active(6),
        placed: vec![false; state.n()],
        ranks: vec![0; left.len() + right.len()],
        out: Vec::new(),
    };
    m.rec(0, [0, 0], 0);
    let out = m.out;
    let mut legal = Vec::with_capacity(out.len());
    let dummy = vec![0; state.new_edges(mv).len()];
    for ranks in out {
        let next = state.apply(mv, &BobMove { ranks: ranks.clone(), queues: dummy.clone() })?;
        if placement_violation(state, &next, cfg).is_none() {
            legal.push(ranks);
        }
    }
    Ok(legal)
}

fn needs(cfg: &GameConfig, first_round: bool, clique: &[Vertex], init: &[Vertex]) -> Vec<Vertex> {
    let mut need = Vec::new();
    if cfg.active(5) {
        need.extend_from_slice(clique);
    }
    if cfg.active(2) && first_round {
        need.extend_from_slice(init);
    }
    need
}

struct Merge<'a> {
    state: &'a GameState,
    old: &'a [Vertex],
    kids: [&'a [Vertex]; 2],
    need: [Vec<Vertex>; 2],
    consecutive: bool,
    copies_follow: bool,
    placed: Vec<bool>,
    ranks: Vec<u32>,
    out: Vec<Vec<u32>>,
}

impl Merge<'_> {
    fn rec(&mut self, oi: usize, ki: [usize; 2], slot: u32) {
        let done_old = oi == self.old.len();
        if done_old && ki[0] == self.kids[0].len() && ki[1] == self.kids[1].len() {
            self.out.push(self.ranks.clone());
            return;
        }
        if !done_old {
            let v = self.old[oi];
            let s = self.state.side_of(v) as usize;
            let open = ki[s] > 0 && ki[s] < self.kids[s].len();
            if !(self.consecutive && open) {
                self.placed[v as usize] = true;
                self.rec(oi + 1, ki, slot + 1);
                self.placed[v as usize] = false;
            }
        }
        for s in 0..2 {
            let i = ki[s];
            if i == self.kids[s].len() {
                continue;
            }
            if !self.need[s].iter().all(|&c| self.placed[c as usize]) {
                continue;
            }
            if s == 1 && self.copies_follow && ki[0] <= i {
                continue;
            }
            let idx = if s == 0 { i } else { self.kids[0].len() + i };
            self.ranks[idx] = slot;
            let mut next = ki;
            next[s] += 1;
            self.rec(oi, next, slot + 1);
        }
    }
}

/// Depth-first assignment of queue ids to the new edges of one placement.
struct Assigner<'a> {
    cfg: &'a GameConfig,
    k: usize,
    m: usize,
    edges: Vec<(u32, u32, usize, usize)>,
    copy_of: Vec<Option<usize>>,
    by_queue: Vec<Vec<(u32, u32)>>,
    at_vertex: Vec<Vec<QueueId>>,
    chosen: Vec<QueueId>,
    nodes: u64,
    budget: u64,
    nesting: bool,
}

impl<'a> Assigner<'a> {
    fn new(state: &GameState, cfg: &'a GameConfig, mv: &AliceMove, ranks: &[u32]) -> Self {
        let total = state.n() + ranks.len();
        let mut slots: Vec<Option<Vertex>> = vec![None; total];
        for (i, &r) in ranks.iter().enumerate() {
            slots[r as usize] = Some((state.n() + i) as Vertex);
        }
        let mut pos = vec![0u32; total];
        let mut old = state.layout.order.vertices().iter();
        for (p, s) in slots.into_iter().enumerate() {
            let v = s.unwrap_or_else(|| *old.next().expect("sizes match"));
            pos[v as usize] = p as u32;
        }
        let iv = |a: Vertex, b: Vertex| {
            let (x, y) = (pos[a as usize], pos[b as usize]);
            (x.min(y), x.max(y))
        };
        let mut by_queue: Vec<Vec<(u32, u32)>> = vec![Vec::new(); state.queue_count() as usize];
        let mut at_vertex: Vec<Vec<QueueId>> = vec![Vec::new(); total];
        for (&e, &q) in &state.layout.assign {
            by_queue[q as usize].push(iv(e.lo(), e.hi()));
            for v in [e.lo(), e.hi()] {
                if !at_vertex[v as usize].contains(&q) {
                    at_vertex[v as usize].push(q);
                }
            }
        }
        let new = state.new_edges(mv);
        let edges = new
            .iter()
            .map(|ne| {
                let (a, b) = iv(ne.clique_vertex, ne.child);
                (a, b, ne.clique_vertex as usize, ne.child as usize)
            })
            .collect();
        Assigner {
            cfg,
            k: mv.clique.len(),
            m: mv.m,
            edges,
            copy_of: new.iter().map(|ne| ne.copy_of).collect(),
            by_queue,
            at_vertex,
            chosen: Vec::with_capacity(new.len()),
            nodes: 0,
            budget: u64::MAX,
            nesting: true,
        }
    }

    fn forced(&self, i: usize) -> Option<QueueId> {
        if let Some(j) = self.copy_of[i] {
            if self.cfg.active(6) {
                return Some(self.chosen[j]);
            }
        }
        let block = self.m * self.k;
        let (base, local) = (i / block * block, i % block);
        if self.cfg.active(4) && local >= self.k {
            return Some(self.chosen[base + local % self.k]);
        }
        None
    }

    fn allowed(&self, i: usize, q: QueueId) -> bool {
        let (a, b, c, x) = self.edges[i];
        let ell = self.cfg.ell as usize;
        for v in [c, x] {
            let qs = &self.at_vertex[v];
            if !qs.contains(&q) && qs.len() >= ell {
                return false;
            }
        }
        if self.cfg.active(5) {
            let start = i / self.k * self.k;
            if self.chosen[start..i].contains(&q) {
                return false;
            }
        }
        if !self.nesting {
            return true;
        }
        if let Some(list) = self.by_queue.get(q as usize) {
            for &(l, r) in list {
                if (l < a && b < r) || (a < l && r < b) {
                    return false;
                }
            }
        }
        true
    }

    fn push(&mut self, i: usize, q: QueueId) -> (bool, bool) {
        let (a, b, c, x) = self.edges[i];
        if q as usize == self.by_queue.len() {
            self.by_queue.push(Vec::new());
        }
        self.by_queue[q as usize].push((a, b));
        let mut added = (false, false);
        if !self.at_vertex[c].contains(&q) {
            self.at_vertex[c].push(q);
            added.0 = true;
        }
        if !self.at_vertex[x].contains(&q) {
            self.at_vertex[x].push(q);
            added.1 = true;
        }
        self.chosen.push(q);
        added
    }

    fn pop(&mut self, i: usize, q: QueueId, added: (bool, bool)) {
        let (_, _, c, x) = self.edges[i];
        self.chosen.pop();
        self.by_queue[q as usize].pop();
        if added.0 {
            self.at_vertex[c].pop();
        }
        if added.1 {
            self.at_vertex[x].pop();
        }
        if self.by_queue[q as usize].is_empty() && q as usize + 1 == self.by_queue.len() {
            self.by_queue.pop();
        }
    }

    /// Calls `visit` on complete assignments until it returns false.
    /// Returns false if the search was stopped.
    fn run<R: Rng>(&mut self, rng: &mut Option<R>, visit: &mut dyn FnMut(&[QueueId]) -> bool) -> bool {
        let i = self.chosen.len();
        if i == self.edges.len() {
            return visit(&self.chosen);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let mut cands: Vec<QueueId> = match self.forced(i) {
            Some(q) => vec![q],
            None => (0..=self.by_queue.len() as QueueId).collect(),
        };
        if let Some(r) = rng.as_mut() {
            cands.shuffle(r);
        }
        for q in cands {
            if !self.allowed(i, q) {
                continue;
            }
            let added = self.push(i, q);
            let go_on = self.run(rng, visit);
            self.pop(i, q, added);
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Every legal reply, canonical, in a fixed order.
pub fn legal_bob_moves(state: &GameState, cfg: &GameConfig, mv: &AliceMove) -> Result<Vec<BobMove>, GameError> {
    let mut out = Vec::new();
    for ranks in candidate_placements(state, cfg, mv)? {
        let mut found: Vec<Vec<QueueId>> = Vec::new();
        let mut a = Assigner::new(state, cfg, mv, &ranks);
        a.run::<rand_chacha::ChaCha8Rng>(&mut None, &mut |qs| {
            found.push(qs.to_vec());
            true
        });
        for queues in found {
            let bob = BobMove { ranks: ranks.clone(), queues };
            let (_, v) = check_transition(state, cfg, mv, &bob)?;
            if v.is_none() {
                out.push(bob);
            }
        }
    }
    Ok(out)
}

/// Every interleaving of old and new vertices in which twins of a side keep
/// their naming order, with no pruning.
pub fn all_placements(state: &GameState, mv: &AliceMove) -> Vec<Vec<u32>> {
    let (left, right) = state.new_vertices(mv);
    let total = state.n() + left.len() + right.len();
    let mut out = Vec::new();
    fn rec(slot: usize, total: usize, rem: [usize; 2], old_left: usize, cur: &mut [Vec<u32>; 2], out: &mut Vec<Vec<u32>>) {
        if slot == total {
            let mut r = cur[0].clone();
            r.extend_from_slice(&cur[1]);
            out.push(r);
            return;
        }
        if old_left > 0 {
            rec(slot + 1, total, rem, old_left - 1, cur, out);
        }
        for s in 0..2 {
            if rem[s] > 0 {
                cur[s].push(slot as u32);
                let mut r = rem;
                r[s] -= 1;
                rec(slot + 1, total, r, old_left, cur, out);
                cur[s].pop();
            }
        }
    }
    rec(0, total, [left.len(), right.len()], state.n(), &mut [Vec::new(), Vec::new()], &mut out);
    out
}

/// Reference enumerator: every placement times every canonical assignment,
/// filtered by [`check_transition`].
pub fn naive_bob_moves(state: &GameState, cfg: &GameConfig, mv: &AliceMove) -> Result<Vec<BobMove>, GameError> {
    state.check_alice_move(mv)?;
    let slots = state.new_edges(mv).len();
    let base = state.queue_count();
    let mut assignments = Vec::new();
    fn rec(cur: &mut Vec<QueueId>, slots: usize, next: QueueId, out: &mut Vec<Vec<QueueId>>) {
        if cur.len() == slots {
            out.push(cur.clone());
            return;
        }
        for q in 0..=next {
            cur.push(q);
            rec(cur, slots, next.max(q + 1), out);
            cur.pop();
        }
    }
    rec(&mut Vec::new(), slots, base, &mut assignments);
    let mut out = Vec::new();
    for ranks in all_placements(state, mv) {
        for queues in &assignments {
            let bob = BobMove { ranks: ranks.clone(), queues: queues.clone() };
            if check_transition(state, cfg, mv, &bob)?.1.is_none() {
                out.push(bob);
            }
        }
    }
    Ok(out)
}

/// Replies obeying every rule-shaped condition, without the validity and
/// locality checks of condition (i). Used to certify stuck positions.
pub fn structural_candidates(state: &GameState, cfg: &GameConfig, mv: &AliceMove) -> Result<Vec<BobMove>, GameError> {
    let loose = GameConfig {
        ell: u32::MAX,
        ..cfg.clone()
    };
    let mut out = Vec::new();
    for ranks in candidate_placements(state, cfg, mv)? {
        let mut found: Vec<Vec<QueueId>> = Vec::new();
        let mut a = Assigner::new(state, &loose, mv, &ranks);
        a.nesting = false;
        a.run::<rand_chacha::ChaCha8Rng>(&mut None, &mut |qs| {
            found.push(qs.to_vec());
            true
        });
        for queues in found {
            let bob = BobMove { ranks: ranks.clone(), queues };
            let next = state.apply(mv, &bob)?;
            if assignment_violation(&next, cfg).is_none() {
                out.push(bob);
            }
        }
    }
    Ok(out)
}

fn interleavings(n: usize, left: usize, right: usize) -> u128 {
    // multinomial (n+left+right)! / (n! left! right!), saturating
    let mut acc: u128 = 1;
    let mut total = n;
    for add in [left, right] {
        for j in 1..=add {
            total += 1;
            acc = acc.saturating_mul(total as u128) / j as u128;
        }
    }
    acc
}

/// A random legal reply found by sampling placements and running a
/// randomized assignment search. `None` means the sampler gave up, which is
/// not a proof that no reply exists.
pub fn random_bob_move<R: Rng>(
    state: &GameState,
    cfg: &GameConfig,
    mv: &AliceMove,
    rng: &mut R,
    tries: usize,
) -> Result<Option<BobMove>, GameError> {
    let (clique, copy_clique) = state.check_alice_move(mv)?;
    let (left, right) = state.new_vertices(mv);
    let small = interleavings(state.n(), left.len(), right.len()) <= 20_000;
    let mut pool = if small { candidate_placements(state, cfg, mv)? } else { Vec::new() };
    if small {
        pool.shuffle(rng);
    }
    for attempt in 0..tries {
        let ranks = if small {
            match pool.get(attempt) {
                Some(r) => r.clone(),
                None => break,
            }
        } else {
            sample_placement(state, cfg, &clique, copy_clique.as_deref(), left.len(), right.len(), rng)
        };
        let dummy = vec![0; state.new_edges(mv).len()];
        let probe = state.apply(mv, &BobMove { ranks: ranks.clone(), queues: dummy })?;
        if placement_violation(state, &probe, cfg).is_some() {
            continue;
        }
        let mut a = Assigner::new(state, cfg, mv, &ranks);
        a.budget = 50_000;
        let mut found = None;
        a.run(&mut Some(&mut *rng), &mut |qs| {
            found = Some(qs.to_vec());
            false
        });
        if let Some(queues) = found {
            let bob = BobMove { ranks, queues };
            if check_transition(state, cfg, mv, &bob)?.1.is_none() {
                return Ok(Some(bob));
            }
        }
    }
    Ok(None)
}

fn sample_placement<R: Rng>(
    state: &GameState,
    cfg: &GameConfig,
    clique: &[Vertex],
    copy_clique: Option<&[Vertex]>,
    m_left: usize,
    m_right: usize,
    rng: &mut R,
) -> Vec<u32> {
    let n = state.n();
    let first_round = state.round() == 0;
    // gap g means "after the first g old vertices"
    let lowest = |c: Option<&[Vertex]>, side: Side| -> usize {
        let mut lo = 0;
        if let Some(c) = c {
            if cfg.active(5) {
                lo = lo.max(c.iter().map(|&v| state.position(v) as usize + 1).max().unwrap_or(0));
            }
        }
        if cfg.active(2) && first_round {
            lo = lo.max(state.init_clique(side).iter().map(|&v| state.position(v) as usize + 1).max().unwrap_or(0));
        }
        lo
    };
    let mut gaps: Vec<(usize, u8, usize)> = Vec::new();
    for (side, count, c) in [(Side::Left, m_left, Some(clique)), (Side::Right, m_right, copy_clique)] {
        if count == 0 {
            continue;
        }
        let lo = lowest(c, side);
        // twins spread over a few gaps; a uniform spread almost never fits
        let spread = if cfg.active(3) {
            1
        } else {
            1usize << rng.gen_range(0..=count.ilog2())
        };
        let used: Vec<usize> = (0..spread).map(|_| rng.gen_range(lo..=n)).collect();
        for i in 0..count {
            gaps.push((used[rng.gen_range(0..spread)], side as u8, i));
        }
    }
    // within a side twins keep their order; sides inside one gap are mixed
    let mut per_side: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for &(g, s, _) in &gaps {
        per_side[s as usize].push(g);
    }
    per_side[0].sort_unstable();
    per_side[1].sort_unstable();
    let mut items: Vec<(usize, u64, u8, usize)> = Vec::new();
    for s in 0..2 {
        for (i, &g) in per_side[s].iter().enumerate() {
            items.push((g, 0, s as u8, i));
        }
    }
    for it in items.iter_mut() {
        it.1 = rng.gen();
    }
    // order inside a gap: random key, then repair per-side order
    items.sort_by_key(|&(g, key, _, _)| (g, key));
    let mut next = [0usize; 2];
    for it in items.iter_mut() {
        let s = it.2 as usize;
        it.3 = next[s];
        next[s] += 1;
    }
    let mut ranks = vec![0u32; m_left + m_right];
    for (j, &(g, _, s, i)) in items.iter().enumerate() {
        let idx = if s == 0 { i } else { m_left + i };
        ranks[idx] = (g + j) as u32;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::initial_layouts;
    use std::collections::BTreeSet;

    fn set(v: Vec<BobMove>) -> BTreeSet<BobMove> {
        v.into_iter().collect()
    }

    #[test]
    fn single_child_of_an_edge_at_level_one() {
        let cfg = GameConfig::new(2, 2, 1).unwrap();
        let s0 = initial_layouts(&cfg).remove(0);
        let mv = AliceMove::new(vec![0, 1], 1);
        let moves = legal_bob_moves(&s0, &cfg, &mv).unwrap();
        // 3 gaps; queue pairs from {0,1,2} in canonical form: 00 01 10 11 12
        // minus the nesting pairs: child between 0 and 1 cannot nest, outside
        // positions make the outer child edge enclose 0-1 only when in the same queue
        assert_eq!(set(moves.clone()), set(naive_bob_moves(&s0, &cfg, &mv).unwrap()));
        assert!(moves.iter().any(|b| b.ranks == vec![1]));
        assert!(moves.iter().all(|b| b.queues.len() == 2));
    }

    #[test]
    fn consecutive_twins_at_level_three() {
        let cfg = GameConfig::new(2, 2, 3).unwrap();
        let s0 = initial_layouts(&cfg).remove(0);
        let s1 = s0
            .apply(&AliceMove::new(vec![0, 1], 1), &BobMove { ranks: vec![2], queues: vec![1, 2] })
            .unwrap();
        let mv = AliceMove::new(vec![0, 2], 2);
        for b in legal_bob_moves(&s1, &cfg, &mv).unwrap() {
            assert_eq!(b.ranks[1], b.ranks[0] + 1);
        }
        assert_eq!(
            set(legal_bob_moves(&s1, &cfg, &mv).unwrap()),
            set(naive_bob_moves(&s1, &cfg, &mv).unwrap())
        );
    }

    #[test]
    fn level_five_with_full_locality_reuses_queues() {
        let cfg = GameConfig::new(2, 2, 5).unwrap();
        let s0 = initial_layouts(&cfg).remove(0);
        let s1 = s0
            .apply(&AliceMove::new(vec![0, 1], 1), &BobMove { ranks: vec![2], queues: vec![1, 2] })
            .unwrap();
        // 0 and 2 both see queues {0,1} / {1,2}: a child of 0-2 needs queue 1
        // twice or a third queue at one end
        let moves = legal_bob_moves(&s1, &cfg, &AliceMove::new(vec![0, 2], 1)).unwrap();
        for b in &moves {
            assert_ne!(b.queues[0], b.queues[1]);
        }
        assert_eq!(
            set(moves),
            set(naive_bob_moves(&s1, &cfg, &AliceMove::new(vec![0, 2], 1)).unwrap())
        );
    }

    #[test]
    fn paired_enumerators_agree() {
        let cfg = GameConfig::new(2, 2, 7).unwrap();
        for s0 in initial_layouts(&cfg) {
            let mv = AliceMove::new(vec![0, 1], 1);
            let fast = legal_bob_moves(&s0, &cfg, &mv).unwrap();
            assert!(!fast.is_empty());
            assert_eq!(set(fast), set(naive_bob_moves(&s0, &cfg, &mv).unwrap()));
        }
    }

    #[test]
    fn invalid_alice_moves_are_rejected() {
        let cfg = GameConfig::new(2, 2, 5).unwrap();
        let s0 = initial_layouts(&cfg).remove(0);
        assert!(legal_bob_moves(&s0, &cfg, &AliceMove::new(vec![0, 1], 0)).is_err());
        assert!(legal_bob_moves(&s0, &cfg, &AliceMove::new(vec![0, 5], 1)).is_err());
    }

    #[test]
    fn random_replies_are_legal() {
        use rand::SeedableRng;
        let cfg = GameConfig::new(2, 2, 2).unwrap();
        let s0 = initial_layouts(&cfg).remove(0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mv = AliceMove::new(vec![0, 1], 30);
        let bob = random_bob_move(&s0, &cfg, &mv, &mut rng, 20).unwrap().unwrap();
        assert!(check_transition(&s0, &cfg, &mv, &bob).unwrap().1.is_none());
    }
}
