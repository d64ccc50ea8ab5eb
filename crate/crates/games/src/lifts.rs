//! Strategy lifts: a strategy for a game with more conditions becomes one
//! for the game with one condition fewer.
//!
//! The lifted strategy keeps a virtual position of the stronger game. Each
//! real reply is projected onto the kept vertices, checked against the
//! stronger game's conditions and passed to the inner strategy.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use queuelay_core::graph::Vertex;
use queuelay_core::layout::{validate_layout, QueueId, RainbowWitness, Validation};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rules::{check_transition, legal_bob_moves, random_bob_move};
use crate::state::{AliceMove, BobMove, GameConfig, GameError, GameState, Level, Side};
use crate::strategy::Strategy;

/// Counters filled in while a lifted strategy plays.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStats {
    /// Real replies projected onto the virtual game.
    pub replies: usize,
    /// Largest number of assignment classes among twins seen in one round.
    pub max_classes: usize,
    /// Rounds where the classes exceeded the bound (must stay 0).
    pub class_overflows: usize,
    /// Smallest margin of the largest class or run over the demanded count.
    pub min_slack: Option<i64>,
    pub pigeonhole_failures: usize,
    /// Certificates built when a reply broke a derived condition.
    pub witnesses: Vec<RainbowWitness>,
    /// Clone cliques built by the clique-cloning lift.
    pub clones: usize,
    /// Pair changes in the clique-cloning lift.
    pub repairs: usize,
}

pub type SharedStats = Arc<Mutex<ReductionStats>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftKind {
    /// Game iv from game v: two reserved twins per round.
    FiveToFour,
    /// Game iii from game iv: pigeonhole over assignment classes.
    FourToThree,
    /// Game ii from game iii: pigeonhole over gaps.
    ThreeToTwo,
    /// Game vi from game vii: condition vii is implied.
    SevenToSix,
}

impl LiftKind {
    /// Level of the game the lifted strategy plays.
    pub fn level(self) -> Level {
        match self {
            LiftKind::FiveToFour => 4,
            LiftKind::FourToThree => 3,
            LiftKind::ThreeToTwo => 2,
            LiftKind::SevenToSix => 6,
        }
    }
}

/// Leftmost and rightmost twins of a round that are kept out of play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservedTwins {
    pub parent: Vec<Vertex>,
    pub first: Vertex,
    pub last: Vertex,
    pub kept: Vec<Vertex>,
}

#[derive(Clone)]
pub struct Lifted {
    kind: LiftKind,
    inner: Box<dyn Strategy>,
    cfg: GameConfig,
    virt: Option<GameState>,
    /// virtual id -> real id
    map: Vec<Vertex>,
    /// real queue -> virtual queue
    qmap: BTreeMap<QueueId, QueueId>,
    pending: Option<AliceMove>,
    reserved: Vec<ReservedTwins>,
    stats: SharedStats,
}

fn lift(kind: LiftKind, inner: Box<dyn Strategy>, k: usize, ell: u32) -> Lifted {
    let level = kind.level() + 1;
    Lifted {
        kind,
        inner,
        cfg: GameConfig {
            k,
            ell,
            level,
            caps: Default::default(),
        },
        virt: None,
        map: Vec::new(),
        qmap: BTreeMap::new(),
        pending: None,
        reserved: Vec::new(),
        stats: SharedStats::default(),
    }
}

pub fn lift_v_to_iv(inner: Box<dyn Strategy>, k: usize, ell: u32) -> Lifted {
    lift(LiftKind::FiveToFour, inner, k, ell)
}

pub fn lift_iv_to_iii(inner: Box<dyn Strategy>, k: usize, ell: u32) -> Lifted {
    lift(LiftKind::FourToThree, inner, k, ell)
}

pub fn lift_iii_to_ii(inner: Box<dyn Strategy>, k: usize, ell: u32) -> Lifted {
    lift(LiftKind::ThreeToTwo, inner, k, ell)
}

pub fn lift_vii_to_vi(inner: Box<dyn Strategy>, k: usize, ell: u32) -> Lifted {
    lift(LiftKind::SevenToSix, inner, k, ell)
}

/// Children a lifted round asks for when the inner strategy wants `m`.
pub fn inflated_count(kind: LiftKind, m: usize, k: usize, ell: u32, virtual_vertices: usize) -> usize {
    match kind {
        LiftKind::FiveToFour => m + 2,
        LiftKind::FourToThree => m * (ell as usize).pow(k as u32),
        LiftKind::ThreeToTwo => {
            let v = virtual_vertices;
            ((m + 1) * v).max((m - 1) * (v + 1) + 1)
        }
        LiftKind::SevenToSix => m,
    }
}

impl Lifted {
    pub fn stats(&self) -> SharedStats {
        self.stats.clone()
    }

    pub fn reserved(&self) -> &[ReservedTwins] {
        &self.reserved
    }

    pub fn virtual_state(&self) -> Option<&GameState> {
        self.virt.as_ref()
    }

    /// The kept twins of a real round, in placement order.
    fn select(&mut self, after: &GameState, vm: &AliceMove, real_mv: &AliceMove) -> Result<(Vec<Vertex>, Vec<Vertex>), GameError> {
        let rec = after.rounds.last().expect("round played");
        let kids = &rec.children;
        let m = vm.m;
        let mut stats = self.stats.lock().expect("stats lock");
        match self.kind {
            LiftKind::SevenToSix => Ok((kids.clone(), rec.copy_children.clone())),
            LiftKind::FiveToFour => {
                let kept = kids[1..=m].to_vec();
                self.reserved.push(ReservedTwins {
                    parent: real_mv.clique.clone(),
                    first: kids[0],
                    last: kids[m + 1],
                    kept: kept.clone(),
                });
                Ok((kept, Vec::new()))
            }
            LiftKind::FourToThree => {
                let mut classes: BTreeMap<Vec<QueueId>, Vec<Vertex>> = BTreeMap::new();
                let mut first_seen: Vec<Vec<QueueId>> = Vec::new();
                for &x in kids {
                    let key: Vec<QueueId> = real_mv
                        .clique
                        .iter()
                        .map(|&c| after.queue(c, x).expect("child edge"))
                        .collect();
                    if !classes.contains_key(&key) {
                        first_seen.push(key.clone());
                    }
                    classes.entry(key).or_default().push(x);
                }
                let bound = (self.cfg.ell as usize).pow(self.cfg.k as u32);
                stats.max_classes = stats.max_classes.max(classes.len());
                if classes.len() > bound {
                    stats.class_overflows += 1;
                }
                let best = classes.values().map(Vec::len).max().unwrap_or(0);
                let slack = best as i64 - m as i64;
                stats.min_slack = Some(stats.min_slack.map_or(slack, |s| s.min(slack)));
                match first_seen.iter().find(|key| classes[*key].len() >= m) {
                    Some(key) => Ok((classes[key][..m].to_vec(), Vec::new())),
                    None => {
                        stats.pigeonhole_failures += 1;
                        Err(GameError::PigeonholeFailure(format!(
                            "{} classes over {} twins, none with {m}",
                            classes.len(),
                            kids.len()
                        )))
                    }
                }
            }
            LiftKind::ThreeToTwo => {
                let virt = self.virt.as_ref().expect("initialized");
                let old: Vec<u32> = self.map.iter().map(|&v| after.position(v)).collect();
                let mut sorted = kids.clone();
                sorted.sort_by_key(|&x| after.position(x));
                let mut runs: Vec<Vec<Vertex>> = Vec::new();
                for &x in &sorted {
                    let p = after.position(x);
                    let joins = runs.last().and_then(|r| r.last()).is_some_and(|&y| {
                        let q = after.position(y);
                        !old.iter().any(|&o| q < o && o < p)
                    });
                    if joins {
                        runs.last_mut().expect("nonempty").push(x);
                    } else {
                        runs.push(vec![x]);
                    }
                }
                let _ = virt;
                let best = runs.iter().map(Vec::len).max().unwrap_or(0);
                let slack = best as i64 - m as i64;
                stats.min_slack = Some(stats.min_slack.map_or(slack, |s| s.min(slack)));
                match runs.iter().find(|r| r.len() >= m) {
                    Some(r) => Ok((r[..m].to_vec(), Vec::new())),
                    None => {
                        stats.pigeonhole_failures += 1;
                        Err(GameError::PigeonholeFailure(format!(
                            "{} twins in {} runs, none of length {m}",
                            kids.len(),
                            runs.len()
                        )))
                    }
                }
            }
        }
    }
}

/// Projects the real reply onto the kept twins: ranks among the kept
/// vertices, queue ids renamed in order of first use.
fn project(
    virt: &GameState,
    vm: &AliceMove,
    map: &[Vertex],
    qmap: &mut BTreeMap<QueueId, QueueId>,
    real: &GameState,
    kept_left: &[Vertex],
    kept_right: &[Vertex],
) -> BobMove {
    let kept: Vec<Vertex> = kept_left.iter().chain(kept_right).copied().collect();
    let mut all: Vec<Vertex> = map.iter().chain(&kept).copied().collect();
    all.sort_by_key(|&v| real.position(v));
    let ranks = kept
        .iter()
        .map(|v| all.iter().position(|u| u == v).expect("kept") as u32)
        .collect();
    let n = virt.n();
    let to_real = |v: Vertex| -> Vertex {
        let v = v as usize;
        if v < n {
            map[v]
        } else {
            kept[v - n]
        }
    };
    let mut next_q = virt.queue_count();
    let queues = virt
        .new_edges(vm)
        .iter()
        .map(|ne| {
            let rq = real.queue(to_real(ne.clique_vertex), to_real(ne.child)).expect("real edge");
            *qmap.entry(rq).or_insert_with(|| {
                next_q += 1;
                next_q - 1
            })
        })
        .collect();
    BobMove { ranks, queues }
}

fn initial_virtual(real: &GameState) -> (GameState, Vec<Vertex>, BTreeMap<QueueId, QueueId>) {
    let qmap = real.layout.assign.values().map(|&q| (q, q)).collect();
    (real.clone(), (0..real.n() as Vertex).collect(), qmap)
}

/// A same-queue nesting pair in the real layout, if Bob left one.
fn real_rainbow(real: &GameState) -> Option<RainbowWitness> {
    match validate_layout(&real.graph(), &real.layout, None).expect("covers") {
        Validation::Rainbow(w) => Some(w),
        _ => None,
    }
}

impl Strategy for Lifted {
    fn name(&self) -> String {
        let tag = match self.kind {
            LiftKind::FiveToFour => "v>iv",
            LiftKind::FourToThree => "iv>iii",
            LiftKind::ThreeToTwo => "iii>ii",
            LiftKind::SevenToSix => "vii>vi",
        };
        format!("{tag}({})", self.inner.name())
    }

    fn check_config(&self, cfg: &GameConfig) -> Result<(), GameError> {
        if cfg.level != self.kind.level() || cfg.k != self.cfg.k || cfg.ell != self.cfg.ell {
            return Err(GameError::ConfigMismatch(format!(
                "{} plays level {} with k = {}, l = {}",
                self.name(),
                self.kind.level(),
                self.cfg.k,
                self.cfg.ell
            )));
        }
        self.inner.check_config(&self.cfg)
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        if self.virt.is_none() {
            let (v, map, qmap) = initial_virtual(state);
            self.virt = Some(v);
            self.map = map;
            self.qmap = qmap;
        }
        let virt = self.virt.as_ref().expect("initialized");
        let Some(vm) = self.inner.next_move(virt)? else {
            return Ok(None);
        };
        let clique: Vec<Vertex> = vm.clique.iter().map(|&v| self.map[v as usize]).collect();
        let m = inflated_count(self.kind, vm.m, self.cfg.k, self.cfg.ell, virt.n());
        self.pending = Some(vm);
        Ok(Some(AliceMove::new(clique, m)))
    }

    fn observe(&mut self, _before: &GameState, mv: &AliceMove, _bob: &BobMove, after: &GameState) -> Result<(), GameError> {
        let vm = self
            .pending
            .take()
            .ok_or_else(|| GameError::InvalidAliceMove("reply without a pending move".into()))?;
        let (kept_left, kept_right) = self.select(after, &vm, mv)?;
        let virt = self.virt.as_ref().expect("initialized");
        let vbob = project(virt, &vm, &self.map, &mut self.qmap, after, &kept_left, &kept_right);
        let (next, violation) = check_transition(virt, &self.cfg, &vm, &vbob)?;
        self.stats.lock().expect("stats lock").replies += 1;
        if let Some(v) = violation {
            if let Some(w) = real_rainbow(after) {
                self.stats.lock().expect("stats lock").witnesses.push(w.clone());
                return Err(GameError::ReductionGap(format!(
                    "reply breaks condition {} and the real layout has nesting pair {:?}",
                    v.condition, w.edges
                )));
            }
            return Err(GameError::ReductionGap(format!(
                "projected reply breaks condition {}: {}",
                v.condition, v.detail
            )));
        }
        self.inner.observe(virt, &vm, &vbob, &next)?;
        self.map.extend(kept_left.iter().chain(&kept_right));
        self.virt = Some(next);
        Ok(())
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

/// The nesting pair that rules out a child `x` of a kept twin placed
/// anywhere but right of the reserved rightmost twin. Uses the parent-clique
/// edge of the twin that shares the child edge's queue.
pub fn right_placement_witness(state: &GameState, twins: &ReservedTwins, x: Vertex) -> Option<RainbowWitness> {
    let pos = |v: Vertex| state.position(v);
    for &xi in &twins.kept {
        let Some(q) = state.queue(xi, x) else { continue };
        for &c in &twins.parent {
            if state.queue(c, xi) != Some(q) {
                continue;
            }
            let (outer, inner) = if pos(x) < pos(c) {
                ((x, xi), (c, twins.first))
            } else if pos(x) < pos(twins.last) {
                ((c, twins.last), (xi, x))
            } else {
                continue;
            };
            let w = RainbowWitness {
                edges: vec![
                    queuelay_core::graph::Edge::new(outer.0, outer.1),
                    queuelay_core::graph::Edge::new(inner.0, inner.1),
                ],
                queue: Some(q),
            };
            if w.verify(&state.layout.order, Some(&state.layout.assign)) {
                return Some(w);
            }
        }
    }
    None
}

/// Condition vii from alternation: a child `x` of `a` right of the copy
/// `a'b'` of edge `ab` makes `ax` nest over `a'b'`.
pub fn copy_nesting_witness(state: &GameState, a: Vertex, b: Vertex, x: Vertex) -> Option<RainbowWitness> {
    let (ca, cb) = (state.copy_of(a)?, state.copy_of(b)?);
    let q = state.queue(a, x)?;
    let w = RainbowWitness {
        edges: vec![
            queuelay_core::graph::Edge::new(a, x),
            queuelay_core::graph::Edge::new(ca, cb),
        ],
        queue: Some(q),
    };
    w.verify(&state.layout.order, Some(&state.layout.assign)).then_some(w)
}

/// A clique instance of the cloning lift: a clone of the initial clique and
/// the replayed rounds on it.
#[derive(Clone, Debug)]
struct Instance {
    /// local id -> real id; the first k are the clone vertices
    local: Vec<Vertex>,
    /// replayed history rounds
    done: usize,
}

#[derive(Clone, Debug)]
enum Pending {
    /// Next clone vertex of the instance.
    Clone(usize),
    /// History round `t` on the instance.
    Replay(usize, usize),
}

/// Game v from game vi by cloning the initial clique and pairing two clones
/// whose edges use identical queues.
#[derive(Clone)]
pub struct CloneLift {
    inner_fresh: Box<dyn Strategy>,
    inner: Option<Box<dyn Strategy>>,
    k: usize,
    ell: u32,
    instances: Vec<Instance>,
    /// virtual moves in local ids of one instance
    history: Vec<(Vec<usize>, usize)>,
    pair: Option<(usize, usize)>,
    virt: Option<GameState>,
    pending: Option<Pending>,
    stats: SharedStats,
}

pub fn lift_vi_to_v(inner: Box<dyn Strategy>, k: usize, ell: u32) -> CloneLift {
    CloneLift {
        inner_fresh: inner,
        inner: None,
        k,
        ell,
        instances: Vec::new(),
        history: Vec::new(),
        pair: None,
        virt: None,
        pending: None,
        stats: SharedStats::default(),
    }
}

/// Clone count that forces two identical assignments: (k^2)^(k^2) + 1.
pub fn clone_bound(k: usize) -> u128 {
    let q = (k * k) as u128;
    q.checked_pow((k * k) as u32).map_or(u128::MAX, |b| b + 1)
}

impl CloneLift {
    pub fn stats(&self) -> SharedStats {
        self.stats.clone()
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        self.pair
    }

    pub fn virtual_state(&self) -> Option<&GameState> {
        self.virt.as_ref()
    }

    fn init_sorted(state: &GameState) -> Vec<Vertex> {
        let mut c = state.init_clique(Side::Left).to_vec();
        c.sort_by_key(|&v| state.position(v));
        c
    }

    fn complete(&self, i: usize) -> bool {
        let inst = &self.instances[i];
        inst.local.len() >= self.k && inst.done == self.history.len()
    }

    /// Queue ids of every instance edge, including the edges to the initial
    /// clique, in a fixed local order.
    fn signature(&self, state: &GameState, i: usize) -> Vec<Option<QueueId>> {
        let init = Self::init_sorted(state);
        let local = &self.instances[i].local;
        let mut sig = Vec::new();
        for (a, &ra) in local.iter().enumerate() {
            for &c in &init {
                sig.push(state.queue(c, ra));
            }
            for &rb in &local[..a] {
                sig.push(state.queue(rb, ra));
            }
        }
        sig
    }

    /// Builds the paired position of instances `a` (left) and `b` (right)
    /// and checks every round against game vi.
    fn virtual_pair(&self, state: &GameState, a: usize, b: usize) -> Result<GameState, String> {
        let k = self.k;
        let cfg = GameConfig {
            k,
            ell: self.ell,
            level: 6,
            caps: Default::default(),
        };
        let (la, lb) = (&self.instances[a].local, &self.instances[b].local);
        // virtual id -> real id
        let mut real: Vec<Vertex> = la[..k].iter().chain(&lb[..k]).copied().collect();
        let mut order: Vec<Vertex> = (0..2 * k as Vertex).collect();
        order.sort_by_key(|&v| state.position(real[v as usize]));
        let mut assign = BTreeMap::new();
        let mut qmap: BTreeMap<QueueId, QueueId> = BTreeMap::new();
        for side in 0..2 {
            for i in 0..k {
                for j in i + 1..k {
                    let (u, v) = ((side * k + i) as Vertex, (side * k + j) as Vertex);
                    let rq = state.queue(real[u as usize], real[v as usize]).ok_or("missing clone edge")?;
                    let nq = qmap.len() as QueueId;
                    let q = *qmap.entry(rq).or_insert(nq);
                    assign.insert(queuelay_core::graph::Edge::new(u, v), q);
                }
            }
        }
        let expected: Vec<Vertex> = (0..k as Vertex).flat_map(|i| [i, i + k as Vertex]).collect();
        if order != expected {
            return Err(format!("clone cliques do not alternate: {order:?}"));
        }
        let mut virt = GameState::initial(k, true, order, assign).map_err(|e| e.to_string())?;
        // local id -> virtual id on each side
        let mut loc: [Vec<Vertex>; 2] = [(0..k as Vertex).collect(), (k as Vertex..2 * k as Vertex).collect()];
        for (t, (clique, m)) in self.history.iter().enumerate() {
            let vm = AliceMove::new(clique.iter().map(|&c| loc[0][c]).collect(), *m);
            let base = la.len().min(lb.len());
            let _ = base;
            let first_local = k + self.history[..t].iter().map(|h| h.1).sum::<usize>();
            let left_real: Vec<Vertex> = la[first_local..first_local + m].to_vec();
            let right_real: Vec<Vertex> = lb[first_local..first_local + m].to_vec();
            let bob = project(&virt, &vm, &real, &mut qmap, state, &left_real, &right_real);
            let (next, v) = check_transition(&virt, &cfg, &vm, &bob).map_err(|e| e.to_string())?;
            if let Some(v) = v {
                return Err(format!("round {}: condition {}: {}", t + 1, v.condition, v.detail));
            }
            let n = virt.n() as Vertex;
            loc[0].extend(n..n + *m as Vertex);
            loc[1].extend(n + *m as Vertex..n + 2 * *m as Vertex);
            real.extend(left_real.iter().chain(&right_real));
            virt = next;
        }
        Ok(virt)
    }

    /// Looks for two complete instances with identical signatures.
    fn find_pair(&mut self, state: &GameState) -> Result<bool, GameError> {
        let complete: Vec<usize> = (0..self.instances.len()).filter(|&i| self.complete(i)).collect();
        let sigs: Vec<_> = complete.iter().map(|&i| self.signature(state, i)).collect();
        for (x, &i) in complete.iter().enumerate() {
            for (y, &j) in complete.iter().enumerate().skip(x + 1) {
                if sigs[x] != sigs[y] {
                    continue;
                }
                let (a, b) = if state.position(self.instances[i].local[0]) < state.position(self.instances[j].local[0]) {
                    (i, j)
                } else {
                    (j, i)
                };
                match self.virtual_pair(state, a, b) {
                    Ok(virt) => {
                        self.replay_inner(&virt)?;
                        self.pair = Some((a, b));
                        self.virt = Some(virt);
                        return Ok(true);
                    }
                    Err(detail) => {
                        if let Some(w) = real_rainbow(state) {
                            self.stats.lock().expect("stats lock").witnesses.push(w);
                        }
                        return Err(GameError::ReductionGap(format!("matching clones break game vi: {detail}")));
                    }
                }
            }
        }
        Ok(false)
    }

    /// Runs a fresh inner strategy along the history on the new pair and
    /// checks it asks for the same moves.
    fn replay_inner(&mut self, virt: &GameState) -> Result<(), GameError> {
        let mut inner = self.inner_fresh.box_clone();
        for t in 0..virt.round() {
            let before = virt.prefix(t);
            let after = virt.prefix(t + 1);
            let (vm, bob) = virt.replay_round(t);
            let asked = inner.next_move(&before)?;
            if asked.as_ref() != Some(&vm) {
                return Err(GameError::ReductionGap(format!(
                    "inner strategy is not replayable: round {} asked {asked:?}, history has {vm:?}",
                    t + 1
                )));
            }
            inner.observe(&before, &vm, &bob, &after)?;
        }
        self.inner = Some(inner);
        Ok(())
    }

    /// The next real round that grows or replays an instance.
    fn rebuild_move(&mut self, state: &GameState) -> AliceMove {
        let k = self.k;
        let idx = (0..self.instances.len())
            .find(|&i| !self.complete(i))
            .unwrap_or_else(|| {
                self.instances.push(Instance {
                    local: Vec::new(),
                    done: 0,
                });
                self.stats.lock().expect("stats lock").clones += 1;
                self.instances.len() - 1
            });
        let inst = &self.instances[idx];
        if inst.local.len() < k {
            let i = inst.local.len();
            let init = Self::init_sorted(state);
            let mut parent: Vec<Vertex> = init[i..].to_vec();
            parent.extend_from_slice(&inst.local);
            self.pending = Some(Pending::Clone(idx));
            return AliceMove::new(parent, 1);
        }
        let t = inst.done;
        let (clique, m) = &self.history[t];
        self.pending = Some(Pending::Replay(idx, t));
        AliceMove::new(clique.iter().map(|&c| inst.local[c]).collect(), *m)
    }
}

impl Strategy for CloneLift {
    fn name(&self) -> String {
        format!("vi>v({})", self.inner_fresh.name())
    }

    fn check_config(&self, cfg: &GameConfig) -> Result<(), GameError> {
        if cfg.level != 5 || cfg.k != self.k || cfg.ell != self.ell {
            return Err(GameError::ConfigMismatch(format!(
                "{} plays level v with k = {}, l = {}",
                self.name(),
                self.k,
                self.ell
            )));
        }
        Ok(())
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        if self.pair.is_none()
            && !self.find_pair(state)? {
                return Ok(Some(self.rebuild_move(state)));
            }
        let (a, b) = self.pair.expect("paired");
        // the right instance trails the left one by one round at most
        if self.instances[b].done < self.instances[a].done {
            let t = self.instances[b].done;
            let (clique, m) = &self.history[t];
            self.pending = Some(Pending::Replay(b, t));
            let local = &self.instances[b].local;
            return Ok(Some(AliceMove::new(clique.iter().map(|&c| local[c]).collect(), *m)));
        }
        let virt = self.virt.as_ref().expect("paired");
        let inner = self.inner.as_mut().expect("replayed");
        let Some(vm) = inner.next_move(virt)? else {
            return Ok(None);
        };
        // virtual left ids back to local ids of the left instance
        let mut local_of: BTreeMap<Vertex, usize> = (0..self.k).map(|i| (i as Vertex, i)).collect();
        let mut next_local = self.k;
        for rec in &virt.rounds {
            for &x in &rec.children {
                local_of.insert(x, next_local);
                next_local += 1;
            }
        }
        let clique: Vec<usize> = vm
            .clique
            .iter()
            .map(|v| local_of.get(v).copied())
            .collect::<Option<_>>()
            .ok_or_else(|| GameError::InvalidAliceMove(format!("{:?} is not in the left graph", vm.clique)))?;
        self.history.push((clique.clone(), vm.m));
        let t = self.history.len() - 1;
        self.pending = Some(Pending::Replay(a, t));
        let local = &self.instances[a].local;
        Ok(Some(AliceMove::new(clique.iter().map(|&c| local[c]).collect(), vm.m)))
    }

    fn observe(&mut self, _before: &GameState, _mv: &AliceMove, _bob: &BobMove, after: &GameState) -> Result<(), GameError> {
        let rec = after.rounds.last().expect("round played");
        match self.pending.take() {
            Some(Pending::Clone(i)) => self.instances[i].local.push(rec.children[0]),
            Some(Pending::Replay(i, t)) => {
                debug_assert_eq!(self.instances[i].done, t);
                self.instances[i].local.extend_from_slice(&rec.children);
                self.instances[i].done += 1;
            }
            None => return Err(GameError::InvalidAliceMove("reply without a pending move".into())),
        }
        if let Some((a, b)) = self.pair {
            if self.instances[a].done == self.instances[b].done {
                self.stats.lock().expect("stats lock").replies += 1;
                let same = self.signature(after, a) == self.signature(after, b);
                let checked = if same { self.virtual_pair(after, a, b).ok() } else { None };
                match checked {
                    Some(next) => {
                        let virt = self.virt.as_ref().expect("paired");
                        let t = next.round() - 1;
                        let (vm, vbob) = next.replay_round(t);
                        self.inner.as_mut().expect("replayed").observe(virt, &vm, &vbob, &next)?;
                        self.virt = Some(next);
                    }
                    None => {
                        self.pair = None;
                        self.virt = None;
                        self.inner = None;
                        self.stats.lock().expect("stats lock").repairs += 1;
                    }
                }
            }
        }
        Ok(())
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayOutcome {
    /// Bob has no legal reply (checked exhaustively).
    BobStuck,
    /// The random sampler found no reply; not a proof.
    SamplerGaveUp,
    /// The strategy stopped while Bob still had replies.
    StrategyExhausted,
    BudgetExceeded(String),
}

#[derive(Clone, Debug)]
pub struct PlayReport {
    pub outcome: PlayOutcome,
    pub rounds: usize,
    pub state: GameState,
}

/// Plays `strategy` against random legal replies.
pub fn play<R: Rng>(
    strategy: &mut dyn Strategy,
    cfg: &GameConfig,
    init: GameState,
    rng: &mut R,
    tries: usize,
) -> Result<PlayReport, GameError> {
    strategy.check_config(cfg)?;
    let mut state = init;
    loop {
        let done = |outcome, state: GameState| {
            Ok(PlayReport {
                outcome,
                rounds: state.round(),
                state,
            })
        };
        let Some(mv) = strategy.next_move(&state)? else {
            return done(PlayOutcome::StrategyExhausted, state);
        };
        let sides = if state.paired { 2 } else { 1 };
        if state.round() >= cfg.caps.max_rounds || state.n() + sides * mv.m > cfg.caps.max_vertices {
            return done(
                PlayOutcome::BudgetExceeded(format!("{} vertices after {} rounds", state.n(), state.round())),
                state,
            );
        }
        let bob = match random_bob_move(&state, cfg, &mv, rng, tries)? {
            Some(b) => b,
            None => {
                let small = state.n() + sides * mv.m <= 10 && mv.m <= 2;
                let outcome = if small && legal_bob_moves(&state, cfg, &mv)?.is_empty() {
                    PlayOutcome::BobStuck
                } else {
                    PlayOutcome::SamplerGaveUp
                };
                return done(outcome, state);
            }
        };
        let next = state.apply(&mv, &bob)?;
        strategy.observe(&state, &mv, &bob, &next)?;
        state = next;
    }
}
