//! Exhaustive verification of Alice strategies.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use queuelay_core::graph::{Edge, Vertex};
use queuelay_core::layout::{validate_layout, LocalityViolation, QueueId, QueueLayout, RainbowWitness, Validation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rules::{check_transition, legal_bob_moves, structural_candidates};
use crate::state::{initial_layouts, AliceMove, BobMove, GameConfig, GameError, GameState};
use crate::strategy::Strategy;

/// Serializable form of a layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub order: Vec<Vertex>,
    pub queues: BTreeMap<Edge, QueueId>,
}

impl From<&QueueLayout> for LayoutRecord {
    fn from(l: &QueueLayout) -> Self {
        LayoutRecord {
            order: l.order.vertices().to_vec(),
            queues: l.assign.clone(),
        }
    }
}

/// Why one structural reply is not legal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub bob: BobMove,
    pub rainbow: Option<RainbowWitness>,
    pub overloaded: Vec<LocalityViolation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub alice: AliceMove,
    pub refutations: Vec<Refutation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub bob: BobMove,
    pub node: Node,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Move { alice: AliceMove, replies: Vec<Reply> },
    Stuck(Leaf),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Root {
    pub initial: LayoutRecord,
    pub node: Node,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTree {
    pub config: GameConfig,
    pub strategy: String,
    pub roots: Vec<Root>,
}

/// A legal layout that survives the whole script.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterLayout {
    pub config: GameConfig,
    pub strategy: String,
    pub initial: LayoutRecord,
    pub moves: Vec<(AliceMove, BobMove)>,
    pub layout: LayoutRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Win(WinTree),
    Counter(CounterLayout),
    BudgetExceeded { reason: String, finished_roots: usize },
}

enum Stop {
    Counter(Vec<(AliceMove, BobMove)>, GameState),
    Budget(String),
    Error(GameError),
}

impl From<GameError> for Stop {
    fn from(e: GameError) -> Self {
        Stop::Error(e)
    }
}

struct Ctx<'a> {
    cfg: &'a GameConfig,
    nodes: AtomicUsize,
    node_cap: usize,
}

/// Default bound on explored positions.
pub const NODE_CAP: usize = 2_000_000;

pub fn verify_alice_wins(strategy: &dyn Strategy, cfg: &GameConfig) -> Result<Verdict, GameError> {
    verify_from(strategy, cfg, initial_layouts(cfg))
}

pub fn verify_from(strategy: &dyn Strategy, cfg: &GameConfig, init: Vec<GameState>) -> Result<Verdict, GameError> {
    cfg.validate()?;
    strategy.check_config(cfg)?;
    let ctx = Ctx {
        cfg,
        nodes: AtomicUsize::new(0),
        node_cap: NODE_CAP,
    };
    let results: Vec<Result<Node, Stop>> = init
        .par_iter()
        .map(|s| explore(&ctx, s, strategy.box_clone(), &mut Vec::new()))
        .collect();
    let mut roots = Vec::with_capacity(init.len());
    for (i, (s, r)) in init.iter().zip(results).enumerate() {
        match r {
            Ok(node) => roots.push(Root {
                initial: (&s.layout).into(),
                node,
            }),
            Err(Stop::Counter(moves, last)) => {
                return Ok(Verdict::Counter(CounterLayout {
                    config: cfg.clone(),
                    strategy: strategy.name(),
                    initial: (&s.layout).into(),
                    moves,
                    layout: (&last.layout).into(),
                }))
            }
            Err(Stop::Budget(reason)) => return Ok(Verdict::BudgetExceeded { reason, finished_roots: i }),
            Err(Stop::Error(e)) => return Err(e),
        }
    }
    Ok(Verdict::Win(WinTree {
        config: cfg.clone(),
        strategy: strategy.name(),
        roots,
    }))
}

fn explore(
    ctx: &Ctx,
    state: &GameState,
    mut strategy: Box<dyn Strategy>,
    history: &mut Vec<(AliceMove, BobMove)>,
) -> Result<Node, Stop> {
    if ctx.nodes.fetch_add(1, Ordering::Relaxed) >= ctx.node_cap {
        return Err(Stop::Budget(format!("more than {} positions", ctx.node_cap)));
    }
    let Some(mv) = strategy.next_move(state)? else {
        return Err(Stop::Counter(history.clone(), state.clone()));
    };
    let sides = if state.paired { 2 } else { 1 };
    if state.round() >= ctx.cfg.caps.max_rounds {
        return Err(Stop::Budget(format!("more than {} rounds", ctx.cfg.caps.max_rounds)));
    }
    if state.n() + sides * mv.m > ctx.cfg.caps.max_vertices {
        return Err(Stop::Budget(format!("more than {} vertices", ctx.cfg.caps.max_vertices)));
    }
    let replies = legal_bob_moves(state, ctx.cfg, &mv)?;
    if replies.is_empty() {
        return Ok(Node::Stuck(stuck_leaf(state, ctx.cfg, &mv)?));
    }
    let children: Vec<Result<Reply, Stop>> = replies
        .par_iter()
        .map(|bob| {
            let next = state.apply(&mv, bob)?;
            let mut s = strategy.box_clone();
            s.observe(state, &mv, bob, &next)?;
            let mut h = history.clone();
            h.push((mv.clone(), bob.clone()));
            let node = explore(ctx, &next, s, &mut h)?;
            Ok(Reply { bob: bob.clone(), node })
        })
        .collect();
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        out.push(c?);
    }
    Ok(Node::Move { alice: mv, replies: out })
}

/// Certificates that every structural reply to `mv` breaks condition (i).
pub fn stuck_leaf(state: &GameState, cfg: &GameConfig, mv: &AliceMove) -> Result<Leaf, GameError> {
    let mut refutations = Vec::new();
    for bob in structural_candidates(state, cfg, mv)? {
        let next = state.apply(mv, &bob)?;
        let g = next.graph();
        let rainbow = match validate_layout(&g, &next.layout, None).expect("covers") {
            Validation::Rainbow(w) => Some(w),
            _ => None,
        };
        let overloaded: Vec<LocalityViolation> = next
            .layout
            .incident_queues()
            .into_iter()
            .enumerate()
            .filter(|(_, qs)| qs.len() as u32 > cfg.ell)
            .map(|(v, qs)| LocalityViolation {
                vertex: v as Vertex,
                queues: qs.into_iter().collect(),
                bound: cfg.ell,
            })
            .collect();
        if rainbow.is_none() && overloaded.is_empty() {
            return Err(GameError::InvalidBobMove(format!(
                "reply {bob:?} is legal but was not enumerated"
            )));
        }
        refutations.push(Refutation { bob, rainbow, overloaded });
    }
    Ok(Leaf {
        alice: mv.clone(),
        refutations,
    })
}

impl Refutation {
    /// Re-checks the certificates against the position they refute.
    pub fn verify(&self, state: &GameState, mv: &AliceMove) -> bool {
        let Ok(next) = state.apply(mv, &self.bob) else {
            return false;
        };
        let g = next.graph();
        let rainbow_ok = self
            .rainbow
            .as_ref()
            .is_none_or(|w| w.edges.len() == 2 && w.verify(&next.layout.order, Some(&next.layout.assign)));
        let local_ok = self.overloaded.iter().all(|l| l.verify(&g, &next.layout));
        (self.rainbow.is_some() || !self.overloaded.is_empty()) && rainbow_ok && local_ok
    }
}

impl CounterLayout {
    /// Replays the moves at `cfg` and checks every transition is legal.
    pub fn verify(&self, cfg: &GameConfig) -> Result<bool, GameError> {
        let init = initial_layouts(cfg);
        let Some(mut state) = init.into_iter().find(|s| LayoutRecord::from(&s.layout) == self.initial) else {
            return Ok(false);
        };
        for (mv, bob) in &self.moves {
            let (next, v) = check_transition(&state, cfg, mv, bob)?;
            if v.is_some() {
                return Ok(false);
            }
            state = next;
        }
        let g = state.graph();
        Ok(LayoutRecord::from(&state.layout) == self.layout
            && validate_layout(&g, &state.layout, Some(cfg.ell)).expect("covers").is_ok())
    }
}

/// Walks a tree alongside the positions it describes.
pub fn for_each_leaf(
    tree: &WinTree,
    visit: &mut dyn FnMut(&GameState, &Leaf),
) -> Result<(), GameError> {
    let init = initial_layouts(&tree.config);
    for root in &tree.roots {
        let state = init
            .iter()
            .find(|s| LayoutRecord::from(&s.layout) == root.initial)
            .ok_or_else(|| GameError::InvalidBobMove("unknown initial layout".into()))?;
        walk(state, &root.node, visit)?;
    }
    Ok(())
}

fn walk(state: &GameState, node: &Node, visit: &mut dyn FnMut(&GameState, &Leaf)) -> Result<(), GameError> {
    match node {
        Node::Stuck(leaf) => visit(state, leaf),
        Node::Move { alice, replies } => {
            for r in replies {
                walk(&state.apply(alice, &r.bob)?, &r.node, visit)?;
            }
        }
    }
    Ok(())
}

/// Independent re-check of a tree: every internal node lists exactly the
/// legal replies, every leaf has none, and every refutation verifies.
pub fn check_tree(tree: &WinTree) -> Result<bool, GameError> {
    let cfg = &tree.config;
    let init = initial_layouts(cfg);
    if init.len() != tree.roots.len() {
        return Ok(false);
    }
    fn rec(state: &GameState, node: &Node, cfg: &GameConfig) -> Result<bool, GameError> {
        match node {
            Node::Stuck(leaf) => {
                if !legal_bob_moves(state, cfg, &leaf.alice)?.is_empty() {
                    return Ok(false);
                }
                let cands = structural_candidates(state, cfg, &leaf.alice)?;
                Ok(cands.len() == leaf.refutations.len()
                    && cands.iter().zip(&leaf.refutations).all(|(b, r)| *b == r.bob)
                    && leaf.refutations.iter().all(|r| r.verify(state, &leaf.alice)))
            }
            Node::Move { alice, replies } => {
                let legal = legal_bob_moves(state, cfg, alice)?;
                if legal.len() != replies.len() || legal.iter().zip(replies).any(|(b, r)| *b != r.bob) {
                    return Ok(false);
                }
                for r in replies {
                    if !rec(&state.apply(alice, &r.bob)?, &r.node, cfg)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
    for (s, root) in init.iter().zip(&tree.roots) {
        if LayoutRecord::from(&s.layout) != root.initial || !rec(s, &root.node, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

impl WinTree {
    pub fn leaf_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Stuck(_) => 1,
                Node::Move { replies, .. } => replies.iter().map(|r| count(&r.node)).sum(),
            }
        }
        self.roots.iter().map(|r| count(&r.node)).sum()
    }

    /// Keeps one refutation per leaf.
    pub fn pruned(&self) -> WinTree {
        fn prune(n: &Node) -> Node {
            match n {
                Node::Stuck(leaf) => Node::Stuck(Leaf {
                    alice: leaf.alice.clone(),
                    refutations: leaf.refutations.iter().take(1).cloned().collect(),
                }),
                Node::Move { alice, replies } => Node::Move {
                    alice: alice.clone(),
                    replies: replies
                        .iter()
                        .map(|r| Reply {
                            bob: r.bob.clone(),
                            node: prune(&r.node),
                        })
                        .collect(),
                },
            }
        }
        WinTree {
            config: self.config.clone(),
            strategy: self.strategy.clone(),
            roots: self
                .roots
                .iter()
                .map(|r| Root {
                    initial: r.initial.clone(),
                    node: prune(&r.node),
                })
                .collect(),
        }
    }
}
