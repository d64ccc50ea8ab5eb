//! Alice strategies.

use queuelay_core::graph::Vertex;
use queuelay_core::ktree::FIVE_ROUND_PARENTS;

use crate::state::{AliceMove, BobMove, GameConfig, GameError, GameState, Side};

pub trait Strategy: Send + Sync {
    fn name(&self) -> String;

    fn check_config(&self, _cfg: &GameConfig) -> Result<(), GameError> {
        Ok(())
    }

    /// Alice's next move, or `None` when the strategy has nothing left to play.
    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError>;

    /// Called after Bob answered the last move.
    fn observe(&mut self, _before: &GameState, _mv: &AliceMove, _bob: &BobMove, _after: &GameState) -> Result<(), GameError> {
        Ok(())
    }

    fn box_clone(&self) -> Box<dyn Strategy>;
}

impl Clone for Box<dyn Strategy> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// A fixed list of moves by vertex id.
#[derive(Clone, Debug)]
pub struct Script {
    pub name: String,
    pub moves: Vec<AliceMove>,
}

impl Script {
    pub fn new(name: impl Into<String>, moves: Vec<AliceMove>) -> Self {
        Script {
            name: name.into(),
            moves,
        }
    }
}

impl Strategy for Script {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        Ok(self.moves.get(state.round()).cloned())
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

/// One child of the initial clique, once.
pub fn weak_strategy(k: usize) -> Script {
    Script::new("weak", vec![AliceMove::new((0..k as Vertex).collect(), 1)])
}

/// Rounds played after Bob puts a child edge into the queue of its parent
/// edge. The other child edge `e'` then has both endpoints saturated with
/// two queues, and everything grown from `e'` is confined to those two
/// queues. Local vertex 0 and 1 are the left and right end of `e'`, local
/// vertex `j >= 2` is the child made by entry `j - 2`.
pub const CONFINEMENT_SCRIPT: &[[usize; 2]] = &[[0, 1], [0, 2], [1, 2], [0, 3]];

#[derive(Clone, Debug)]
enum FiveRoundMode {
    Main,
    Confined { local: Vec<Vertex>, start: usize },
}

/// Five single-child rounds on the parents of the fixed witness 2-tree,
/// switching to [`CONFINEMENT_SCRIPT`] when Bob escapes into the parent queue.
#[derive(Clone, Debug)]
pub struct FiveRoundStrategy {
    mode: FiveRoundMode,
    script: Vec<[usize; 2]>,
}

pub fn five_round_strategy() -> FiveRoundStrategy {
    FiveRoundStrategy::with_confinement(CONFINEMENT_SCRIPT.to_vec())
}

impl FiveRoundStrategy {
    pub fn with_confinement(script: Vec<[usize; 2]>) -> Self {
        FiveRoundStrategy {
            mode: FiveRoundMode::Main,
            script,
        }
    }

    /// The root edge of the confined subtree, once the escape happened.
    pub fn confined_root(&self) -> Option<(Vertex, Vertex)> {
        match &self.mode {
            FiveRoundMode::Confined { local, .. } => Some((local[0], local[1])),
            FiveRoundMode::Main => None,
        }
    }
}

impl Strategy for FiveRoundStrategy {
    fn name(&self) -> String {
        "five-round".into()
    }

    fn check_config(&self, cfg: &GameConfig) -> Result<(), GameError> {
        if cfg.k != 2 || cfg.ell != 2 || cfg.level != 5 {
            return Err(GameError::ConfigMismatch("the five-round strategy needs k = l = 2 at level v".into()));
        }
        Ok(())
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        match &self.mode {
            FiveRoundMode::Main => Ok(FIVE_ROUND_PARENTS
                .get(state.round())
                .map(|p| AliceMove::new(vec![p[0] as Vertex - 1, p[1] as Vertex - 1], 1))),
            FiveRoundMode::Confined { local, start } => {
                let i = state.round() - start;
                Ok(self
                    .script
                    .get(i)
                    .map(|&[a, b]| AliceMove::new(vec![local[a], local[b]], 1)))
            }
        }
    }

    fn observe(&mut self, _before: &GameState, mv: &AliceMove, _bob: &BobMove, after: &GameState) -> Result<(), GameError> {
        let rec = after.rounds.last().expect("round played");
        match &mut self.mode {
            FiveRoundMode::Main => {
                let x = rec.children[0];
                let [a, b] = [mv.clique[0], mv.clique[1]];
                let parent_q = after.queue(a, b);
                let other = if after.queue(a, x) == parent_q {
                    Some(b)
                } else if after.queue(b, x) == parent_q {
                    Some(a)
                } else {
                    None
                };
                if let Some(c) = other {
                    let (l, r) = if after.position(c) < after.position(x) { (c, x) } else { (x, c) };
                    self.mode = FiveRoundMode::Confined {
                        local: vec![l, r],
                        start: after.round(),
                    };
                }
            }
            FiveRoundMode::Confined { local, .. } => local.push(rec.children[0]),
        }
        Ok(())
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

/// Game vii: `v` is the leftmost vertex of the left initial clique and
/// `x0` its rightmost. Round i adds one child to a clique holding `v` and the
/// previous child, so after l rounds `v` needs l+1 queues.
#[derive(Clone, Debug)]
pub struct OverloadStrategy {
    pub k: usize,
    pub ell: u32,
    clique: Vec<Vertex>,
    v: Option<Vertex>,
}

pub fn overload_strategy(k: usize, ell: u32) -> OverloadStrategy {
    OverloadStrategy {
        k,
        ell,
        clique: Vec::new(),
        v: None,
    }
}

impl OverloadStrategy {
    /// The vertex that runs out of queues.
    pub fn target(&self) -> Option<Vertex> {
        self.v
    }
}

/// The vertex `v` the overload strategy starts from in a given initial layout.
pub fn overload_target(state: &GameState) -> Vertex {
    *state
        .init_clique(Side::Left)
        .iter()
        .min_by_key(|&&v| state.position(v))
        .expect("k >= 1")
}

impl Strategy for OverloadStrategy {
    fn name(&self) -> String {
        format!("overload(k={},l={})", self.k, self.ell)
    }

    fn check_config(&self, cfg: &GameConfig) -> Result<(), GameError> {
        if cfg.level != 7 || cfg.k != self.k || cfg.ell != self.ell {
            return Err(GameError::ConfigMismatch(format!(
                "the overload strategy was built for k = {}, l = {} at level vii",
                self.k, self.ell
            )));
        }
        Ok(())
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        let r = state.round();
        if r >= self.ell as usize {
            return Ok(None);
        }
        // replayed from the position so repeated calls agree
        let v = overload_target(state);
        let mut clique = state.init_clique(Side::Left).to_vec();
        for rec in &state.rounds[..r] {
            let drop = *clique
                .iter()
                .filter(|&&c| c != v)
                .min_by_key(|&&c| state.position(c))
                .ok_or_else(|| GameError::ConfigMismatch("the overload strategy needs k >= 2".into()))?;
            clique.retain(|&c| c != drop);
            clique.push(rec.children[0]);
        }
        self.v = Some(v);
        self.clique = clique;
        Ok(Some(AliceMove::new(self.clique.clone(), 1)))
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

/// Random moves on the left side: the initial clique, or a child together
/// with all but one vertex of its parent clique. Seeded per round, so the
/// same position always gets the same move.
#[derive(Clone, Debug)]
pub struct RandomCliques {
    pub seed: u64,
    pub rounds: usize,
    pub max_children: usize,
}

impl Strategy for RandomCliques {
    fn name(&self) -> String {
        format!("random(seed={})", self.seed)
    }

    fn next_move(&mut self, state: &GameState) -> Result<Option<AliceMove>, GameError> {
        use rand::{Rng, SeedableRng};
        let r = state.round();
        if r >= self.rounds {
            return Ok(None);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let m = rng.gen_range(1..=self.max_children.max(1));
        let kids: Vec<Vertex> = state
            .vertices_of(Side::Left)
            .filter(|&v| state.parent_of(v).is_some())
            .collect();
        if kids.is_empty() || rng.gen_bool(0.25) {
            return Ok(Some(AliceMove::new(state.init_clique(Side::Left).to_vec(), m)));
        }
        let x = kids[rng.gen_range(0..kids.len())];
        let mut clique = state.parent_of(x).expect("child").to_vec();
        clique.remove(rng.gen_range(0..clique.len()));
        clique.push(x);
        Ok(Some(AliceMove::new(clique, m)))
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}
