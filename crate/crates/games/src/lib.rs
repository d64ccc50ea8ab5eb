//! Alice/Bob construction games on local queue layouts.
//!
//! Alice grows a k-tree round by round and Bob extends an l-local queue
//! layout of it under a set of conditions. Bob is played by exhaustive
//! search, so a [`verify::WinTree`] is a proof that Alice's strategy wins.

pub mod assemble;
pub mod lifts;
pub mod nonnesting;
pub mod rules;
pub mod state;
pub mod strategy;
pub mod verify;

pub use rules::{check_transition, legal_bob_moves, naive_bob_moves, Violation};
pub use state::{initial_layouts, AliceMove, BobMove, Caps, GameConfig, GameError, GameState, Level, Side};
