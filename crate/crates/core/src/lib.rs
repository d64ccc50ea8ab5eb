//! Queue layouts with bounded per-vertex locality.
//!
//! Graphs and k-tree construction sequences, layout predicates and
//! validation, constructive layouts, density bounds, and exact solvers for
//! the queue number and local queue number of small graphs.

pub mod bounds;
pub mod constructors;
mod flow;
pub mod graph;
pub mod io;
pub mod ktree;
pub mod layout;
pub mod solver;

pub use bounds::{BoundsReport, Rational};
pub use graph::{Edge, Graph, GraphError, Vertex};
pub use ktree::{ConstructionSequence, EdgeDepthMap, KTreeError, Step};
pub use layout::{LinearOrder, QueueId, QueueLayout, RainbowWitness, Validation};
