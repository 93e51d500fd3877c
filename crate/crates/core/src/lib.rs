//! Solvers for principal-agent coordination problems.
//!
//! A principal commits to a coordination mechanism: the agent reports its
//! private type, the mechanism draws an action recommendation together with
//! a strategy from a polyhedral space, and the agent -- who only sees its
//! own recommendation -- must prefer truthful reporting and obedience. The
//! crate computes optimal mechanisms through a perspective (homogenization)
//! transform of the underlying conic program, repairs boundary optima that
//! place strategy mass on zero-probability recommendations, and specializes
//! the machinery to contract design, persuasion, Stackelberg leadership,
//! information selling, and optimal costly information acquisition.

pub mod apps;
pub mod error;
pub mod graph;
pub mod info;
pub mod lp;
pub mod model;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    AffineForm, ConcavePwl, IcReport, PaInstance, Polyhedron, SuccinctMechanism, ValidationReport,
};
pub use solver::{MechanismResult, Tolerances, TransformedSolution};
