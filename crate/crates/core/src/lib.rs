//! Quasidiffusions and skip-free Hunt processes on nearly closed subsets of
//! the real line: state spaces, speed measures, scale functions, Dirichlet
//! energy forms, finite-state oracles and path simulation.

pub mod bracket;
pub mod error;
pub mod sets;

pub use bracket::Bracket;
pub use error::{Error, Result};
pub mod catalog;
pub mod forms;
pub mod lattice;
pub mod markov;
pub mod measures;
pub mod pl;
pub mod scale;
