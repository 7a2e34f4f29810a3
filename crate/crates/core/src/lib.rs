//! Shapley-fair split/merge coalition formation.
//!
//! Coalitions split when members carry negative Shapley value in their
//! restricted game and merge when the union strictly raises total value.
//! [`dynamics`] runs the process and tracks the vector Lyapunov value
//! `(-Psi, Phi)`; [`oracle`] checks fixed points, invariant sets and
//! monotonicity by exhausting the partition space of small games.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod generators;
pub mod oracle;
pub mod registry;
pub mod rng;
pub mod shapley;
pub mod verify;

pub use error::{Error, Result};
pub use game::{coalition_of, load_game, save_game, Coalition, Game, Partition, PlayerId};

#[cfg(test)]
mod properties;
