//! Simulation and verification of the forking game for proof-of-space
//! longest-chain protocols.
//!
//! * [`model`]: chains, space profiles, fork points, tent fitting.
//! * [`rules`]: heaviest-chain, genesis-window and tent selection rules.
//! * [`game`]: the round-by-round game engine and transcripts.
//! * [`adversaries`]: scripted attacks and an exhaustive grid search.
//! * [`bounds`]: closed-form fork-length bounds.
//! * [`transcript`], [`profile_csv`]: text formats.

pub mod adversaries;
pub mod bounds;
pub mod game;
pub mod model;
pub mod profile_csv;
pub mod registry;
pub mod rules;
pub mod transcript;

pub use adversaries::{Strategy, StrategyError, StrategySpec};
pub use game::{
    initial_state, run_game, AdversaryAction, GameError, GameParams, GameState, Move, Outcome,
    Transcript,
};
pub use model::{Chain, SpaceProfile, REL_TOL};
pub use rules::{ChainRule, RuleSpec, Winner};
