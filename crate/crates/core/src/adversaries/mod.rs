//! Adversary strategies and their name registry.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::game::{AdversaryAction, GameParams, GameState};
use crate::registry::{ComponentSpec, Registration, Registry, SpecError};
use crate::rules::ChainRule;

mod builder;
pub mod genesis;
pub mod search;
pub mod universal;
pub mod weight;

pub use builder::SegmentBuilder;
pub use genesis::GenesisAttack;
pub use search::{grid_search, GridSearch, SearchReport, NODE_LIMIT};
pub use universal::{
    replot_schedule, universal_profiles, Direction, ProfilePair, ReplotSchedule, UniversalAttack,
};
pub use weight::{Horizon, WeightAttack};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("replot target {target} is below the per-replot increment {increment}")]
    TargetTooSmall { target: f64, increment: f64 },
    #[error("replot schedule needs {needed} rounds, only {available} available")]
    ReplotBudget { needed: u64, available: u64 },
    #[error("search tree has {nodes} nodes, limit is {limit}")]
    SearchBudget { nodes: u64, limit: u64 },
    #[error("no winning strategy with fork length at most {max_fork}")]
    NoneFound { max_fork: usize },
    #[error("script exhausted at round {0}")]
    Exhausted(usize),
    #[error("script out of sync: {0}")]
    OutOfSync(String),
}

/// A deterministic move generator for one game.
pub trait Strategy: Send + fmt::Debug {
    /// Canonical spec string, e.g. `universal:direction=s`.
    fn spec(&self) -> String;

    /// Action for round `state.round() + 1`.
    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError>;
}

/// Plays back a fixed list of actions.
#[derive(Debug, Clone)]
pub struct Scripted {
    name: String,
    actions: Vec<AdversaryAction>,
}

impl Scripted {
    pub fn new(name: impl Into<String>, actions: Vec<AdversaryAction>) -> Self {
        Self {
            name: name.into(),
            actions,
        }
    }
}

impl Strategy for Scripted {
    fn spec(&self) -> String {
        self.name.clone()
    }

    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError> {
        self.actions
            .get(state.round())
            .cloned()
            .ok_or(StrategyError::Exhausted(state.round() + 1))
    }
}

pub type StrategyFactory =
    fn(&ComponentSpec, &GameParams, &dyn ChainRule) -> Result<Box<dyn Strategy>, StrategyError>;

fn weight_horizon(spec: &ComponentSpec) -> Result<Horizon, SpecError> {
    spec.expect_keys(&["horizon"])?;
    match spec.get("horizon") {
        None | Some("threshold") => Ok(Horizon::Threshold),
        Some("min") => Ok(Horizon::Min),
        Some(_) => Err(spec.invalid("horizon must be threshold or min")),
    }
}

fn genesis_window(spec: &ComponentSpec) -> Result<u64, SpecError> {
    spec.expect_keys(&["k"])?;
    let k: u64 = spec.require("k")?;
    if k == 0 {
        return Err(spec.invalid("k must be at least 1"));
    }
    Ok(k)
}

fn direction(spec: &ComponentSpec) -> Result<Direction, SpecError> {
    spec.expect_keys(&["direction"])?;
    match spec.require::<String>("direction")?.as_str() {
        "s" => Ok(Direction::FakeS),
        "stilde" => Ok(Direction::FakeSTilde),
        _ => Err(spec.invalid("direction must be s or stilde")),
    }
}

fn max_fork(spec: &ComponentSpec) -> Result<usize, SpecError> {
    spec.expect_keys(&["max_fork"])?;
    spec.require("max_fork")
}

pub static STRATEGIES: Registry<StrategyFactory> = Registry::new(
    "strategy",
    &[
        Registration {
            name: "weight-attack",
            usage: "weight-attack[:horizon=<threshold|min>]",
            check: |s| weight_horizon(s).map(drop),
            build: |s, p, _| Ok(Box::new(WeightAttack::new(p, weight_horizon(s)?))),
        },
        Registration {
            name: "genesis-attack",
            usage: "genesis-attack:k=<int>",
            check: |s| genesis_window(s).map(drop),
            build: |s, p, _| Ok(Box::new(GenesisAttack::new(p, genesis_window(s)?)?)),
        },
        Registration {
            name: "universal",
            usage: "universal:direction=<s|stilde>",
            check: |s| direction(s).map(drop),
            build: |s, p, _| Ok(Box::new(UniversalAttack::new(p, direction(s)?)?)),
        },
        Registration {
            name: "grid-search",
            usage: "grid-search:max_fork=<int>",
            check: |s| max_fork(s).map(drop),
            build: |s, p, rule| Ok(Box::new(GridSearch::new(p, rule, max_fork(s)?)?)),
        },
    ],
);

/// A validated strategy spec string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySpec(ComponentSpec);

impl StrategySpec {
    pub fn component(&self) -> &ComponentSpec {
        &self.0
    }

    /// Builds the strategy for one game. Some strategies (grid search) need
    /// the rule they play against.
    pub fn build(
        &self,
        params: &GameParams,
        rule: &dyn ChainRule,
    ) -> Result<Box<dyn Strategy>, StrategyError> {
        (STRATEGIES.lookup(self.0.name())?.build)(&self.0, params, rule)
    }
}

impl FromStr for StrategySpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        STRATEGIES.parse(s).map(Self)
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
