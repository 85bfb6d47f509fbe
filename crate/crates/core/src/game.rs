//! The forking game as a validated state machine.
//!
//! Each round the adversary picks a space adjustment `gamma`, the honest chain
//! grows by one block of space `h_i = phi * a_i`, and then (lock permitting) the
//! adversary may bootstrap blocks, replot its last block and stop, in that
//! order. A replot locks the adversary for `rho - 1` further rounds.

use std::fmt;

use thiserror::Error;

use crate::adversaries::{Strategy, StrategyError};
use crate::model::{fork_point, within_limit, Block, Chain, ForkPoint, ModelError, REL_TOL};
use crate::rules::{ChainRule, Winner};

/// Games that have not stopped after this many rounds are aborted.
pub const ROUND_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("phi must be finite and greater than 1, got {0}")]
    Phi(f64),
    #[error("epsilon must be finite and positive, got {0}")]
    Epsilon(f64),
    #[error("rho must be at least 2, got {0}")]
    Rho(u32),
    #[error("initial adversarial space must be finite and positive, got {0}")]
    InitialSpace(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    phi: f64,
    epsilon: f64,
    rho: u32,
    a0: f64,
}

impl GameParams {
    /// Parameters with the default initial adversarial space `1 / phi`.
    pub fn new(phi: f64, epsilon: f64, rho: u32) -> Result<Self, ParamError> {
        check_phi(phi)?;
        Self::with_initial_space(phi, epsilon, rho, 1.0 / phi)
    }

    pub fn with_initial_space(
        phi: f64,
        epsilon: f64,
        rho: u32,
        a0: f64,
    ) -> Result<Self, ParamError> {
        check_phi(phi)?;
        check_epsilon(epsilon)?;
        if rho < 2 {
            return Err(ParamError::Rho(rho));
        }
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(ParamError::InitialSpace(a0));
        }
        Ok(Self {
            phi,
            epsilon,
            rho,
            a0,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `1 + epsilon`, the largest per-round growth factor.
    pub fn growth(&self) -> f64 {
        1.0 + self.epsilon
    }

    /// `1 / (1 + epsilon)`, the largest per-round shrink factor.
    pub fn shrink(&self) -> f64 {
        1.0 / (1.0 + self.epsilon)
    }

    pub fn gamma_in_range(&self, gamma: f64) -> bool {
        gamma.is_finite()
            && gamma >= self.shrink() * (1.0 - REL_TOL)
            && within_limit(gamma, self.growth())
    }
}

pub(crate) fn check_phi(phi: f64) -> Result<(), ParamError> {
    if phi > 1.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(ParamError::Phi(phi))
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<(), ParamError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(ParamError::Epsilon(epsilon))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    /// Append blocks with these spaces to the adversarial chain.
    Bootstrap(Vec<f64>),
    /// Add this much space to the last adversarial block.
    Replot(f64),
    Stop,
}

impl Move {
    fn rank(&self) -> u8 {
        match self {
            Move::Bootstrap(_) => 0,
            Move::Replot(_) => 1,
            Move::Stop => 2,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Move::Bootstrap(_) => "bootstrap",
            Move::Replot(_) => "replot",
            Move::Stop => "stop",
        }
    }
}

/// One round of adversarial choices. `moves` holds at most one bootstrap, one
/// replot and one stop, in that order; an empty list means "none".
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryAction {
    pub gamma: f64,
    pub moves: Vec<Move>,
}

impl AdversaryAction {
    pub fn idle(gamma: f64) -> Self {
        Self {
            gamma,
            moves: Vec::new(),
        }
    }

    pub fn with(mut self, m: Move) -> Self {
        self.moves.push(m);
        self
    }

    pub fn bootstrap(self, sizes: Vec<f64>) -> Self {
        self.with(Move::Bootstrap(sizes))
    }

    pub fn replot(self, add: f64) -> Self {
        self.with(Move::Replot(add))
    }

    pub fn stop(self) -> Self {
        self.with(Move::Stop)
    }

    pub fn is_idle(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn has_replot(&self) -> bool {
        self.moves.iter().any(|m| matches!(m, Move::Replot(_)))
    }

    pub fn has_stop(&self) -> bool {
        self.moves.contains(&Move::Stop)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("game already stopped")]
    Stopped,
    #[error("gamma {gamma} outside [{min}, {max}]")]
    GammaOutOfRange { gamma: f64, min: f64, max: f64 },
    #[error("moves must be bootstrap, replot, stop in that order, each at most once")]
    MoveOrder,
    #[error("empty bootstrap")]
    EmptyBootstrap,
    #[error("bootstrap block {index} has space {size}, limit is {limit}")]
    BlockTooLarge { index: usize, size: f64, limit: f64 },
    #[error("replot adds {add}, limit is {limit}")]
    ReplotTooLarge { add: f64, limit: f64 },
    #[error("non-positive space {0}")]
    NonPositive(f64),
    #[error("cannot replot the genesis block")]
    ReplotGenesis,
    #[error("{0} replot round(s) still locked")]
    Locked(u32),
    #[error("cannot stop while replotting (lock {0})")]
    StopWhileLocked(u32),
    #[error("cannot stop: adversarial chain reaches index {tip}, round is {round}")]
    ChainTooShort { tip: usize, round: usize },
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("round {round}: {source}")]
    Action { round: usize, source: ActionError },
    #[error("round {round}: strategy failed: {source}")]
    Strategy { round: usize, source: StrategyError },
    #[error("no stop within {0} rounds")]
    RoundCap(usize),
    #[error("game has not stopped")]
    NotStopped,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl GameError {
    /// Round at which the game failed, when the failure is tied to one.
    pub fn round(&self) -> Option<usize> {
        match self {
            GameError::Action { round, .. } | GameError::Strategy { round, .. } => Some(*round),
            GameError::RoundCap(cap) => Some(*cap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    params: GameParams,
    round: usize,
    lock: u32,
    adv_space: f64,
    honest_space: f64,
    honest_chain: Chain,
    adv_chain: Chain,
    stopped: bool,
    next_adv_id: u64,
}

impl GameState {
    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn lock(&self) -> u32 {
        self.lock
    }

    pub fn adv_space(&self) -> f64 {
        self.adv_space
    }

    pub fn honest_space(&self) -> f64 {
        self.honest_space
    }

    pub fn honest_chain(&self) -> &Chain {
        &self.honest_chain
    }

    pub fn adv_chain(&self) -> &Chain {
        &self.adv_chain
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    /// Adversarial space the next round would have after adjustment `gamma`.
    pub fn next_adv_space(&self, gamma: f64) -> f64 {
        self.adv_space * gamma
    }

    /// True when the next round lets the adversary bootstrap or replot.
    pub fn next_round_free(&self) -> bool {
        self.lock == 0
    }

    /// Field-by-field equality with floats compared by bit pattern.
    pub fn bitwise_eq(&self, other: &GameState) -> bool {
        let same_chain = |a: &Chain, b: &Chain| {
            a.len() == b.len()
                && a.blocks().iter().zip(b.blocks()).all(|(x, y)| {
                    x.space.to_bits() == y.space.to_bits() && x.payload_id == y.payload_id
                })
        };
        self.params == other.params
            && self.round == other.round
            && self.lock == other.lock
            && self.adv_space.to_bits() == other.adv_space.to_bits()
            && self.honest_space.to_bits() == other.honest_space.to_bits()
            && self.stopped == other.stopped
            && self.next_adv_id == other.next_adv_id
            && same_chain(&self.honest_chain, &other.honest_chain)
            && same_chain(&self.adv_chain, &other.adv_chain)
    }

    /// Plays one round. The state is left untouched when the action is illegal.
    pub fn step_mut(&mut self, action: &AdversaryAction) -> Result<(), ActionError> {
        if self.stopped {
            return Err(ActionError::Stopped);
        }
        let p = self.params;
        if !p.gamma_in_range(action.gamma) {
            return Err(ActionError::GammaOutOfRange {
                gamma: action.gamma,
                min: p.shrink(),
                max: p.growth(),
            });
        }
        if !action.moves.windows(2).all(|w| w[0].rank() < w[1].rank()) {
            return Err(ActionError::MoveOrder);
        }

        let round = self.round + 1;
        let a = self.adv_space * action.gamma;
        let h = p.phi * a;

        let mut lock_after = self.lock.saturating_sub(1);
        let mut adv_tip = self.adv_chain.tip_index();
        for m in &action.moves {
            match m {
                Move::Stop => {}
                _ if self.lock > 0 => return Err(ActionError::Locked(self.lock)),
                Move::Bootstrap(sizes) => {
                    if sizes.is_empty() {
                        return Err(ActionError::EmptyBootstrap);
                    }
                    for (index, &size) in sizes.iter().enumerate() {
                        if !(size > 0.0 && size.is_finite()) {
                            return Err(ActionError::NonPositive(size));
                        }
                        if !within_limit(size, a) {
                            return Err(ActionError::BlockTooLarge {
                                index,
                                size,
                                limit: a,
                            });
                        }
                    }
                    adv_tip += sizes.len();
                }
                Move::Replot(add) => {
                    if !(*add > 0.0 && add.is_finite()) {
                        return Err(ActionError::NonPositive(*add));
                    }
                    if !within_limit(*add, a) {
                        return Err(ActionError::ReplotTooLarge {
                            add: *add,
                            limit: a,
                        });
                    }
                    if adv_tip == 0 {
                        return Err(ActionError::ReplotGenesis);
                    }
                    lock_after = p.rho - 1;
                }
            }
        }
        if action.has_stop() {
            if lock_after > 0 {
                return Err(ActionError::StopWhileLocked(lock_after));
            }
            if adv_tip < round {
                return Err(ActionError::ChainTooShort {
                    tip: adv_tip,
                    round,
                });
            }
        }

        self.round = round;
        self.adv_space = a;
        self.honest_space = h;
        self.honest_chain.push(Block {
            space: h,
            payload_id: 2 * round as u64,
        });
        self.lock = lock_after;
        for m in &action.moves {
            match m {
                Move::Bootstrap(sizes) => {
                    for &space in sizes {
                        let payload_id = self.take_adv_id();
                        self.adv_chain.push(Block { space, payload_id });
                    }
                }
                Move::Replot(add) => {
                    let space = self.adv_chain.last().space + add;
                    let payload_id = self.take_adv_id();
                    self.adv_chain.replace_last(Block { space, payload_id });
                }
                Move::Stop => self.stopped = true,
            }
        }
        Ok(())
    }

    /// Pure variant of [`GameState::step_mut`].
    pub fn step(&self, action: &AdversaryAction) -> Result<GameState, ActionError> {
        let mut next = self.clone();
        next.step_mut(action)?;
        Ok(next)
    }

    fn take_adv_id(&mut self) -> u64 {
        let id = self.next_adv_id;
        self.next_adv_id += 2;
        id
    }

    pub fn evaluate(&self, rule: &dyn ChainRule) -> Result<Outcome, GameError> {
        if !self.stopped {
            return Err(GameError::NotStopped);
        }
        let adv = self.adv_chain.prefix(self.round + 1);
        Ok(evaluate_chains(rule, &self.honest_chain, &adv)?)
    }
}

/// Starting position: both chains hold the genesis block only.
pub fn initial_state(params: &GameParams) -> GameState {
    GameState {
        params: *params,
        round: 0,
        lock: 0,
        adv_space: params.a0,
        honest_space: params.a0 * params.phi,
        honest_chain: Chain::genesis(),
        adv_chain: Chain::genesis(),
        stopped: false,
        next_adv_id: 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub winner: Winner,
    /// Chain length minus the length of the common prefix.
    pub fork_length: usize,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "winner={} fork_length={}",
            self.winner.bit(),
            self.fork_length
        )
    }
}

/// Applies `rule` to two equal-length chains and measures the fork.
pub fn evaluate_chains(
    rule: &dyn ChainRule,
    honest: &Chain,
    adversarial: &Chain,
) -> Result<Outcome, ModelError> {
    let fork_length = match fork_point(honest, adversarial)? {
        ForkPoint::Identical => 0,
        ForkPoint::At(first_diff) => honest.tip_index() + 1 - first_diff,
    };
    Ok(Outcome {
        winner: rule.select(honest, adversarial)?,
        fork_length,
    })
}

/// A finished game: everything needed to replay and re-evaluate it.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub params: GameParams,
    pub rule: String,
    pub strategy: String,
    pub actions: Vec<AdversaryAction>,
    pub final_state: GameState,
    pub outcome: Outcome,
}

impl Transcript {
    /// Replays the recorded actions from the initial state.
    pub fn replay(&self) -> Result<GameState, GameError> {
        replay_actions(&self.params, &self.actions)
    }

    /// Rounds (1-based) in which a replot was issued.
    pub fn replot_rounds(&self) -> Vec<usize> {
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.has_replot())
            .map(|(i, _)| i + 1)
            .collect()
    }
}

pub fn replay_actions(
    params: &GameParams,
    actions: &[AdversaryAction],
) -> Result<GameState, GameError> {
    let mut state = initial_state(params);
    for action in actions {
        state.step_mut(action).map_err(|source| GameError::Action {
            round: state.round() + 1,
            source,
        })?;
    }
    Ok(state)
}

/// Drives `strategy` until it stops, then evaluates the result under `rule`.
pub fn run_game(
    params: &GameParams,
    strategy: &mut dyn Strategy,
    rule: &dyn ChainRule,
) -> Result<Transcript, GameError> {
    run_game_with_cap(params, strategy, rule, ROUND_CAP)
}

pub fn run_game_with_cap(
    params: &GameParams,
    strategy: &mut dyn Strategy,
    rule: &dyn ChainRule,
    cap: usize,
) -> Result<Transcript, GameError> {
    let mut state = initial_state(params);
    let mut actions = Vec::new();
    while !state.is_stopped() {
        let round = state.round() + 1;
        if round > cap {
            return Err(GameError::RoundCap(cap));
        }
        let action = strategy
            .next_action(&state)
            .map_err(|source| GameError::Strategy { round, source })?;
        state
            .step_mut(&action)
            .map_err(|source| GameError::Action { round, source })?;
        actions.push(action);
    }
    let outcome = state.evaluate(rule)?;
    Ok(Transcript {
        params: *params,
        rule: rule.spec(),
        strategy: strategy.spec(),
        actions,
        final_state: state,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::WeightRule;

    fn params() -> GameParams {
        GameParams::new(2.0, 0.01, 4).unwrap()
    }

    #[test]
    fn initial_states() {
        let s = initial_state(&GameParams::with_initial_space(2.0, 0.01, 4, 0.5).unwrap());
        assert_eq!(s.honest_space(), 1.0);
        assert_eq!((s.honest_chain().len(), s.adv_chain().len()), (1, 1));
        let s = initial_state(&GameParams::with_initial_space(1.5, 0.1, 2, 2.0 / 3.0).unwrap());
        assert!((s.honest_space() - 1.0).abs() < 1e-15);
        assert_eq!(GameParams::new(2.0, 0.01, 1), Err(ParamError::Rho(1)));
        assert_eq!(GameParams::new(1.0, 0.01, 2), Err(ParamError::Phi(1.0)));
        assert_eq!(GameParams::new(2.0, 0.0, 2), Err(ParamError::Epsilon(0.0)));
    }

    #[test]
    fn growth_round() {
        let s = initial_state(&params())
            .step(&AdversaryAction::idle(1.01))
            .unwrap();
        assert_eq!(s.round(), 1);
        assert_eq!(s.honest_space(), 1.01);
        assert_eq!(s.honest_chain().last().space, 1.01);
        assert_eq!(s.honest_chain().len(), 2);
    }

    #[test]
    fn replot_locks_for_rho_minus_one_rounds() {
        let s = initial_state(&params())
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5]))
            .unwrap();
        let s = s.step(&AdversaryAction::idle(1.0).replot(0.5)).unwrap();
        assert_eq!(s.adv_chain().last().space, 1.0);
        assert_eq!(s.lock(), 3);
        let mut s = s;
        for expected in [2, 1, 0] {
            let bad = AdversaryAction::idle(1.0).bootstrap(vec![0.1]);
            assert_eq!(s.step(&bad), Err(ActionError::Locked(expected + 1)));
            s = s.step(&AdversaryAction::idle(1.0)).unwrap();
            assert_eq!(s.lock(), expected);
        }
        assert!(s.step(&AdversaryAction::idle(1.0).replot(0.5)).is_ok());
    }

    #[test]
    fn oversized_moves_rejected() {
        let s = initial_state(&params());
        let err = s
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5 * 1.001]))
            .unwrap_err();
        assert!(matches!(err, ActionError::BlockTooLarge { index: 0, .. }));
        assert_eq!(
            s.step(&AdversaryAction::idle(1.0).replot(0.1)),
            Err(ActionError::ReplotGenesis)
        );
        assert!(matches!(
            s.step(&AdversaryAction::idle(1.02)),
            Err(ActionError::GammaOutOfRange { .. })
        ));
        assert_eq!(
            s.step(&AdversaryAction::idle(1.0).replot(0.1).bootstrap(vec![0.1])),
            Err(ActionError::MoveOrder)
        );
        // a bootstrap at the limit up to float noise is accepted
        assert!(s
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5 * (1.0 + 1e-12)]))
            .is_ok());
    }

    #[test]
    fn stop_rules() {
        let s = initial_state(&params());
        let short = s.step(&AdversaryAction::idle(1.0).stop());
        assert_eq!(short, Err(ActionError::ChainTooShort { tip: 0, round: 1 }));
        let s1 = s
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5, 0.5]))
            .unwrap();
        let locked = s1.step(&AdversaryAction::idle(1.0).replot(0.5).stop());
        assert_eq!(locked, Err(ActionError::StopWhileLocked(3)));
        let done = s1.step(&AdversaryAction::idle(1.0).stop()).unwrap();
        assert!(done.is_stopped());
        assert_eq!(
            done.step(&AdversaryAction::idle(1.0)),
            Err(ActionError::Stopped)
        );
    }

    #[test]
    fn stop_allowed_when_lock_expires() {
        let p = GameParams::new(2.0, 0.01, 2).unwrap();
        let s = initial_state(&p)
            .step(
                &AdversaryAction::idle(1.0)
                    .bootstrap(vec![0.5, 0.5])
                    .replot(0.5),
            )
            .unwrap();
        assert_eq!(s.lock(), 1);
        let s = s.step(&AdversaryAction::idle(1.0).stop()).unwrap();
        assert!(s.is_stopped());
    }

    #[test]
    fn evaluate_requires_stop_and_measures_fork() {
        let s = initial_state(&params())
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5; 3]))
            .unwrap();
        assert!(matches!(
            s.evaluate(&WeightRule),
            Err(GameError::NotStopped)
        ));
        let s = s.step(&AdversaryAction::idle(1.0).stop()).unwrap();
        let out = s.evaluate(&WeightRule).unwrap();
        assert_eq!(
            out,
            Outcome {
                winner: Winner::Honest,
                fork_length: 2
            }
        );

        let c = Chain::from_profile(&[1.0, 1.0, 1.0], 1).unwrap();
        let same = evaluate_chains(&WeightRule, &c, &c).unwrap();
        assert_eq!(same.fork_length, 0);
        assert_eq!(same.winner, Winner::Adversary);
    }

    #[test]
    fn ids_distinguish_chains() {
        let s = initial_state(&params())
            .step(&AdversaryAction::idle(1.0).bootstrap(vec![0.5]).replot(0.5))
            .unwrap();
        let adv = s.adv_chain().blocks();
        let honest = s.honest_chain().blocks();
        assert_eq!(adv[1].space, honest[1].space);
        assert_ne!(adv[1], honest[1]);
    }
}
