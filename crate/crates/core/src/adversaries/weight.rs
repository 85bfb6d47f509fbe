//! Bootstrap-and-decay attack on the heaviest-chain rule.
//!
//! In round 1 the adversary bootstraps `j` blocks at its current space and
//! from then on shrinks space as fast as allowed. The honest chain's total
//! weight converges while the bootstrapped chain's weight grows linearly in
//! `j`, so for large enough `j` the honest chain is lighter at round `j`.

use super::{Strategy, StrategyError};
use crate::bounds::ell_weight;
use crate::game::{AdversaryAction, GameParams, GameState, Move};
use crate::model::Chain;
use crate::rules::{cs_weight, Winner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Smallest winning `j` at or above `ceil(phi / epsilon)`.
    Threshold,
    /// Smallest winning `j` overall.
    Min,
}

#[derive(Debug, Clone)]
pub struct WeightAttack {
    params: GameParams,
    horizon: Horizon,
    length: usize,
}

impl WeightAttack {
    pub fn new(params: &GameParams, horizon: Horizon) -> Self {
        let from = match horizon {
            Horizon::Min => 1,
            Horizon::Threshold => ell_weight(params.phi(), params.epsilon())
                .expect("GameParams are validated on construction")
                as usize,
        };
        Self {
            params: *params,
            horizon,
            length: winning_length(params, from),
        }
    }

    /// Game length (and fork length) the attack will play.
    pub fn length(&self) -> usize {
        self.length
    }
}

/// Smallest `j >= from` at which `j` bootstrapped blocks of space `a_1`
/// outweigh the decaying honest chain. Replicates the engine's arithmetic.
fn winning_length(params: &GameParams, from: usize) -> usize {
    let shrink = params.shrink();
    let a1 = params.a0() * shrink;
    let mut a = params.a0();
    let mut honest = vec![1.0];
    let mut j = 0;
    loop {
        j += 1;
        a *= shrink;
        honest.push(params.phi() * a);
        if j < from {
            continue;
        }
        let mut adv = vec![a1; j + 1];
        adv[0] = 1.0;
        let h = Chain::from_profile(&honest, 1).expect("positive spaces");
        let c = Chain::from_profile(&adv, 2).expect("positive spaces");
        if cs_weight(&h, &c).expect("equal lengths") == Winner::Adversary {
            return j;
        }
    }
}

impl Strategy for WeightAttack {
    fn spec(&self) -> String {
        match self.horizon {
            Horizon::Threshold => "weight-attack".into(),
            Horizon::Min => "weight-attack:horizon=min".into(),
        }
    }

    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError> {
        let round = state.round() + 1;
        let gamma = self.params.shrink();
        let mut action = AdversaryAction::idle(gamma);
        if round == 1 {
            action = action.bootstrap(vec![state.next_adv_space(gamma); self.length]);
        }
        if round == self.length {
            action = action.with(Move::Stop);
        } else if round > self.length {
            return Err(StrategyError::Exhausted(round));
        }
        Ok(action)
    }
}
