//! Replotting attack on the `k`-block genesis rule.
//!
//! With constant space the adversary replots each of its first `k` blocks up
//! to `ceil(phi) / phi >= 1`, then bootstraps the rest of the chain at its
//! base space and stops after `ceil(phi) * k * rho` rounds. Its window right
//! after the fork weighs at least as much as the honest window of `k` ones.

use super::builder::SegmentBuilder;
use super::{Strategy, StrategyError};
use crate::bounds::{ceil_guarded, ell_genesis};
use crate::game::{AdversaryAction, GameParams, GameState, Move};

#[derive(Debug, Clone)]
pub struct GenesisAttack {
    k: u64,
    length: usize,
    blocks: SegmentBuilder,
}

impl GenesisAttack {
    pub fn new(params: &GameParams, k: u64) -> Result<Self, StrategyError> {
        if k == 0 {
            return Err(StrategyError::Spec(crate::registry::SpecError::Invalid {
                name: "genesis-attack".into(),
                reason: "k must be at least 1".into(),
            }));
        }
        let length = ell_genesis(params.phi(), k, params.rho())
            .expect("GameParams are validated on construction");
        let target = ceil_guarded(params.phi()) as f64 * params.a0();
        Ok(Self {
            k,
            length: length as usize,
            blocks: SegmentBuilder::new(vec![target; k as usize]),
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }
}

impl Strategy for GenesisAttack {
    fn spec(&self) -> String {
        format!("genesis-attack:k={}", self.k)
    }

    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError> {
        let round = state.round() + 1;
        let action = AdversaryAction::idle(1.0);
        if round < self.length {
            return Ok(if state.next_round_free() {
                AdversaryAction {
                    gamma: 1.0,
                    moves: self.blocks.plan(state.next_adv_space(1.0)),
                }
            } else {
                action
            });
        }
        if round > self.length {
            return Err(StrategyError::Exhausted(round));
        }
        if !self.blocks.is_done() || !state.next_round_free() {
            return Err(StrategyError::OutOfSync(
                "window blocks unfinished at the final round".into(),
            ));
        }
        let tail = self.length - state.adv_chain().tip_index();
        Ok(action
            .bootstrap(vec![state.next_adv_space(1.0); tail])
            .with(Move::Stop))
    }
}
