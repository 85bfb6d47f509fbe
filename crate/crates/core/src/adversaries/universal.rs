//! The universal attack: a pair of profiles that no rule can tell apart in
//! the adversary's disfavour in both directions.
//!
//! Profile `S` rises by `(1 + epsilon)` per block to `(1 + epsilon)^k` at index
//! `k`, falls back to 1 at `2k` and stays flat through `l + 2k`. Profile
//! `S~` is its mirror image: flat for `l` blocks, then the same tent. The
//! adversary drives the honest chain along one profile while building the
//! other: the flat stretch by bootstrapping (possible once its space reaches
//! 1) and the tent by repeated replotting (possible at space `1 / phi`).

use super::builder::SegmentBuilder;
use super::{Strategy, StrategyError};
use crate::bounds::{ceil_guarded, ell_universal};
use crate::game::{AdversaryAction, GameParams, GameState, Move};
use crate::model::{SpaceProfile, REL_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePair {
    pub s: SpaceProfile,
    pub s_tilde: SpaceProfile,
    pub k: usize,
    pub l: usize,
}

impl ProfilePair {
    /// Index of the last block, `l + 2k`.
    pub fn ell(&self) -> usize {
        self.l + 2 * self.k
    }

    /// The `2k` tent blocks above the base, `S[1..=2k]`. `S~` ends with the
    /// same blocks.
    pub fn tent_targets(&self) -> Vec<f64> {
        self.s[1..=2 * self.k].to_vec()
    }
}

pub fn universal_profiles(params: &GameParams) -> ProfilePair {
    let bound = ell_universal(params.phi(), params.epsilon(), params.rho())
        .expect("GameParams are validated on construction");
    let (k, l) = (bound.k as usize, bound.l as usize);
    let ell = l + 2 * k;
    let g = params.growth();
    let s: Vec<f64> = (0..=ell)
        .map(|i| {
            if i <= k {
                g.powi(i as i32)
            } else if i <= 2 * k {
                g.powi((2 * k - i) as i32)
            } else {
                1.0
            }
        })
        .collect();
    let s_tilde: Vec<f64> = (0..=ell).map(|i| s[ell - i]).collect();
    ProfilePair {
        s: SpaceProfile::new(s).expect("positive by construction"),
        s_tilde: SpaceProfile::new(s_tilde).expect("positive by construction"),
        k,
        l,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplotSchedule {
    /// Replots needed per target block.
    pub per_block: Vec<u64>,
    /// Rounds consumed in total (`rho` per replot).
    pub rounds: u64,
}

/// Rounds needed to build blocks of the given sizes when every bootstrap and
/// replot adds `1 / phi`: a block of size `alpha` takes `ceil(alpha * phi - 1)`
/// replots of `rho` rounds each.
pub fn replot_schedule(
    targets: &[f64],
    phi: f64,
    rho: u32,
) -> Result<ReplotSchedule, StrategyError> {
    let increment = 1.0 / phi;
    let mut per_block = Vec::with_capacity(targets.len());
    for &target in targets {
        let units = target * phi;
        if units < 1.0 - REL_TOL {
            return Err(StrategyError::TargetTooSmall { target, increment });
        }
        per_block.push(ceil_guarded(units / (1.0 + REL_TOL) - 1.0));
    }
    let rounds = per_block.iter().sum::<u64>() * u64::from(rho);
    Ok(ReplotSchedule { per_block, rounds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Honest chain follows `S~`, the adversary builds `S`.
    FakeS,
    /// Honest chain follows `S`, the adversary builds `S~`.
    FakeSTilde,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::FakeS => "s",
            Direction::FakeSTilde => "stilde",
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniversalAttack {
    params: GameParams,
    direction: Direction,
    k: usize,
    l: usize,
    tent: SegmentBuilder,
}

impl UniversalAttack {
    pub fn new(params: &GameParams, direction: Direction) -> Result<Self, StrategyError> {
        let pair = universal_profiles(params);
        let targets = pair.tent_targets();
        let schedule = replot_schedule(&targets, params.phi(), params.rho())?;
        // The tent is built in rounds 2k+1..=l+2k (S~) or 1..l+k (S), and the
        // last lock must expire before the stop or the flat bootstrap.
        let available = match direction {
            Direction::FakeSTilde => pair.l as u64,
            Direction::FakeS => (pair.l + pair.k - 1) as u64,
        };
        if schedule.rounds > available {
            return Err(StrategyError::ReplotBudget {
                needed: schedule.rounds,
                available,
            });
        }
        Ok(Self {
            params: *params,
            direction,
            k: pair.k,
            l: pair.l,
            tent: SegmentBuilder::new(targets),
        })
    }

    pub fn ell(&self) -> usize {
        self.l + 2 * self.k
    }

    fn gamma(&self, round: usize) -> f64 {
        let (k, l, p) = (self.k, self.l, &self.params);
        let rise_start = match self.direction {
            Direction::FakeSTilde => 0,
            Direction::FakeS => l,
        };
        if round <= rise_start {
            1.0
        } else if round <= rise_start + k {
            p.growth()
        } else if round <= rise_start + 2 * k {
            p.shrink()
        } else {
            1.0
        }
    }

    fn build_tent(&mut self, state: &GameState, gamma: f64) -> Vec<Move> {
        if state.next_round_free() {
            self.tent.plan(state.next_adv_space(gamma))
        } else {
            Vec::new()
        }
    }
}

impl Strategy for UniversalAttack {
    fn spec(&self) -> String {
        format!("universal:direction={}", self.direction.as_str())
    }

    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError> {
        let round = state.round() + 1;
        let gamma = self.gamma(round);
        let (k, l, ell) = (self.k, self.l, self.ell());
        let mut moves = match self.direction {
            Direction::FakeSTilde if round == k => vec![Move::Bootstrap(vec![1.0; l])],
            Direction::FakeSTilde if round > 2 * k => self.build_tent(state, gamma),
            Direction::FakeS if round < l + k => self.build_tent(state, gamma),
            Direction::FakeS if round == l + k => {
                if !self.tent.is_done() || !state.next_round_free() {
                    return Err(StrategyError::OutOfSync(
                        "tent unfinished before the flat bootstrap".into(),
                    ));
                }
                vec![Move::Bootstrap(vec![1.0; l])]
            }
            _ => Vec::new(),
        };
        if round == ell {
            if !self.tent.is_done() {
                return Err(StrategyError::OutOfSync(
                    "tent unfinished at the final round".into(),
                ));
            }
            moves.push(Move::Stop);
        } else if round > ell {
            return Err(StrategyError::Exhausted(round));
        }
        Ok(AdversaryAction { gamma, moves })
    }
}
