//! Exhaustive search over a coarse action grid.
//!
//! Each round the adversary picks `gamma` from `{1/(1+eps), 1, 1+eps}` and,
//! when not locked, one of: nothing; bootstrap one block; bootstrap blocks up
//! to the search horizon; replot; bootstrap one block and replot it. Block
//! sizes and replot increments are `a_i` or `a_i / 2`. A stop is attempted only
//! at the horizon, so deepening the horizon one round at a time finds the
//! shortest win first.
//!
//! The search is a falsifier: finding nothing says nothing about moves off
//! the grid.
//!
//! Branches that cannot end in a legal stop at the horizon are cut: replots
//! whose lock outlasts the horizon, and states whose chain is short with no
//! free round left to extend it. What remains depends only on the round, the
//! lock and the chain length, which lets the tree size be counted exactly
//! before searching it.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{Scripted, Strategy, StrategyError};
use crate::game::{run_game, AdversaryAction, GameParams, GameState, Move, Transcript};
use crate::model::Chain;
use crate::rules::{ChainRule, Winner};

/// Largest number of tree nodes a search may visit.
pub const NODE_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Size {
    Full,
    Half,
}

impl Size {
    const ALL: [Size; 2] = [Size::Full, Size::Half];

    fn of(self, a: f64) -> f64 {
        match self {
            Size::Full => a,
            Size::Half => a * 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Idle,
    BootOne(Size),
    BootFill(Size),
    Replot(Size),
    BootReplot(Size),
}

/// Structural position after a round: what the move grid depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Shape {
    round: usize,
    lock: u32,
    tip: usize,
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    horizon: usize,
    rho: u32,
}

impl Grid {
    /// Legal, non-dead choices for the round after `at`, with the shape they lead to.
    fn choices(&self, at: Shape) -> Vec<(Choice, Shape)> {
        let round = at.round + 1;
        let d = self.horizon;
        let mut out = Vec::new();
        if at.lock > 0 {
            out.push((
                Choice::Idle,
                Shape {
                    round,
                    lock: at.lock - 1,
                    tip: at.tip,
                },
            ));
        } else {
            let replot_fits = round + self.rho as usize - 1 <= d;
            let locked = self.rho - 1;
            out.push((
                Choice::Idle,
                Shape {
                    round,
                    lock: 0,
                    tip: at.tip,
                },
            ));
            if at.tip < d {
                for s in Size::ALL {
                    out.push((
                        Choice::BootOne(s),
                        Shape {
                            round,
                            lock: 0,
                            tip: at.tip + 1,
                        },
                    ));
                }
            }
            if at.tip + 2 <= d {
                for s in Size::ALL {
                    out.push((
                        Choice::BootFill(s),
                        Shape {
                            round,
                            lock: 0,
                            tip: d,
                        },
                    ));
                }
            }
            if at.tip >= 1 && replot_fits {
                for s in Size::ALL {
                    out.push((
                        Choice::Replot(s),
                        Shape {
                            round,
                            lock: locked,
                            tip: at.tip,
                        },
                    ));
                }
            }
            if at.tip < d && replot_fits {
                for s in Size::ALL {
                    out.push((
                        Choice::BootReplot(s),
                        Shape {
                            round,
                            lock: locked,
                            tip: at.tip + 1,
                        },
                    ));
                }
            }
        }
        out.retain(|(_, next)| self.alive(*next));
        out
    }

    /// A legal stop at the horizon is still reachable from `s`.
    fn alive(&self, s: Shape) -> bool {
        let d = self.horizon;
        if s.round == d {
            return s.lock == 0 && s.tip >= d;
        }
        s.tip >= d || s.round + (s.lock as usize) < d
    }

    /// Nodes below `at`, counting one node per (gamma, choice) edge.
    fn count(&self, at: Shape, memo: &mut HashMap<Shape, u64>) -> u64 {
        if at.round == self.horizon {
            return 0;
        }
        if let Some(&n) = memo.get(&at) {
            return n;
        }
        let mut total: u64 = 0;
        for (_, next) in self.choices(at) {
            let below = self.count(next, memo);
            total = total.saturating_add(3u64.saturating_mul(below.saturating_add(1)));
        }
        memo.insert(at, total);
        total
    }
}

const ROOT: Shape = Shape {
    round: 0,
    lock: 0,
    tip: 0,
};

/// Number of nodes in the search tree with the given horizon.
pub fn tree_size(params: &GameParams, horizon: usize) -> u64 {
    if horizon == 0 {
        return 0;
    }
    Grid {
        horizon,
        rho: params.rho(),
    }
    .count(ROOT, &mut HashMap::new())
}

struct Walker<'a> {
    params: GameParams,
    rule: &'a dyn ChainRule,
    grid: Grid,
    gammas: [f64; 3],
    a: f64,
    honest: Vec<f64>,
    adv: Vec<f64>,
    path: Vec<AdversaryAction>,
}

impl<'a> Walker<'a> {
    fn new(params: &GameParams, rule: &'a dyn ChainRule, grid: Grid) -> Self {
        Self {
            params: *params,
            rule,
            grid,
            gammas: [params.shrink(), 1.0, params.growth()],
            a: params.a0(),
            honest: vec![1.0],
            adv: vec![1.0],
            path: Vec::new(),
        }
    }

    /// Plays one edge, explores below it and undoes it.
    fn visit(
        &mut self,
        at: Shape,
        gamma: f64,
        choice: Choice,
        next: Shape,
    ) -> Option<Vec<AdversaryAction>> {
        let prev_a = self.a;
        let prev_len = self.adv.len();
        let prev_last = *self.adv.last().expect("genesis");
        let a = prev_a * gamma;
        self.a = a;
        self.honest.push(self.params.phi() * a);

        let mut moves = Vec::new();
        match choice {
            Choice::Idle => {}
            Choice::BootOne(s) => moves.push(Move::Bootstrap(vec![s.of(a)])),
            Choice::BootFill(s) => {
                moves.push(Move::Bootstrap(vec![s.of(a); self.grid.horizon - at.tip]))
            }
            Choice::Replot(s) => moves.push(Move::Replot(s.of(a))),
            Choice::BootReplot(s) => {
                moves.push(Move::Bootstrap(vec![s.of(a)]));
                moves.push(Move::Replot(s.of(a)));
            }
        }
        for m in &moves {
            match m {
                Move::Bootstrap(sizes) => self.adv.extend_from_slice(sizes),
                Move::Replot(add) => *self.adv.last_mut().expect("non-empty") += add,
                Move::Stop => {}
            }
        }
        self.path.push(AdversaryAction { gamma, moves });

        let found = if next.round == self.grid.horizon {
            self.wins().then(|| {
                let mut actions = self.path.clone();
                actions
                    .last_mut()
                    .expect("non-empty")
                    .moves
                    .push(Move::Stop);
                actions
            })
        } else {
            self.expand(next)
        };

        self.path.pop();
        self.adv.truncate(prev_len);
        *self.adv.last_mut().expect("genesis") = prev_last;
        self.honest.pop();
        self.a = prev_a;
        found
    }

    fn expand(&mut self, at: Shape) -> Option<Vec<AdversaryAction>> {
        for gi in 0..3 {
            let gamma = self.gammas[gi];
            for (choice, next) in self.grid.choices(at) {
                if let Some(found) = self.visit(at, gamma, choice, next) {
                    return Some(found);
                }
            }
        }
        None
    }

    fn wins(&self) -> bool {
        let n = self.honest.len();
        let honest = Chain::from_profile(&self.honest, 1).expect("positive spaces");
        let adv = Chain::from_profile(&self.adv[..n], 2).expect("positive spaces");
        matches!(self.rule.select(&honest, &adv), Ok(Winner::Adversary))
    }
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    /// Shortest winning action list found, ending with a stop.
    pub actions: Option<Vec<AdversaryAction>>,
    /// Nodes in all trees searched.
    pub nodes: u64,
}

/// Searches horizons `1..=max_fork` in order and returns the first win.
///
/// Fails before searching a horizon whose tree would push the total node
/// count past `node_limit`.
pub fn search_actions(
    params: &GameParams,
    rule: &dyn ChainRule,
    max_fork: usize,
    node_limit: u64,
) -> Result<SearchReport, StrategyError> {
    let mut nodes: u64 = 0;
    for horizon in 1..=max_fork {
        nodes = nodes.saturating_add(tree_size(params, horizon));
        if nodes > node_limit {
            return Err(StrategyError::SearchBudget {
                nodes,
                limit: node_limit,
            });
        }
        let grid = Grid {
            horizon,
            rho: params.rho(),
        };
        let gammas = [params.shrink(), 1.0, params.growth()];
        let roots: Vec<(f64, Choice, Shape)> = gammas
            .iter()
            .flat_map(|&g| grid.choices(ROOT).into_iter().map(move |(c, s)| (g, c, s)))
            .collect();
        let found = roots.par_iter().find_map_first(|&(gamma, choice, next)| {
            Walker::new(params, rule, grid).visit(ROOT, gamma, choice, next)
        });
        if found.is_some() {
            return Ok(SearchReport {
                actions: found,
                nodes,
            });
        }
    }
    Ok(SearchReport {
        actions: None,
        nodes,
    })
}

/// Shortest winning game on the grid with fork length at most `max_fork`,
/// replayed through the engine.
pub fn grid_search(
    params: &GameParams,
    rule: &dyn ChainRule,
    max_fork: usize,
) -> Result<Option<Transcript>, StrategyError> {
    let report = search_actions(params, rule, max_fork, NODE_LIMIT)?;
    report
        .actions
        .map(|actions| {
            let mut script = Scripted::new(format!("grid-search:max_fork={max_fork}"), actions);
            run_game(params, &mut script, rule).map_err(|e| StrategyError::OutOfSync(e.to_string()))
        })
        .transpose()
}

/// Strategy that plays the shortest win found by [`search_actions`].
#[derive(Debug, Clone)]
pub struct GridSearch {
    max_fork: usize,
    script: Scripted,
}

impl GridSearch {
    pub fn new(
        params: &GameParams,
        rule: &dyn ChainRule,
        max_fork: usize,
    ) -> Result<Self, StrategyError> {
        let report = search_actions(params, rule, max_fork, NODE_LIMIT)?;
        let actions = report
            .actions
            .ok_or(StrategyError::NoneFound { max_fork })?;
        Ok(Self {
            max_fork,
            script: Scripted::new("", actions),
        })
    }
}

impl Strategy for GridSearch {
    fn spec(&self) -> String {
        format!("grid-search:max_fork={}", self.max_fork)
    }

    fn next_action(&mut self, state: &GameState) -> Result<AdversaryAction, StrategyError> {
        self.script.next_action(state)
    }
}
