//! Chain selection rules.
//!
//! Every rule compares an honest chain against an adversarial chain of the same
//! length and names a winner. Sums and tent sizes that agree within
//! [`REL_TOL`](crate::model::REL_TOL) count as ties; the tie policy of each
//! rule is documented on its comparison function.

use std::fmt;
use std::str::FromStr;

use crate::game::GameParams;
use crate::model::{approx_eq, chain_weight, fork_point, tent_fit, Chain, ForkPoint, ModelError};
use crate::registry::{ComponentSpec, Registration, Registry, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Honest,
    Adversary,
}

impl Winner {
    /// 0 for the honest chain, 1 for the adversarial chain.
    pub fn bit(self) -> u8 {
        match self {
            Winner::Honest => 0,
            Winner::Adversary => 1,
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

pub trait ChainRule: Send + Sync + fmt::Debug {
    /// Canonical spec string, e.g. `genesis:k=3`.
    fn spec(&self) -> String;

    fn select(&self, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError>;
}

/// Applies `rule` to the two chains.
pub fn select(
    rule: &dyn ChainRule,
    honest: &Chain,
    adversarial: &Chain,
) -> Result<Winner, ModelError> {
    rule.select(honest, adversarial)
}

/// Honest wins only on a strict (beyond tolerance) advantage.
fn strict_honest(honest: f64, adversarial: f64) -> Winner {
    if honest > adversarial && !approx_eq(honest, adversarial) {
        Winner::Honest
    } else {
        Winner::Adversary
    }
}

/// Heaviest chain: honest wins iff its total weight is strictly larger.
pub fn cs_weight(honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
    fork_point(honest, adversarial)?;
    let last = honest.tip_index();
    Ok(strict_honest(
        chain_weight(honest, 0, last)?,
        chain_weight(adversarial, 0, last)?,
    ))
}

/// Genesis-style rule: compares the `k` blocks starting at the first
/// differing block. Ties go to the adversary; identical chains keep the
/// honest chain.
pub fn cs_genesis(k: usize, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
    let fork = match fork_point(honest, adversarial)? {
        ForkPoint::Identical => return Ok(Winner::Honest),
        ForkPoint::At(i) => i,
    };
    let end = honest.tip_index().min(fork + k.max(1) - 1);
    Ok(strict_honest(
        chain_weight(honest, fork, end)?,
        chain_weight(adversarial, fork, end)?,
    ))
}

/// Tent rule: the fork suffix that holds the larger `delta`-tent wins.
/// Equal tents keep the honest chain.
pub fn cs_tent(delta: f64, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
    let fork = match fork_point(honest, adversarial)? {
        ForkPoint::Identical => return Ok(Winner::Honest),
        ForkPoint::At(i) => i,
    };
    let honest_suffix: Vec<f64> = honest.spaces().skip(fork).collect();
    let adversarial_suffix: Vec<f64> = adversarial.spaces().skip(fork).collect();
    let mu = tent_fit(&honest_suffix, delta)?.size;
    let mu_adv = tent_fit(&adversarial_suffix, delta)?.size;
    Ok(if mu >= mu_adv || approx_eq(mu, mu_adv) {
        Winner::Honest
    } else {
        Winner::Adversary
    })
}

#[derive(Debug, Clone, Copy)]
pub struct WeightRule;

impl ChainRule for WeightRule {
    fn spec(&self) -> String {
        "weight".into()
    }

    fn select(&self, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
        cs_weight(honest, adversarial)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenesisRule {
    pub k: usize,
}

impl ChainRule for GenesisRule {
    fn spec(&self) -> String {
        format!("genesis:k={}", self.k)
    }

    fn select(&self, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
        cs_genesis(self.k, honest, adversarial)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TentRule {
    pub delta: f64,
}

impl ChainRule for TentRule {
    fn spec(&self) -> String {
        format!("tent:delta={}", self.delta)
    }

    fn select(&self, honest: &Chain, adversarial: &Chain) -> Result<Winner, ModelError> {
        cs_tent(self.delta, honest, adversarial)
    }
}

pub type RuleFactory = fn(&ComponentSpec, &GameParams) -> Result<Box<dyn ChainRule>, SpecError>;

fn check_weight(spec: &ComponentSpec) -> Result<(), SpecError> {
    spec.expect_keys(&[])
}

fn build_weight(spec: &ComponentSpec, _: &GameParams) -> Result<Box<dyn ChainRule>, SpecError> {
    check_weight(spec)?;
    Ok(Box::new(WeightRule))
}

fn genesis_window(spec: &ComponentSpec) -> Result<usize, SpecError> {
    spec.expect_keys(&["k"])?;
    let k: usize = spec.require("k")?;
    if k == 0 {
        return Err(spec.invalid("k must be at least 1"));
    }
    Ok(k)
}

fn build_genesis(spec: &ComponentSpec, _: &GameParams) -> Result<Box<dyn ChainRule>, SpecError> {
    Ok(Box::new(GenesisRule {
        k: genesis_window(spec)?,
    }))
}

fn tent_decay(spec: &ComponentSpec) -> Result<Option<f64>, SpecError> {
    spec.expect_keys(&["delta"])?;
    let delta: Option<f64> = spec.parse_opt("delta")?;
    match delta {
        Some(d) if !(d > 1.0 && d.is_finite()) => Err(spec.invalid("delta must be greater than 1")),
        _ => Ok(delta),
    }
}

fn build_tent(spec: &ComponentSpec, params: &GameParams) -> Result<Box<dyn ChainRule>, SpecError> {
    let delta = tent_decay(spec)?.unwrap_or(1.0 + params.epsilon());
    Ok(Box::new(TentRule { delta }))
}

pub static RULES: Registry<RuleFactory> = Registry::new(
    "rule",
    &[
        Registration {
            name: "weight",
            usage: "weight",
            check: check_weight,
            build: build_weight,
        },
        Registration {
            name: "genesis",
            usage: "genesis:k=<int>",
            check: |s| genesis_window(s).map(drop),
            build: build_genesis,
        },
        Registration {
            name: "tent",
            usage: "tent[:delta=<real>]",
            check: |s| tent_decay(s).map(drop),
            build: build_tent,
        },
    ],
);

/// A validated rule spec string. `tent` without `delta` decays by `1 + epsilon`
/// of the game it is built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec(ComponentSpec);

impl RuleSpec {
    pub fn weight() -> Self {
        Self(ComponentSpec::new("weight"))
    }

    pub fn genesis(k: usize) -> Self {
        Self(ComponentSpec::new("genesis").with_option("k", k))
    }

    pub fn tent(delta: Option<f64>) -> Self {
        let spec = ComponentSpec::new("tent");
        Self(match delta {
            Some(d) => spec.with_option("delta", d),
            None => spec,
        })
    }

    pub fn component(&self) -> &ComponentSpec {
        &self.0
    }

    pub fn build(&self, params: &GameParams) -> Result<Box<dyn ChainRule>, SpecError> {
        (RULES.lookup(self.0.name())?.build)(&self.0, params)
    }
}

impl FromStr for RuleSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        RULES.parse(s).map(Self)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
