//! Chains, space profiles, fork points and tent fitting.
//!
//! A block is reduced to the amount of space that produced it plus an opaque
//! payload id; two blocks are the same block iff both fields agree. Chains are
//! always rooted in the shared genesis block of space 1.

use std::fmt;
use std::ops::Deref;

use thiserror::Error;

/// Relative tolerance used for every space constraint and every tie test.
pub const REL_TOL: f64 = 1e-9;

/// Payload id of the shared genesis block.
pub const GENESIS_ID: u64 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("empty profile")]
    EmptyProfile,
    #[error("non-positive space {value} at index {index}")]
    NonPositiveSpace { index: usize, value: f64 },
    #[error("length mismatch: {left} vs {right} blocks")]
    LengthMismatch { left: usize, right: usize },
    #[error("no common genesis")]
    NoCommonGenesis,
    #[error("genesis block must have space 1, got {0}")]
    BadGenesis(f64),
    #[error("index range [{from}, {to}] out of bounds for a chain of {len} blocks")]
    RangeOutOfBounds { from: usize, to: usize, len: usize },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("tent decay must be finite and greater than 1, got {0}")]
    InvalidDecay(f64),
}

/// `a` and `b` agree up to [`REL_TOL`] relative to the larger magnitude.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

/// `value <= limit`, allowing [`REL_TOL`] relative slack on the limit.
pub fn within_limit(value: f64, limit: f64) -> bool {
    value <= limit + REL_TOL * limit.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub space: f64,
    pub payload_id: u64,
}

impl Block {
    pub fn new(space: f64, payload_id: u64) -> Result<Self, ModelError> {
        if !(space > 0.0 && space.is_finite()) {
            return Err(ModelError::NonPositiveSpace {
                index: 0,
                value: space,
            });
        }
        Ok(Self { space, payload_id })
    }

    pub fn genesis() -> Self {
        Self {
            space: 1.0,
            payload_id: GENESIS_ID,
        }
    }
}

/// A genesis-rooted chain; block `i` sits at position `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    /// Chain holding only the genesis block.
    pub fn genesis() -> Self {
        Self {
            blocks: vec![Block::genesis()],
        }
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, ModelError> {
        let first = blocks.first().ok_or(ModelError::EmptyProfile)?;
        if first.space != 1.0 {
            return Err(ModelError::BadGenesis(first.space));
        }
        if let Some((index, b)) = blocks
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.space > 0.0 && b.space.is_finite()))
        {
            return Err(ModelError::NonPositiveSpace {
                index,
                value: b.space,
            });
        }
        Ok(Self { blocks })
    }

    /// Builds a chain whose space profile is `profile` (which must start at 1).
    ///
    /// Non-genesis blocks get payload ids `lineage << 32 | index`, so two chains
    /// built from different lineages share nothing but the genesis block.
    pub fn from_profile(profile: &[f64], lineage: u32) -> Result<Self, ModelError> {
        let blocks = profile
            .iter()
            .enumerate()
            .map(|(i, &space)| {
                let payload_id = if i == 0 {
                    GENESIS_ID
                } else {
                    (u64::from(lineage) << 32) | i as u64
                };
                Block { space, payload_id }
            })
            .collect();
        Self::from_blocks(blocks)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Always false: a chain holds at least its genesis block.
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the tip block (the chain "length" j in `C_0^j`).
    pub fn tip_index(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn last(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn profile(&self) -> SpaceProfile {
        SpaceProfile(self.blocks.iter().map(|b| b.space).collect())
    }

    pub fn spaces(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().map(|b| b.space)
    }

    /// The first `len` blocks.
    pub fn prefix(&self, len: usize) -> Chain {
        Chain {
            blocks: self.blocks[..len.min(self.blocks.len())].to_vec(),
        }
    }

    pub(crate) fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    pub(crate) fn replace_last(&mut self, block: Block) {
        let last = self.blocks.len() - 1;
        self.blocks[last] = block;
    }
}

/// Per-index space values of a chain (or of an honest/adversarial space sequence).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceProfile(Vec<f64>);

impl SpaceProfile {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyProfile);
        }
        check_positive(&values)?;
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SpaceProfile {
        SpaceProfile(self.0.iter().map(|v| v * factor).collect())
    }
}

impl Deref for SpaceProfile {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_positive(values: &[f64]) -> Result<(), ModelError> {
    match values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        Some((index, &value)) => Err(ModelError::NonPositiveSpace { index, value }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileCheck {
    Valid,
    /// `values[index] -> values[index + 1]` changes by more than a factor `1 + epsilon`.
    Violation {
        index: usize,
    },
}

impl ProfileCheck {
    pub fn is_valid(self) -> bool {
        self == ProfileCheck::Valid
    }
}

/// Checks that consecutive values never change by more than a factor `1 + epsilon`.
pub fn validate_profile(values: &[f64], epsilon: f64) -> Result<ProfileCheck, ModelError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ModelError::InvalidEpsilon(epsilon));
    }
    if values.is_empty() {
        return Err(ModelError::EmptyProfile);
    }
    check_positive(values)?;
    let growth = 1.0 + epsilon;
    for (i, pair) in values.windows(2).enumerate() {
        let (cur, next) = (pair[0], pair[1]);
        let tol = REL_TOL * cur;
        if next < cur / growth - tol || next > cur * growth + tol {
            return Ok(ProfileCheck::Violation { index: i });
        }
    }
    Ok(ProfileCheck::Valid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkPoint {
    Identical,
    /// Index of the first block that differs.
    At(usize),
}

/// Smallest index at which the two chains hold different blocks.
pub fn fork_point(a: &Chain, b: &Chain) -> Result<ForkPoint, ModelError> {
    if a.len() != b.len() {
        return Err(ModelError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.blocks[0] != b.blocks[0] {
        return Err(ModelError::NoCommonGenesis);
    }
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .position(|(x, y)| x != y)
        .map_or(ForkPoint::Identical, ForkPoint::At))
}

/// Sum of block spaces over the inclusive index range `[from, to]`.
pub fn chain_weight(chain: &Chain, from: usize, to: usize) -> Result<f64, ModelError> {
    if from > to || to >= chain.len() {
        return Err(ModelError::RangeOutOfBounds {
            from,
            to,
            len: chain.len(),
        });
    }
    Ok(chain.blocks[from..=to].iter().map(|b| b.space).sum())
}

/// Two chains of equal length seen from their fork point on.
#[derive(Debug, Clone, PartialEq)]
pub struct ForkView {
    pub fork_index: usize,
    pub honest_suffix: SpaceProfile,
    pub adversarial_suffix: SpaceProfile,
}

impl ForkView {
    /// `None` when the chains are identical.
    pub fn new(honest: &Chain, adversarial: &Chain) -> Result<Option<Self>, ModelError> {
        Ok(match fork_point(honest, adversarial)? {
            ForkPoint::Identical => None,
            ForkPoint::At(fork_index) => Some(Self {
                fork_index,
                honest_suffix: SpaceProfile(honest.spaces().skip(fork_index).collect()),
                adversarial_suffix: SpaceProfile(adversarial.spaces().skip(fork_index).collect()),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.honest_suffix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.honest_suffix.is_empty()
    }
}

/// Geometric tent: value `size` at `apex`, divided by `decay` per step away from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tent {
    pub decay: f64,
    pub apex: usize,
    pub size: f64,
}

impl Tent {
    pub fn value_at(&self, index: usize) -> f64 {
        let dist = index.abs_diff(self.apex);
        self.size / self.decay.powi(dist as i32)
    }

    /// Tents are ordered by size alone.
    pub fn is_larger_than(&self, other: &Tent) -> bool {
        self.size > other.size
    }

    /// Whether the tent stays at or below `values` on the profile's index range.
    pub fn fits_under(&self, values: &[f64]) -> bool {
        values
            .iter()
            .enumerate()
            .all(|(i, &v)| within_limit(self.value_at(i), v))
    }
}

impl fmt::Display for Tent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tent(decay={}, apex={}, size={})",
            self.decay, self.apex, self.size
        )
    }
}

/// Largest tent with decay `decay` that fits under `values`.
///
/// Only indices of the profile itself constrain the tent. The size for apex `x`
/// is `min_i values[i] * decay^|i-x|`; it is the minimum of a left sweep and a
/// right sweep, so the whole fit is linear in the profile length. Among apexes
/// whose size ties the maximum (within [`REL_TOL`]) the smallest index wins.
pub fn tent_fit(values: &[f64], decay: f64) -> Result<Tent, ModelError> {
    if !(decay > 1.0 && decay.is_finite()) {
        return Err(ModelError::InvalidDecay(decay));
    }
    if values.is_empty() {
        return Err(ModelError::EmptyProfile);
    }
    check_positive(values)?;

    let n = values.len();
    let mut from_right = vec![0.0; n];
    from_right[n - 1] = values[n - 1];
    for i in (0..n - 1).rev() {
        from_right[i] = values[i].min(from_right[i + 1] * decay);
    }

    let mut sizes = Vec::with_capacity(n);
    let mut from_left = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        from_left = v.min(from_left * decay);
        sizes.push(from_left.min(from_right[i]));
    }

    let best = sizes.iter().copied().fold(f64::MIN, f64::max);
    let apex = sizes
        .iter()
        .position(|&s| s >= best || approx_eq(s, best))
        .expect("non-empty");
    Ok(Tent {
        decay,
        apex,
        size: sizes[apex],
    })
}
