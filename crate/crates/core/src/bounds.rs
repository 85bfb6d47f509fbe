//! Closed-form fork-length bounds.

use crate::game::{check_epsilon, check_phi, GameParams, ParamError};

/// Relative slack subtracted before rounding up, so values that are integers
/// up to float noise do not round to the next integer.
pub const CEIL_GUARD: f64 = 1e-12;

pub fn ceil_guarded(x: f64) -> u64 {
    let v = (x - CEIL_GUARD * x.abs().max(1.0)).ceil();
    if v <= 0.0 {
        0
    } else {
        v as u64
    }
}

fn check(phi: f64, epsilon: f64) -> Result<(), ParamError> {
    check_phi(phi)?;
    check_epsilon(epsilon)
}

fn check_rho(rho: u32) -> Result<(), ParamError> {
    if rho < 2 {
        Err(ParamError::Rho(rho))
    } else {
        Ok(())
    }
}

/// Number of `(1 + epsilon)` growth steps needed to multiply space by `phi`.
pub fn k_steps(phi: f64, epsilon: f64) -> Result<u64, ParamError> {
    check(phi, epsilon)?;
    Ok(ceil_guarded(phi.ln() / epsilon.ln_1p()))
}

/// Fork length at which bootstrapping plus decay beats the heaviest-chain rule.
pub fn ell_weight(phi: f64, epsilon: f64) -> Result<u64, ParamError> {
    check(phi, epsilon)?;
    Ok(ceil_guarded(phi / epsilon))
}

/// Fork length of the replotting attack on the `k`-block genesis rule.
pub fn ell_genesis(phi: f64, k: u64, rho: u32) -> Result<u64, ParamError> {
    check_phi(phi)?;
    check_rho(rho)?;
    Ok(ceil_guarded(phi) * k * u64::from(rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniversalBound {
    /// Tent half-width.
    pub k: u64,
    /// Flat stretch length.
    pub l: u64,
    /// Total fork length `l + 2k`.
    pub ell: u64,
}

/// Fork length within which the two universal profiles beat any rule.
pub fn ell_universal(phi: f64, epsilon: f64, rho: u32) -> Result<UniversalBound, ParamError> {
    check(phi, epsilon)?;
    check_rho(rho)?;
    let k = k_steps(phi, epsilon)?;
    let g = 1.0 + epsilon;
    let base = f64::from(rho) * phi * phi * (g - 1.0 / phi) / epsilon;
    let l = ceil_guarded(base * g) + ceil_guarded(base);
    Ok(UniversalBound {
        k,
        l,
        ell: l + 2 * k,
    })
}

/// Fork length below which no adversary beats the tent rule. May be negative.
pub fn ell_tent_lower(phi: f64, epsilon: f64, rho: u32) -> Result<f64, ParamError> {
    check(phi, epsilon)?;
    check_rho(rho)?;
    let k = k_steps(phi, epsilon)? as f64;
    Ok(f64::from(rho) * (phi * (1.0 + epsilon) * (1.0 - 1.0 / phi) / epsilon - k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub params: GameParams,
    pub genesis_k: u64,
    pub k_steps: u64,
    pub ell_weight: u64,
    pub ell_genesis: u64,
    pub ell_universal: UniversalBound,
    pub ell_tent_lower: f64,
    pub simulated_ell: Option<usize>,
}

impl BoundReport {
    pub fn new(params: &GameParams, genesis_k: u64) -> Self {
        let (phi, eps, rho) = (params.phi(), params.epsilon(), params.rho());
        let valid = "GameParams are validated on construction";
        Self {
            params: *params,
            genesis_k,
            k_steps: k_steps(phi, eps).expect(valid),
            ell_weight: ell_weight(phi, eps).expect(valid),
            ell_genesis: ell_genesis(phi, genesis_k, rho).expect(valid),
            ell_universal: ell_universal(phi, eps, rho).expect(valid),
            ell_tent_lower: ell_tent_lower(phi, eps, rho).expect(valid),
            simulated_ell: None,
        }
    }

    pub fn tent_lower_clamped(&self) -> f64 {
        self.ell_tent_lower.max(0.0)
    }

    pub fn tent_lower_negative(&self) -> bool {
        self.ell_tent_lower < 0.0
    }
}
