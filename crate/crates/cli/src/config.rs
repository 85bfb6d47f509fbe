//! Experiment configuration: a JSON file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use forklab_core::{GameParams, RuleSpec, StrategySpec};

use crate::CliError;

/// Env var that overrides the configured output directory.
pub const OUT_ENV: &str = "FORKLAB_OUT";

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phi: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub rho: Option<Vec<u32>>,
    pub a0: Option<f64>,
    pub rules: Option<Vec<String>>,
    pub strategies: Option<Vec<String>>,
    pub out_dir: Option<PathBuf>,
    pub genesis_k: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Reference point used when neither flags nor config name one.
pub const DEFAULT_POINT: (f64, f64, u32) = (2.0, 0.01, 4);

/// Grid used by `sweep` and `bounds` when nothing is configured.
pub const DEFAULT_PHIS: [f64; 4] = [1.1, 1.5, 2.0, 3.0];
pub const DEFAULT_EPSILONS: [f64; 3] = [0.5, 0.1, 0.01];
pub const DEFAULT_RHOS: [u32; 3] = [2, 4, 8];

pub const DEFAULT_RULES: [&str; 3] = ["weight", "genesis:k=1", "tent"];
pub const DEFAULT_STRATEGIES: [&str; 2] = ["universal:direction=s", "universal:direction=stilde"];

/// Flag value if given, else config value, else default.
pub fn pick<T: Clone>(flag: &Option<Vec<T>>, config: &Option<Vec<T>>, default: &[T]) -> Vec<T> {
    flag.clone()
        .or_else(|| config.clone())
        .unwrap_or_else(|| default.to_vec())
}

/// `--out` (which clap also fills from `FORKLAB_OUT`), then the config
/// file, then `.`.
pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// All grid points in `phi`-major order. Fails on an empty axis or any
/// invalid combination.
pub fn grid_points(
    phis: &[f64],
    epsilons: &[f64],
    rhos: &[u32],
    a0: Option<f64>,
) -> Result<Vec<GameParams>, CliError> {
    if phis.is_empty() || epsilons.is_empty() || rhos.is_empty() {
        return Err(CliError::Usage("empty parameter grid".into()));
    }
    let mut points = Vec::with_capacity(phis.len() * epsilons.len() * rhos.len());
    for &phi in phis {
        for &eps in epsilons {
            for &rho in rhos {
                let p = match a0 {
                    Some(a0) => GameParams::with_initial_space(phi, eps, rho, a0),
                    None => GameParams::new(phi, eps, rho),
                };
                points.push(p.map_err(|e| {
                    CliError::Usage(format!("phi={phi} epsilon={eps} rho={rho}: {e}"))
                })?);
            }
        }
    }
    Ok(points)
}

pub fn parse_rules(specs: &[String]) -> Result<Vec<RuleSpec>, CliError> {
    if specs.is_empty() {
        return Err(CliError::Usage("no rules given".into()));
    }
    specs
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|e| CliError::Usage(format!("rule {s:?}: {e}")))
        })
        .collect()
}

pub fn parse_strategies(specs: &[String]) -> Result<Vec<StrategySpec>, CliError> {
    if specs.is_empty() {
        return Err(CliError::Usage("no strategies given".into()));
    }
    specs
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|e| CliError::Usage(format!("strategy {s:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"phi": [3.0], "rho": [8]}"#).unwrap();
        assert_eq!(pick(&Some(vec![1.5]), &cfg.phi, &[2.0]), vec![1.5]);
        assert_eq!(pick(&None, &cfg.phi, &[2.0]), vec![3.0]);
        assert_eq!(pick(&None, &cfg.epsilon, &[0.01]), vec![0.01]);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed": 1}"#).is_err());
    }

    #[test]
    fn grid_validation() {
        assert_eq!(
            grid_points(&[2.0, 3.0], &[0.1], &[2, 4], None)
                .unwrap()
                .len(),
            4
        );
        assert!(matches!(
            grid_points(&[], &[0.1], &[2], None),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            grid_points(&[2.0], &[0.1], &[1], None),
            Err(CliError::Usage(_))
        ));
    }
}
