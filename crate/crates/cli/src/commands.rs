//! Subcommand implementations. Each writes its files under the output
//! directory and reports to the given stdout/stderr handles.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

use forklab_core::adversaries::universal_profiles;
use forklab_core::bounds::{
    ceil_guarded, ell_genesis, ell_tent_lower, ell_universal, ell_weight, BoundReport,
};
use forklab_core::profile_csv::{format_sig, profile_to_csv};
use forklab_core::transcript::TranscriptLog;
use forklab_core::{run_game, GameParams, Outcome, RuleSpec, StrategySpec};

use crate::args::{BoundsArgs, GridArgs, ProfilesArgs, ReplayArgs, RunArgs, SweepArgs};
use crate::config::{self, ExperimentConfig};
use crate::svg::{line_plot, Curve};
use crate::CliError;

pub const SWEEP_HEADER: [&str; 9] = [
    "phi",
    "epsilon",
    "rho",
    "rule",
    "strategy",
    "winner",
    "fork_length",
    "bound_ell",
    "match",
];
pub const BOUNDS_HEADER: [&str; 8] = [
    "phi",
    "epsilon",
    "rho",
    "k",
    "ell_weight",
    "ell_genesis",
    "ell_universal",
    "ell_tent_lower",
];

pub const TRANSCRIPT_FILE: &str = "transcript.log";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const PROFILE_S_FILE: &str = "profile_s.csv";
pub const PROFILE_S_TILDE_FILE: &str = "profile_s_tilde.csv";
pub const PROFILE_SVG_FILE: &str = "profiles.svg";

/// Shared state for one invocation.
pub struct Session {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl Session {
    fn grid(
        &self,
        args: &GridArgs,
        defaults: (&[f64], &[f64], &[u32]),
    ) -> Result<Vec<GameParams>, CliError> {
        let phis = config::pick(&args.phi, &self.config.phi, defaults.0);
        let epsilons = config::pick(&args.epsilon, &self.config.epsilon, defaults.1);
        let rhos = config::pick(&args.rho, &self.config.rho, defaults.2);
        config::grid_points(&phis, &epsilons, &rhos, args.a0.or(self.config.a0))
    }

    fn single_point(&self, args: &GridArgs) -> Result<GameParams, CliError> {
        let (phi, eps, rho) = config::DEFAULT_POINT;
        let points = self.grid(args, (&[phi], &[eps], &[rho]))?;
        single("parameter point", points)
    }

    fn sweep_grid(&self, args: &GridArgs) -> Result<Vec<GameParams>, CliError> {
        self.grid(
            args,
            (
                &config::DEFAULT_PHIS,
                &config::DEFAULT_EPSILONS,
                &config::DEFAULT_RHOS,
            ),
        )
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating output directory {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }
}

fn single<T>(what: &str, mut items: Vec<T>) -> Result<T, CliError> {
    if items.len() != 1 {
        return Err(CliError::Usage(format!(
            "expected exactly one {what}, got {}",
            items.len()
        )));
    }
    Ok(items.remove(0))
}

fn strings(defaults: &[&str]) -> Vec<String> {
    defaults.iter().map(|s| s.to_string()).collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Run(e.into())
}

/// Plays one game and writes its transcript log.
pub fn run(
    ctx: &Session,
    args: &RunArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let params = ctx.single_point(&args.grid)?;
    let rule = config::parse_rules(&config::pick(
        &args.rules,
        &ctx.config.rules,
        &strings(&["weight"]),
    ))?;
    let rule = single("rule", rule)?;
    let strategy = config::parse_strategies(&config::pick(
        &args.strategies,
        &ctx.config.strategies,
        &strings(&["weight-attack"]),
    ))?;
    let strategy = single("strategy", strategy)?;

    let rule = rule
        .build(&params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut player = strategy
        .build(&params, rule.as_ref())
        .context("building strategy")?;
    let transcript = run_game(&params, player.as_mut(), rule.as_ref()).context("game failed")?;
    let log = TranscriptLog::from_transcript(&transcript).context("rendering transcript")?;

    let path = match &args.transcript {
        Some(p) => p.clone(),
        None => ctx.out_file(TRANSCRIPT_FILE)?,
    };
    write_file(&path, &log.render())?;
    writeln!(stderr, "wrote {}", path.display()).map_err(io)?;
    writeln!(stdout, "{}", transcript.outcome).map_err(io)?;
    Ok(())
}

/// How a strategy's fork length is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    Exact,
    Within(u64),
    AtMost,
    AtLeast,
}

impl Check {
    pub fn holds(self, bound: u64, fork_length: usize) -> bool {
        let len = fork_length as u64;
        match self {
            Check::Exact => len == bound,
            Check::Within(hi) => (bound..=hi).contains(&len),
            Check::AtMost => len <= bound,
            Check::AtLeast => len >= bound,
        }
    }
}

/// The bound a sweep row is compared against.
///
/// Constructive attacks are checked against their own closed form: exactly
/// for the universal and genesis attacks, within the overshoot bracket for
/// the weight attack. Grid search is checked against the rule: it must not
/// need more than the weight or genesis construction, and it cannot beat the
/// tent lower bound.
pub fn sweep_bound(
    params: &GameParams,
    rule: &RuleSpec,
    strategy: &StrategySpec,
) -> Result<(u64, Check), CliError> {
    let (phi, eps, rho) = (params.phi(), params.epsilon(), params.rho());
    let spec = strategy.component();
    let weight_bracket = || -> Result<(u64, u64), CliError> {
        let lo = ell_weight(phi, eps).context("weight bound")?;
        Ok((lo, lo + ceil_guarded(phi * params.growth()) + 2))
    };
    let k_option = |c: &forklab_core::registry::ComponentSpec| -> Result<u64, CliError> {
        c.require::<u64>("k")
            .map_err(|e| CliError::Usage(e.to_string()))
    };
    Ok(match spec.name() {
        "universal" => (
            ell_universal(phi, eps, rho).context("universal bound")?.ell,
            Check::Exact,
        ),
        "genesis-attack" => (
            ell_genesis(phi, k_option(spec)?, rho).context("genesis bound")?,
            Check::Exact,
        ),
        "weight-attack" => {
            let (lo, hi) = weight_bracket()?;
            match spec.get("horizon") {
                Some("min") => (hi, Check::AtMost),
                _ => (lo, Check::Within(hi)),
            }
        }
        _ => match rule.component().name() {
            "weight" => (weight_bracket()?.1, Check::AtMost),
            "genesis" => (
                ell_genesis(phi, k_option(rule.component())?, rho).context("genesis bound")?,
                Check::AtMost,
            ),
            _ => (
                ceil_guarded(ell_tent_lower(phi, eps, rho).context("tent bound")?),
                Check::AtLeast,
            ),
        },
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub params: GameParams,
    pub rule: String,
    pub strategy: String,
    /// The outcome, or the round a failed run stopped at (0 before the game).
    pub result: Result<Outcome, usize>,
    pub bound: u64,
    pub matched: bool,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let (winner, fork) = match &self.result {
            Ok(o) => (o.winner.bit().to_string(), o.fork_length.to_string()),
            Err(round) => (format!("error:{round}"), String::new()),
        };
        vec![
            self.params.phi().to_string(),
            self.params.epsilon().to_string(),
            self.params.rho().to_string(),
            self.rule.clone(),
            self.strategy.clone(),
            winner,
            fork,
            self.bound.to_string(),
            self.matched.to_string(),
        ]
    }
}

fn sweep_one(
    params: &GameParams,
    rule: &RuleSpec,
    strategy: &StrategySpec,
) -> Result<SweepRow, CliError> {
    let built_rule = rule
        .build(params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (bound, check) = sweep_bound(params, rule, strategy)?;
    let result = strategy
        .build(params, built_rule.as_ref())
        .map_err(|_| 0)
        .and_then(|mut s| {
            run_game(params, s.as_mut(), built_rule.as_ref())
                .map(|t| t.outcome)
                .map_err(|e| e.round().unwrap_or(0))
        });
    let matched = matches!(&result, Ok(o) if check.holds(bound, o.fork_length));
    Ok(SweepRow {
        params: *params,
        rule: built_rule.spec(),
        strategy: strategy.to_string(),
        result,
        bound,
        matched,
    })
}

/// Runs every combination in parallel; rows come back in grid order.
pub fn sweep_rows(
    points: &[GameParams],
    rules: &[RuleSpec],
    strategies: &[StrategySpec],
) -> Result<Vec<SweepRow>, CliError> {
    let mut jobs = Vec::with_capacity(points.len() * rules.len() * strategies.len());
    for p in points {
        for r in rules {
            for s in strategies {
                jobs.push((p, r, s));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(p, r, s)| sweep_one(p, r, s))
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).context("writing sweep csv")?;
    for row in rows {
        w.write_record(row.record()).context("writing sweep csv")?;
    }
    let bytes = w.into_inner().context("writing sweep csv")?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sweep(
    ctx: &Session,
    args: &SweepArgs,
    _stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let points = ctx.sweep_grid(&args.grid)?;
    let rules = config::parse_rules(&config::pick(
        &args.rules,
        &ctx.config.rules,
        &strings(&config::DEFAULT_RULES),
    ))?;
    let strategies = config::parse_strategies(&config::pick(
        &args.strategies,
        &ctx.config.strategies,
        &strings(&config::DEFAULT_STRATEGIES),
    ))?;
    let rows = sweep_rows(&points, &rules, &strategies)?;
    let path = ctx.out_file(SWEEP_FILE)?;
    write_file(&path, &sweep_csv(&rows)?)?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    writeln!(
        stderr,
        "wrote {} ({} rows, {failed} failed)",
        path.display(),
        rows.len()
    )
    .map_err(io)?;
    Ok(())
}

pub fn bounds_csv(reports: &[BoundReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BOUNDS_HEADER)
        .context("writing bounds csv")?;
    for r in reports {
        w.write_record([
            r.params.phi().to_string(),
            r.params.epsilon().to_string(),
            r.params.rho().to_string(),
            r.k_steps.to_string(),
            r.ell_weight.to_string(),
            r.ell_genesis.to_string(),
            r.ell_universal.ell.to_string(),
            format_sig(r.ell_tent_lower, 12),
        ])
        .context("writing bounds csv")?;
    }
    let bytes = w.into_inner().context("writing bounds csv")?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn bounds(
    ctx: &Session,
    args: &BoundsArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let points = ctx.sweep_grid(&args.grid)?;
    let genesis_k = args.genesis_k.or(ctx.config.genesis_k).unwrap_or(1);
    if genesis_k == 0 {
        return Err(CliError::Usage("genesis-k must be at least 1".into()));
    }
    let reports: Vec<BoundReport> = points
        .iter()
        .map(|p| BoundReport::new(p, genesis_k))
        .collect();
    stdout
        .write_all(bounds_csv(&reports)?.as_bytes())
        .map_err(io)?;
    for r in reports.iter().filter(|r| r.tent_lower_negative()) {
        writeln!(
            stderr,
            "note: ell_tent_lower is negative at phi={} epsilon={} rho={}; the effective bound is {}",
            r.params.phi(),
            r.params.epsilon(),
            r.params.rho(),
            r.tent_lower_clamped()
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Renders the two profiles and the adversarial space that tracks each.
pub fn profiles_svg(params: &GameParams, s: &[f64], s_tilde: &[f64]) -> String {
    let scaled = |v: &[f64]| v.iter().map(|x| x / params.phi()).collect::<Vec<_>>();
    let (a, a_tilde) = (scaled(s), scaled(s_tilde));
    let title = format!(
        "Universal profiles, phi={} epsilon={} rho={}",
        params.phi(),
        params.epsilon(),
        params.rho()
    );
    line_plot(
        &title,
        "block index",
        "space",
        &[
            Curve {
                label: "S (honest)",
                values: s,
                color: "#1f77b4",
                dashed: false,
            },
            Curve {
                label: "S~ (honest)",
                values: s_tilde,
                color: "#d62728",
                dashed: false,
            },
            Curve {
                label: "S/phi (adversary)",
                values: &a,
                color: "#1f77b4",
                dashed: true,
            },
            Curve {
                label: "S~/phi (adversary)",
                values: &a_tilde,
                color: "#d62728",
                dashed: true,
            },
        ],
    )
}

pub fn profiles(
    ctx: &Session,
    args: &ProfilesArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let params = ctx.single_point(&args.grid)?;
    let pair = universal_profiles(&params);
    let files = [
        (PROFILE_S_FILE, profile_to_csv(&pair.s)),
        (PROFILE_S_TILDE_FILE, profile_to_csv(&pair.s_tilde)),
        (
            PROFILE_SVG_FILE,
            profiles_svg(&params, &pair.s, &pair.s_tilde),
        ),
    ];
    for (name, contents) in files {
        let path = ctx.out_file(name)?;
        write_file(&path, &contents)?;
        writeln!(stderr, "wrote {}", path.display()).map_err(io)?;
    }
    writeln!(
        stdout,
        "k={} l={} fork_length={}",
        pair.k,
        pair.l,
        pair.ell()
    )
    .map_err(io)?;
    Ok(())
}

pub fn replay(args: &ReplayArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.transcript)
        .with_context(|| format!("reading {}", args.transcript.display()))?;
    let log = TranscriptLog::parse(&text).context("parsing transcript")?;
    let report = log.replay().context("replay diverged")?;
    writeln!(
        stdout,
        "{} rounds={} replay=ok",
        report.outcome,
        log.rows.len()
    )
    .map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(phi: f64, eps: f64, rho: u32) -> GameParams {
        GameParams::new(phi, eps, rho).unwrap()
    }

    #[test]
    fn bound_per_strategy() {
        let params = p(2.0, 0.01, 4);
        let weight = RuleSpec::weight();
        let b = |s: &str| sweep_bound(&params, &weight, &s.parse().unwrap()).unwrap();
        assert_eq!(b("universal:direction=s"), (1781, Check::Exact));
        assert_eq!(b("weight-attack"), (200, Check::Within(205)));
        assert_eq!(b("genesis-attack:k=3"), (24, Check::Exact));
        assert_eq!(b("grid-search:max_fork=4"), (205, Check::AtMost));
        let tent = RuleSpec::tent(None);
        let g: StrategySpec = "grid-search:max_fork=4".parse().unwrap();
        assert_eq!(
            sweep_bound(&p(2.0, 0.5, 2), &tent, &g).unwrap(),
            (2, Check::AtLeast)
        );
    }

    #[test]
    fn failed_runs_are_recorded_in_row() {
        let params = p(2.0, 0.5, 2);
        let g: StrategySpec = "grid-search:max_fork=1".parse().unwrap();
        let rows = sweep_rows(&[params], &[RuleSpec::tent(None)], &[g]).unwrap();
        assert_eq!(rows[0].result, Err(0));
        assert_eq!(rows[0].record()[5], "error:0");
        assert_eq!(rows[0].record()[6], "");
        assert!(!rows[0].matched);
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let points = [p(2.0, 0.5, 2), p(3.0, 0.5, 2)];
        let strategies: Vec<StrategySpec> = vec![
            "weight-attack".parse().unwrap(),
            "universal:direction=s".parse().unwrap(),
        ];
        let rows = sweep_rows(
            &points,
            &[RuleSpec::weight(), RuleSpec::genesis(1)],
            &strategies,
        )
        .unwrap();
        let keys: Vec<(f64, String, String)> = rows
            .iter()
            .map(|r| (r.params.phi(), r.rule.clone(), r.strategy.clone()))
            .collect();
        assert_eq!(keys.len(), 8);
        assert_eq!(keys[0], (2.0, "weight".into(), "weight-attack".into()));
        assert_eq!(
            keys[3],
            (2.0, "genesis:k=1".into(), "universal:direction=s".into())
        );
        assert_eq!(keys[4].0, 3.0);
    }

    #[test]
    fn tent_lower_formatting() {
        let r = BoundReport::new(&p(2.0, 0.01, 4), 1);
        let csv = bounds_csv(&[r]).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "2,0.01,4,70,200,8,1781,124");
    }
}
