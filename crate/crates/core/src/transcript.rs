//! Line-oriented transcript log.
//!
//! ```text
//! # forklab transcript v1
//! # params phi=2 epsilon=0.5 rho=2 a0=0.5
//! # rule weight
//! # strategy weight-attack
//! round,gamma,move,arg,lock,a_i,h_i
//! 1,0.6666666666666666,bootstrap,4*0.3333333333333333,0,0.3333333333333333,0.6666666666666666
//! ...
//! # outcome winner=1 fork_length=6
//! ```
//!
//! `move` is `none` or the round's moves joined by `+`; `arg` holds one
//! argument per move joined by `|` (bootstrap sizes run-length encoded as
//! `count*value` separated by `;`, the replot increment, nothing for stop).
//! `lock`, `a_i` and `h_i` are the state after the round. Floats use the
//! shortest representation that parses back to the same bits, so replaying a
//! log reproduces every recorded value exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{
    initial_state, AdversaryAction, GameError, GameParams, GameState, Move, Outcome, ParamError,
    Transcript,
};
use crate::registry::SpecError;
use crate::rules::{RuleSpec, Winner};

pub const MAGIC: &str = "# forklab transcript v1";
pub const HEADER: &str = "round,gamma,move,arg,lock,a_i,h_i";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("rule: {0}")]
    Rule(#[from] SpecError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("round {round}: recorded {field}={recorded}, replay gives {replayed}")]
    Mismatch {
        round: usize,
        field: &'static str,
        recorded: String,
        replayed: String,
    },
    #[error("recorded outcome {recorded}, replay gives {replayed}")]
    OutcomeMismatch {
        recorded: Outcome,
        replayed: Outcome,
    },
    #[error("game did not stop at the last recorded round")]
    NotStopped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub round: usize,
    pub action: AdversaryAction,
    pub lock: u32,
    pub a: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptLog {
    pub params: GameParams,
    pub rule: String,
    pub strategy: String,
    pub rows: Vec<LogRow>,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub final_state: GameState,
    pub outcome: Outcome,
}

impl TranscriptLog {
    pub fn from_transcript(t: &Transcript) -> Result<Self, GameError> {
        let mut state = initial_state(&t.params);
        let mut rows = Vec::with_capacity(t.actions.len());
        for action in &t.actions {
            let round = state.round() + 1;
            state
                .step_mut(action)
                .map_err(|source| GameError::Action { round, source })?;
            rows.push(LogRow {
                round,
                action: action.clone(),
                lock: state.lock(),
                a: state.adv_space(),
                h: state.honest_space(),
            });
        }
        Ok(Self {
            params: t.params,
            rule: t.rule.clone(),
            strategy: t.strategy.clone(),
            rows,
            outcome: Some(t.outcome),
        })
    }

    pub fn render(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(
            out,
            "# params phi={} epsilon={} rho={} a0={}",
            p.phi(),
            p.epsilon(),
            p.rho(),
            p.a0()
        );
        let _ = writeln!(out, "# rule {}", self.rule);
        let _ = writeln!(out, "# strategy {}", self.strategy);
        out.push_str(HEADER);
        out.push('\n');
        for row in &self.rows {
            let (mv, arg) = encode_moves(&row.action.moves);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.round, row.action.gamma, mv, arg, row.lock, row.a, row.h
            );
        }
        if let Some(o) = self.outcome {
            let _ = writeln!(out, "# outcome {o}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut params = None;
        let mut rule = None;
        let mut strategy = None;
        let mut outcome = None;
        let mut saw_magic = false;
        let mut saw_header = false;
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let syntax = |msg: &str| LogError::Syntax {
                line: line_no,
                msg: msg.to_string(),
            };
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if line == MAGIC {
                    saw_magic = true;
                } else if let Some(rest) = comment.strip_prefix("params ") {
                    params = Some(parse_params(rest).map_err(|m| syntax(&m))??);
                } else if let Some(rest) = comment.strip_prefix("rule ") {
                    rule = Some(rest.trim().to_string());
                } else if let Some(rest) = comment.strip_prefix("strategy ") {
                    strategy = Some(rest.trim().to_string());
                } else if let Some(rest) = comment.strip_prefix("outcome ") {
                    outcome = Some(parse_outcome(rest).map_err(|m| syntax(&m))?);
                }
                continue;
            }
            if !saw_header {
                if line != HEADER {
                    return Err(syntax(&format!("expected header {HEADER:?}")));
                }
                saw_header = true;
                continue;
            }
            let row = parse_row(line).map_err(|m| syntax(&m))?;
            if row.round != rows.len() + 1 {
                return Err(syntax(&format!("expected round {}", rows.len() + 1)));
            }
            rows.push(row);
        }
        if !saw_magic {
            return Err(LogError::Missing("transcript marker line"));
        }
        if !saw_header {
            return Err(LogError::Missing("column header"));
        }
        Ok(Self {
            params: params.ok_or(LogError::Missing("params line"))?,
            rule: rule.ok_or(LogError::Missing("rule line"))?,
            strategy: strategy.ok_or(LogError::Missing("strategy line"))?,
            rows,
            outcome,
        })
    }

    /// Re-runs every recorded action, checks each recorded state value bit for
    /// bit, evaluates the recorded rule and compares with the recorded outcome.
    pub fn replay(&self) -> Result<ReplayReport, LogError> {
        let rule = self.rule.parse::<RuleSpec>()?.build(&self.params)?;
        let mut state = initial_state(&self.params);
        for row in &self.rows {
            state
                .step_mut(&row.action)
                .map_err(|source| GameError::Action {
                    round: row.round,
                    source,
                })?;
            check(
                row.round,
                "lock",
                row.lock.to_string(),
                state.lock().to_string(),
            )?;
            check(row.round, "a_i", bits(row.a), bits(state.adv_space()))?;
            check(row.round, "h_i", bits(row.h), bits(state.honest_space()))?;
        }
        if !state.is_stopped() {
            return Err(LogError::NotStopped);
        }
        let replayed = state.evaluate(rule.as_ref())?;
        if let Some(recorded) = self.outcome {
            if recorded != replayed {
                return Err(LogError::OutcomeMismatch { recorded, replayed });
            }
        }
        Ok(ReplayReport {
            final_state: state,
            outcome: replayed,
        })
    }

    pub fn actions(&self) -> Vec<AdversaryAction> {
        self.rows.iter().map(|r| r.action.clone()).collect()
    }
}

fn bits(x: f64) -> String {
    format!("{x} ({:#018x})", x.to_bits())
}

fn check(
    round: usize,
    field: &'static str,
    recorded: String,
    replayed: String,
) -> Result<(), LogError> {
    if recorded == replayed {
        Ok(())
    } else {
        Err(LogError::Mismatch {
            round,
            field,
            recorded,
            replayed,
        })
    }
}

fn encode_moves(moves: &[Move]) -> (String, String) {
    if moves.is_empty() {
        return ("none".into(), String::new());
    }
    let names: Vec<&str> = moves.iter().map(Move::keyword).collect();
    let args: Vec<String> = moves
        .iter()
        .map(|m| match m {
            Move::Bootstrap(sizes) => encode_sizes(sizes),
            Move::Replot(add) => add.to_string(),
            Move::Stop => String::new(),
        })
        .collect();
    (names.join("+"), args.join("|"))
}

fn encode_sizes(sizes: &[f64]) -> String {
    let mut runs: Vec<(usize, f64)> = Vec::new();
    for &s in sizes {
        match runs.last_mut() {
            Some((n, v)) if v.to_bits() == s.to_bits() => *n += 1,
            _ => runs.push((1, s)),
        }
    }
    runs.iter()
        .map(|&(n, v)| {
            if n == 1 {
                v.to_string()
            } else {
                format!("{n}*{v}")
            }
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("bad {what} {s:?}"))
}

fn parse_sizes(arg: &str) -> Result<Vec<f64>, String> {
    let mut sizes = Vec::new();
    for run in arg.split(';') {
        match run.split_once('*') {
            Some((n, v)) => {
                let n: usize = n.parse().map_err(|_| format!("bad run length {n:?}"))?;
                sizes.extend(std::iter::repeat_n(parse_f64(v, "block size")?, n));
            }
            None => sizes.push(parse_f64(run, "block size")?),
        }
    }
    Ok(sizes)
}

fn parse_row(line: &str) -> Result<LogRow, String> {
    let cols: Vec<&str> = line.split(',').collect();
    let [round, gamma, mv, arg, lock, a, h] = cols.as_slice() else {
        return Err(format!("expected 7 columns, got {}", cols.len()));
    };
    let round: usize = round.parse().map_err(|_| format!("bad round {round:?}"))?;
    let gamma = parse_f64(gamma, "gamma")?;
    let moves = if *mv == "none" {
        if !arg.is_empty() {
            return Err("move none takes no argument".into());
        }
        Vec::new()
    } else {
        let names: Vec<&str> = mv.split('+').collect();
        let args: Vec<&str> = arg.split('|').collect();
        if names.len() != args.len() {
            return Err(format!(
                "{} moves but {} arguments",
                names.len(),
                args.len()
            ));
        }
        names
            .iter()
            .zip(&args)
            .map(|(name, arg)| match *name {
                "bootstrap" => parse_sizes(arg).map(Move::Bootstrap),
                "replot" => parse_f64(arg, "replot increment").map(Move::Replot),
                "stop" if arg.is_empty() => Ok(Move::Stop),
                "stop" => Err("stop takes no argument".into()),
                other => Err(format!("unknown move {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(LogRow {
        round,
        action: AdversaryAction { gamma, moves },
        lock: lock.parse().map_err(|_| format!("bad lock {lock:?}"))?,
        a: parse_f64(a, "a_i")?,
        h: parse_f64(h, "h_i")?,
    })
}

fn key_values(s: &str) -> Result<Vec<(&str, &str)>, String> {
    s.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| format!("expected key=value, got {kv:?}"))
        })
        .collect()
}

fn lookup<'a>(kvs: &[(&str, &'a str)], key: &str) -> Result<&'a str, String> {
    kvs.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing {key}"))
}

fn parse_params(s: &str) -> Result<Result<GameParams, ParamError>, String> {
    let kvs = key_values(s)?;
    let phi = parse_f64(lookup(&kvs, "phi")?, "phi")?;
    let epsilon = parse_f64(lookup(&kvs, "epsilon")?, "epsilon")?;
    let rho = lookup(&kvs, "rho")?;
    let rho: u32 = rho.parse().map_err(|_| format!("bad rho {rho:?}"))?;
    let a0 = parse_f64(lookup(&kvs, "a0")?, "a0")?;
    Ok(GameParams::with_initial_space(phi, epsilon, rho, a0))
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    let kvs = key_values(s)?;
    let winner = match lookup(&kvs, "winner")? {
        "0" => Winner::Honest,
        "1" => Winner::Adversary,
        other => return Err(format!("bad winner {other:?}")),
    };
    let fl = lookup(&kvs, "fork_length")?;
    let fork_length = fl.parse().map_err(|_| format!("bad fork_length {fl:?}"))?;
    Ok(Outcome {
        winner,
        fork_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TranscriptLog {
        TranscriptLog {
            params: GameParams::new(2.0, 0.5, 2).unwrap(),
            rule: "weight".into(),
            strategy: "manual".into(),
            rows: vec![
                LogRow {
                    round: 1,
                    action: AdversaryAction::idle(1.0)
                        .bootstrap(vec![0.5, 0.5, 0.25])
                        .replot(0.5),
                    lock: 1,
                    a: 0.5,
                    h: 1.0,
                },
                LogRow {
                    round: 2,
                    action: AdversaryAction::idle(1.0).stop(),
                    lock: 0,
                    a: 0.5,
                    h: 1.0,
                },
            ],
            outcome: None,
        }
    }

    #[test]
    fn render_and_parse() {
        let log = sample();
        let text = log.render();
        assert!(text.contains("\n1,1,bootstrap+replot,2*0.5;0.25|0.5,1,0.5,1\n"));
        assert!(text.contains("\n2,1,stop,,0,0.5,1\n"));
        assert_eq!(TranscriptLog::parse(&text).unwrap(), log);
    }

    #[test]
    fn replay_checks_values() {
        let log = sample();
        let report = log.replay().unwrap();
        assert!(report.final_state.is_stopped());
        assert_eq!(report.outcome.fork_length, 2);

        let mut bad = log.clone();
        bad.rows[0].a = 0.5000000000000001;
        assert!(matches!(
            bad.replay(),
            Err(LogError::Mismatch {
                round: 1,
                field: "a_i",
                ..
            })
        ));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            TranscriptLog::parse(""),
            Err(LogError::Missing(_))
        ));
        let text = sample().render().replace("bootstrap+replot", "jump");
        assert!(matches!(
            TranscriptLog::parse(&text),
            Err(LogError::Syntax { .. })
        ));
    }
}
