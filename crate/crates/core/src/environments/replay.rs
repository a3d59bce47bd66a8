//! Plain-text episode files.
//!
//! ```text
//! # N=<n> T=<t>
//! t,y_t,c_t,y_t1,...,y_tN
//! ```
//!
//! Multiclass files add `K=<k>` to the header and use labels `0..k`.
//! `t` counts from 1. Costs are written in the shortest form that parses back
//! to the same `f64`, so writing a parsed file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use super::{ClassEpisode, ClassRound, Episode, ObliviousEnvironment, Round};
use crate::error::{Error, Result};
use crate::forecaster::{Advice, Outcome};
use crate::multiclass::ClassAdvice;

/// Replays a materialized episode round by round.
#[derive(Clone, Debug)]
pub struct Replay {
    episode: Episode,
    t: usize,
}

impl Replay {
    pub fn new(episode: Episode) -> Self {
        Replay { episode, t: 0 }
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }
}

impl ObliviousEnvironment for Replay {
    fn n_experts(&self) -> usize {
        self.episode.n_experts()
    }

    fn horizon(&self) -> usize {
        self.episode.horizon()
    }

    fn next_round(&mut self) -> Option<Round> {
        let r = self.episode.rounds().get(self.t)?.clone();
        self.t += 1;
        Some(r)
    }
}

pub fn write_replay(episode: &Episode) -> String {
    let mut out = format!("# N={} T={}\n", episode.n_experts(), episode.horizon());
    for (t, r) in episode.rounds().iter().enumerate() {
        write!(out, "{},{},{}", t + 1, r.outcome.label(), r.cost).unwrap();
        for b in r.advice.bits() {
            write!(out, ",{b}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_replay(text: &str) -> Result<Episode> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| perr(1, "missing header".into()))?;
    let (n, horizon, k) = parse_header(header)?;
    if k.is_some_and(|k| k != 2) {
        return Err(perr(1, "binary episode files cannot declare K > 2".into()));
    }
    let rounds = records(text, horizon)?
        .into_iter()
        .enumerate()
        .map(|(i, (line, raw))| parse_record(line, raw, n, i + 1))
        .collect::<Result<Vec<_>>>()?;
    Episode::new(n, rounds)
}

/// Reads an episode file.
pub fn replay_env(path: impl AsRef<Path>) -> Result<Replay> {
    let text = std::fs::read_to_string(path)?;
    Ok(Replay::new(parse_replay(&text)?))
}

fn perr(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

fn parse_header(header: &str) -> Result<(usize, usize, Option<usize>)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| perr(1, "header must start with `#`".into()))?;
    let mut n = None;
    let mut t = None;
    let mut k = None;
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| perr(1, format!("malformed header field `{field}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| perr(1, format!("bad value in `{field}`")))?;
        match key {
            "N" => n = Some(value),
            "T" => t = Some(value),
            "K" => k = Some(value),
            _ => return Err(perr(1, format!("unknown header key `{key}`"))),
        }
    }
    match (n, t) {
        _ if k.is_some_and(|k| k < 2) => Err(perr(1, "K must be at least 2".into())),
        (Some(n), Some(t)) if n > 0 => Ok((n, t, k)),
        (Some(0), _) => Err(perr(1, "N must be positive".into())),
        _ => Err(perr(1, "header needs N and T".into())),
    }
}

/// Fields of one record: label, cost and expert labels, all below `k`.
fn parse_fields(
    line: usize,
    raw: &str,
    n: usize,
    k: usize,
    expected_t: usize,
) -> Result<(usize, f64, Vec<usize>)> {
    let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
    if fields.len() != n + 3 {
        return Err(perr(
            line,
            format!("expected {} fields, found {}", n + 3, fields.len()),
        ));
    }
    let t: usize = fields[0]
        .parse()
        .map_err(|_| perr(line, format!("bad round index `{}`", fields[0])))?;
    if t != expected_t {
        return Err(perr(
            line,
            format!("round index {t}, expected {expected_t}"),
        ));
    }
    let label = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v < k && !s.starts_with('+') => Ok(v),
            _ => Err(perr(
                line,
                format!("expected a label below {k}, found `{s}`"),
            )),
        }
    };
    let y = label(fields[1])?;
    let cost: f64 = fields[2]
        .parse()
        .map_err(|_| perr(line, format!("bad cost `{}`", fields[2])))?;
    if !(0.0..=0.5).contains(&cost) {
        return Err(perr(line, format!("cost {cost} outside [0, 1/2]")));
    }
    let labels = fields[3..]
        .iter()
        .map(|s| label(s))
        .collect::<Result<Vec<_>>>()?;
    Ok((y, cost, labels))
}

fn parse_record(line: usize, raw: &str, n: usize, expected_t: usize) -> Result<Round> {
    let (y, cost, labels) = parse_fields(line, raw, n, 2, expected_t)?;
    Ok(Round {
        advice: Advice::new(labels.into_iter().map(|b| b as u8).collect())?,
        outcome: Outcome::new(y as u8)?,
        cost,
    })
}

/// Iterates the non-blank records after the header, checking the count.
fn records(text: &str, horizon: usize) -> Result<Vec<(usize, &str)>> {
    let mut out = Vec::with_capacity(horizon);
    let mut last_line = 1;
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = i + 1;
        last_line = line;
        if raw.trim().is_empty() {
            continue;
        }
        if out.len() == horizon {
            return Err(perr(line, format!("more than T={horizon} records")));
        }
        out.push((line, raw));
    }
    if out.len() < horizon {
        return Err(perr(
            last_line + 1,
            format!("record {} of {horizon} is missing", out.len() + 1),
        ));
    }
    Ok(out)
}

/// Writes a multiclass episode; the header carries `K=<k>`.
pub fn write_class_replay(episode: &ClassEpisode) -> String {
    let mut out = format!(
        "# N={} T={} K={}\n",
        episode.n_experts(),
        episode.horizon(),
        episode.k()
    );
    for (t, r) in episode.rounds().iter().enumerate() {
        write!(out, "{},{},{}", t + 1, r.outcome, r.cost).unwrap();
        for l in r.advice.labels() {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_class_replay(text: &str) -> Result<ClassEpisode> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| perr(1, "missing header".into()))?;
    let (n, horizon, k) = parse_header(header)?;
    let k = k.ok_or_else(|| perr(1, "multiclass header needs K".into()))?;
    let rounds = records(text, horizon)?
        .into_iter()
        .enumerate()
        .map(|(i, (line, raw))| {
            let (y, cost, labels) = parse_fields(line, raw, n, k, i + 1)?;
            Ok(ClassRound {
                advice: ClassAdvice::new(labels, k)?,
                outcome: y,
                cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ClassEpisode::new(n, k, rounds)
}
