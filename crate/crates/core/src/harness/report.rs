//! Per-round traces, regret reports and bound checks.
//!
//! Bound checks are always recomputed from trace rows, so the standalone
//! checker and the runner share [`evaluate_bounds`].

use serde::{Deserialize, Serialize};

use super::config::{EtaPolicy, Mode};
use crate::adaptive::{adaptive_regret_bound, fixed_rate_bound, optimal_bound, CostSchedule};
use crate::error::{Error, Result};
use crate::forecaster::tuned_regret_bound;
use crate::littlestone::littlestone_regret_bound;

/// Slack allowed on every bound comparison.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// One line of `trace.csv`.
///
/// In multiclass runs `p_t` holds the largest class probability and `y_t` the
/// class index. `d_t` is the adaptive counter after the round, 0 elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub p_t: f64,
    pub alpha_t: f64,
    pub decision: String,
    pub y_t: usize,
    pub c_t: f64,
    pub r_t: f64,
    pub mix_loss: f64,
    pub expected_loss: f64,
    pub eta_t: f64,
    pub d_t: u64,
}

pub fn trace_csv(rows: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    /// Regret the bound is compared against.
    pub regret: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: &str, value: f64, regret: f64) -> Self {
        BoundCheck {
            name: name.into(),
            value,
            regret,
            pass: regret <= value + BOUND_TOLERANCE,
        }
    }
}

/// What a bound needs besides the trace itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundContext {
    pub mode: Mode,
    pub eta_policy: EtaPolicy,
    pub n_experts: usize,
    /// Littlestone dimension, littlestone mode only.
    pub ldim: Option<u32>,
    /// Loss of the best hypothesis, littlestone mode only.
    pub best_hypothesis_loss: Option<u64>,
}

/// Hindsight quantities reported for changing-cost runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hindsight {
    pub eta_star: f64,
    pub r_star: f64,
}

/// Every applicable bound, recomputed from `rows` and the expert totals.
pub fn evaluate_bounds(
    ctx: &BoundContext,
    rows: &[TraceRow],
    expert_losses: &[u64],
) -> Result<(Vec<BoundCheck>, Option<Hindsight>)> {
    let horizon = rows.len();
    let n = ctx.n_experts;
    let ln_n = (n as f64).ln();
    let learner: f64 = rows.iter().map(|r| r.expected_loss).sum();
    let best = expert_losses.iter().copied().min().unwrap_or(0);
    let regret = learner - best as f64;
    let costs = CostSchedule::new(rows.iter().map(|r| r.c_t).collect())?;
    let mut checks = Vec::new();
    let mut hindsight = None;

    match ctx.mode {
        Mode::Adaptive => {
            let opt = optimal_bound(&costs, n)?;
            hindsight = Some(Hindsight {
                eta_star: opt.eta_star,
                r_star: opt.r_star,
            });
            checks.push(BoundCheck::new(
                "adaptive",
                adaptive_regret_bound(&costs, n)?,
                regret,
            ));
        }
        Mode::BinaryChangingC => {
            let eta = single_rate(rows)?;
            if n >= 2 {
                let opt = optimal_bound(&costs, n)?;
                hindsight = Some(Hindsight {
                    eta_star: opt.eta_star,
                    r_star: opt.r_star,
                });
            }
            checks.push(BoundCheck::new(
                "changing_cost",
                fixed_rate_bound(eta, &costs, n)?,
                regret,
            ));
            checks.push(hedge(ln_n, eta, horizon, regret));
        }
        Mode::BinaryFixedC | Mode::Multiclass | Mode::Littlestone => {
            let eta = single_rate(rows)?;
            let c = single_cost(rows)?;
            if eta <= 2.0 * (1.0 - 2.0 * c) {
                checks.push(BoundCheck::new("fixed_rate", ln_n / eta, regret));
            }
            checks.push(hedge(ln_n, eta, horizon, regret));
            if ctx.eta_policy == EtaPolicy::Tuned {
                let name = match ctx.mode {
                    Mode::Multiclass => "multiclass",
                    _ => "tuned_rate",
                };
                checks.push(BoundCheck::new(
                    name,
                    tuned_regret_bound(n, horizon, c),
                    regret,
                ));
            }
            if ctx.mode == Mode::Littlestone {
                let (l, h) = ctx
                    .ldim
                    .zip(ctx.best_hypothesis_loss)
                    .ok_or(Error::Config {
                        field: "class",
                        msg: "littlestone bounds need the dimension and best hypothesis loss"
                            .into(),
                    })?;
                checks.push(BoundCheck::new(
                    "littlestone_cover",
                    littlestone_regret_bound(l, horizon, c),
                    learner - h as f64,
                ));
            }
        }
    }
    Ok((checks, hindsight))
}

fn hedge(ln_n: f64, eta: f64, horizon: usize, regret: f64) -> BoundCheck {
    BoundCheck::new("hedge", ln_n / eta + eta * horizon as f64 / 8.0, regret)
}

fn single_rate(rows: &[TraceRow]) -> Result<f64> {
    constant(rows.iter().map(|r| r.eta_t), "learning rate")
}

fn single_cost(rows: &[TraceRow]) -> Result<f64> {
    constant(rows.iter().map(|r| r.c_t), "abstention cost")
}

fn constant(mut values: impl Iterator<Item = f64>, what: &'static str) -> Result<f64> {
    let first = values.next().ok_or(Error::Shape {
        expected: 1,
        got: 0,
    })?;
    match values.find(|&v| v != first) {
        None => Ok(first),
        Some(v) => Err(Error::Construction {
            what: "bound check",
            msg: format!("{what} varies ({first} vs {v}) in a fixed-rate run"),
        }),
    }
}

/// Summary of a sampled-mode run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSummary {
    pub runs: usize,
    pub mean_loss: f64,
    pub mean_regret: f64,
    /// 95% half-width: `sqrt(T ln 40 / (2 M))`.
    pub ci_half_width: f64,
}

impl SampledSummary {
    pub fn new(horizon: usize, realized: &[f64], best_expert_loss: u64) -> Self {
        let runs = realized.len();
        let mean_loss = realized.iter().sum::<f64>() / runs as f64;
        SampledSummary {
            runs,
            mean_loss,
            mean_regret: mean_loss - best_expert_loss as f64,
            ci_half_width: hoeffding_half_width(horizon, runs),
        }
    }
}

/// Half-width of a 95% confidence interval for the mean of `runs` sums of
/// `horizon` rounds with losses in `[0, 1]`.
pub fn hoeffding_half_width(horizon: usize, runs: usize) -> f64 {
    (horizon as f64 * 40f64.ln() / (2.0 * runs as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub mode: Mode,
    pub eta_policy: EtaPolicy,
    #[serde(with = "super::config::seed_format")]
    pub seed: u64,
    pub n_experts: usize,
    pub horizon: usize,
    pub learner_loss: f64,
    pub expert_losses: Vec<u64>,
    pub best_expert: usize,
    pub best_expert_loss: u64,
    pub regret: f64,
    pub final_eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_d: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ldim: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_hypothesis_loss: Option<u64>,
    pub trace: String,
    pub env: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hindsight: Option<Hindsight>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledSummary>,
    pub bounds: Vec<BoundCheck>,
}

pub const TRACE_FILE: &str = "trace.csv";
pub const ENV_FILE: &str = "env.txt";
pub const REPORT_FILE: &str = "report.toml";

impl RegretReport {
    /// Assembles a report from raw trace rows.
    pub fn from_trace(
        ctx: &BoundContext,
        seed: u64,
        rows: &[TraceRow],
        expert_losses: Vec<u64>,
        realized: Option<&[f64]>,
    ) -> Result<Self> {
        let (mut bounds, hindsight) = evaluate_bounds(ctx, rows, &expert_losses)?;
        let learner_loss: f64 = rows.iter().map(|r| r.expected_loss).sum();
        let (best_expert, best_expert_loss) = expert_losses
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(i, l)| (l, i))
            .unwrap_or((0, 0));
        let sampled = realized.map(|r| SampledSummary::new(rows.len(), r, best_expert_loss));
        if let Some(s) = &sampled {
            let extra: Vec<BoundCheck> = bounds
                .iter()
                .map(|b| BoundCheck {
                    name: format!("{}/sampled", b.name),
                    value: b.value,
                    regret: s.mean_regret,
                    pass: s.mean_regret - s.ci_half_width <= b.value + BOUND_TOLERANCE,
                })
                .collect();
            bounds.extend(extra);
        }
        let last = rows.last();
        Ok(RegretReport {
            mode: ctx.mode,
            eta_policy: ctx.eta_policy,
            seed,
            n_experts: ctx.n_experts,
            horizon: rows.len(),
            learner_loss,
            best_expert,
            best_expert_loss,
            regret: learner_loss - best_expert_loss as f64,
            expert_losses,
            final_eta: last.map_or(0.0, |r| r.eta_t),
            final_d: (ctx.mode == Mode::Adaptive).then(|| last.map_or(1, |r| r.d_t)),
            ldim: ctx.ldim,
            best_hypothesis_loss: ctx.best_hypothesis_loss,
            trace: TRACE_FILE.into(),
            env: ENV_FILE.into(),
            pass: bounds.iter().all(|b| b.pass),
            hindsight,
            sampled,
            bounds,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })
    }
}
