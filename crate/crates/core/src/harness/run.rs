//! Executes one configured experiment.

use std::fs;
use std::path::Path;

use rand::Rng;

use super::config::{ClassSpec, CostSpec, EnvSpec, EtaPolicy, Expectation, Mode, RunConfig};
use super::report::{
    trace_csv, BoundContext, RegretReport, TraceRow, ENV_FILE, REPORT_FILE, TRACE_FILE,
};
use crate::adaptive::{optimal_bound, tsybakov_eta, AdaptiveState, CostSchedule, TsybakovParams};
use crate::environments::{
    iid_class_env, iid_env, parse_replay, tsybakov_costs, write_class_replay, write_replay,
    ActionDistribution, ClassEpisode, ContrarianAdversary, Episode, ReactiveEnvironment, Round,
};
use crate::error::{Error, Result};
use crate::forecaster::{
    sample_decision, tuned_eta, Advice, Decision, DecisionPolicy, ForecasterState, Outcome,
    Prediction,
};
use crate::littlestone::{ExpertCover, HypothesisClass};
use crate::multiclass::{ClassDecision, MulticlassForecaster, MulticlassPolicy};
use crate::rng::{derive_seed, stream};

// Stream indices under the master seed.
const ENV_STREAM: u64 = 1;
const COST_STREAM: u64 = 2;
const DECISION_STREAM: u64 = 3;
const SAMPLED_STREAM_BASE: u64 = 1 << 32;

/// Report, trace and environment file contents of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: RegretReport,
    pub trace: Vec<TraceRow>,
    /// Episode file that replays the run's rounds.
    pub env_text: String,
}

impl RunOutput {
    /// Writes `report.toml`, `trace.csv` and `env.txt` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(REPORT_FILE), self.report.to_toml())?;
        fs::write(dir.join(TRACE_FILE), trace_csv(&self.trace)?)?;
        fs::write(dir.join(ENV_FILE), &self.env_text)?;
        Ok(())
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.mode {
        Mode::Multiclass => run_multiclass(config),
        Mode::Littlestone => run_littlestone(config),
        _ if config.env == EnvSpec::Adversary => run_adversary(config),
        _ => {
            let episode = binary_episode(config)?;
            run_episode(config, &episode, None)
        }
    }
}

/// Reads a cost file: one cost per line, `#` starts a comment.
pub fn parse_costs(text: &str) -> Result<CostSchedule> {
    let mut costs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let c: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("bad cost `{line}`"),
        })?;
        if !(0.0..=0.5).contains(&c) {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("cost {c} outside [0, 1/2]"),
            });
        }
        costs.push(c);
    }
    CostSchedule::new(costs)
}

pub fn write_costs(costs: &CostSchedule) -> String {
    let mut out = format!("# T={}\n", costs.len());
    for c in costs.costs() {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

/// Builds the cost schedule named by the config for `horizon` rounds.
pub fn build_costs(spec: &CostSpec, horizon: usize, seed: u64) -> Result<CostSchedule> {
    match spec {
        CostSpec::Constant(c) => CostSchedule::constant(*c, horizon),
        CostSpec::Tsybakov { alpha, beta } => tsybakov_costs(
            horizon,
            TsybakovParams::new(*alpha, *beta)?,
            derive_seed(seed, COST_STREAM),
        ),
        CostSpec::Uniform { lo, hi } => {
            let mut rng = stream(seed, COST_STREAM);
            CostSchedule::new((0..horizon).map(|_| rng.gen_range(*lo..=*hi)).collect())
        }
        CostSpec::File(path) => {
            let costs = parse_costs(&fs::read_to_string(path)?)?;
            if costs.len() != horizon {
                return Err(Error::Config {
                    field: "costs",
                    msg: format!("file has {} costs, horizon is {horizon}", costs.len()),
                });
            }
            Ok(costs)
        }
    }
}

/// Materializes the oblivious binary environment of `config`.
pub fn binary_episode(config: &RunConfig) -> Result<Episode> {
    let (n, t) = (config.n, config.t);
    let env_seed = derive_seed(config.seed, ENV_STREAM);
    let episode = match &config.env {
        EnvSpec::Replay(path) => {
            let episode = parse_replay(&fs::read_to_string(path)?)?;
            if config.mode == Mode::BinaryFixedC {
                let c = episode.rounds().first().map_or(config.c, |r| r.cost);
                if episode.rounds().iter().any(|r| r.cost != c) {
                    return Err(Error::Config {
                        field: "mode",
                        msg: "replayed costs vary; use binary-changing-c or adaptive".into(),
                    });
                }
            }
            return Ok(episode);
        }
        EnvSpec::Iid => {
            let costs = build_costs(&config.cost_spec(), t, config.seed)?;
            let mut env =
                iid_env(n, t, &config.expert_rates(), config.bias, env_seed)?.with_costs(costs)?;
            Episode::collect(&mut env)?
        }
        EnvSpec::Bernoulli(p) => {
            let costs = build_costs(&config.cost_spec(), t, config.seed)?;
            let mut rng = stream(config.seed, ENV_STREAM);
            let losses: Vec<Vec<u8>> = (0..t)
                .map(|_| (0..n).map(|_| rng.gen_bool(*p) as u8).collect())
                .collect();
            Episode::from_loss_matrix(&losses, &costs)?
        }
        EnvSpec::Alternating => {
            let costs = build_costs(&config.cost_spec(), t, config.seed)?;
            let advice = Advice::new((0..n).map(|i| (i % 2) as u8).collect())?;
            let rounds = costs
                .costs()
                .iter()
                .enumerate()
                .map(|(i, &cost)| Round {
                    advice: advice.clone(),
                    outcome: Outcome::new((i % 2) as u8).expect("0 or 1"),
                    cost,
                })
                .collect();
            Episode::new(n, rounds)?
        }
        EnvSpec::Adversary => {
            return Err(Error::Config {
                field: "env",
                msg: "the adversary is reactive and has no fixed episode".into(),
            })
        }
    };
    Ok(episode)
}

/// Fixed learning rate chosen by `policy`.
pub fn fixed_eta(policy: EtaPolicy, mode: Mode, n: usize, costs: &CostSchedule) -> Result<f64> {
    let horizon = costs.len();
    match policy {
        EtaPolicy::Explicit(eta) => Ok(eta),
        EtaPolicy::Tuned if mode == Mode::BinaryChangingC => {
            if n < 2 {
                Ok(1.0)
            } else {
                Ok(optimal_bound(costs, n)?.eta_star)
            }
        }
        EtaPolicy::Tuned => Ok(tuned_eta(n, horizon, costs.costs()[0])),
        EtaPolicy::Tsybakov(alpha) => {
            if n < 2 {
                return Err(Error::Config {
                    field: "eta",
                    msg: "the margin-tuned rate needs at least two experts".into(),
                });
            }
            Ok(tsybakov_eta(n, horizon, alpha))
        }
        EtaPolicy::Adaptive => Err(Error::Config {
            field: "eta",
            msg: "adaptive rates are not a fixed rate".into(),
        }),
    }
}

enum Learner {
    Fixed(ForecasterState),
    Adaptive(AdaptiveState),
}

impl Learner {
    fn new(config: &RunConfig, n: usize, costs: &CostSchedule) -> Result<Self> {
        Ok(match config.eta_policy() {
            EtaPolicy::Adaptive => Learner::Adaptive(AdaptiveState::new(n)?),
            policy => Learner::Fixed(ForecasterState::new(
                n,
                fixed_eta(policy, config.mode, n, costs)?,
            )?),
        })
    }

    fn eta(&self) -> f64 {
        match self {
            Learner::Fixed(s) => s.eta(),
            Learner::Adaptive(s) => s.eta(),
        }
    }

    fn predict(&self, advice: &Advice) -> Result<Prediction> {
        match self {
            Learner::Fixed(s) => s.predict(advice),
            Learner::Adaptive(s) => s.predict(advice),
        }
    }

    /// Returns the counter after the round (0 for fixed rates).
    fn finish(&mut self, advice: &Advice, y: Outcome, c: f64) -> Result<u64> {
        match self {
            Learner::Fixed(s) => {
                s.update(advice, y)?;
                Ok(0)
            }
            Learner::Adaptive(s) => {
                s.finish_round(advice, y, c)?;
                Ok(s.d())
            }
        }
    }
}

fn binary_row(
    t: usize,
    prediction: &Prediction,
    decision: Decision,
    advice: &Advice,
    y: Outcome,
    c: f64,
    eta: f64,
) -> Result<TraceRow> {
    let stats = prediction.settle(advice, y, c, eta, decision)?;
    Ok(TraceRow {
        t,
        p_t: prediction.policy.p,
        alpha_t: prediction.policy.alpha,
        decision: decision.symbol().into(),
        y_t: y.label() as usize,
        c_t: c,
        r_t: stats.r,
        mix_loss: stats.mix_loss,
        expected_loss: stats.expected_loss,
        eta_t: eta,
        d_t: 0,
    })
}

/// Realized cumulative losses of `runs` independent replays of the policies.
fn sampled_losses(seed: u64, runs: usize, rounds: &[(DecisionPolicy, Outcome, f64)]) -> Vec<f64> {
    use rayon::prelude::*;
    (0..runs)
        .into_par_iter()
        .map(|m| {
            let mut rng = stream(seed, SAMPLED_STREAM_BASE + m as u64);
            rounds
                .iter()
                .map(|(policy, y, c)| sample_decision(policy, &mut rng).loss(*y, *c))
                .sum()
        })
        .collect()
}

fn run_episode(
    config: &RunConfig,
    episode: &Episode,
    extra: Option<LittlestoneInfo>,
) -> Result<RunOutput> {
    let n = episode.n_experts();
    let costs = episode.costs()?;
    let mut learner = Learner::new(config, n, &costs)?;
    let mut rng = stream(config.seed, DECISION_STREAM);
    let mut rows = Vec::with_capacity(episode.horizon());
    let mut played = Vec::with_capacity(episode.horizon());
    for (t, round) in episode.rounds().iter().enumerate() {
        let prediction = learner.predict(&round.advice)?;
        let decision = sample_decision(&prediction.policy, &mut rng);
        let eta = learner.eta();
        let mut row = binary_row(
            t + 1,
            &prediction,
            decision,
            &round.advice,
            round.outcome,
            round.cost,
            eta,
        )?;
        row.d_t = learner.finish(&round.advice, round.outcome, round.cost)?;
        rows.push(row);
        played.push((prediction.policy, round.outcome, round.cost));
    }
    let realized = match config.expectation {
        Expectation::Exact => None,
        Expectation::Sampled(m) => Some(sampled_losses(config.seed, m, &played)),
    };
    let ctx = BoundContext {
        mode: config.mode,
        eta_policy: config.eta_policy(),
        n_experts: n,
        ldim: extra.map(|e| e.ldim),
        best_hypothesis_loss: extra.map(|e| e.best_hypothesis_loss),
    };
    let report = RegretReport::from_trace(
        &ctx,
        config.seed,
        &rows,
        episode.expert_losses(),
        realized.as_deref(),
    )?;
    Ok(RunOutput {
        report,
        trace: rows,
        env_text: write_replay(episode),
    })
}

fn run_adversary(config: &RunConfig) -> Result<RunOutput> {
    let mut env = ContrarianAdversary::new(config.c, config.t)?;
    let costs = CostSchedule::constant(config.c, config.t)?;
    let mut learner = Learner::new(config, 2, &costs)?;
    let mut rng = stream(config.seed, DECISION_STREAM);
    let mut rounds = Vec::with_capacity(config.t);
    let mut rows = Vec::with_capacity(config.t);
    let mut played = Vec::with_capacity(config.t);
    while let Some((advice, c)) = env.open_round()? {
        let prediction = learner.predict(&advice)?;
        let y = env.reveal(&ActionDistribution::from_policy(&prediction.policy))?;
        let decision = sample_decision(&prediction.policy, &mut rng);
        let eta = learner.eta();
        let mut row = binary_row(rows.len() + 1, &prediction, decision, &advice, y, c, eta)?;
        row.d_t = learner.finish(&advice, y, c)?;
        rows.push(row);
        played.push((prediction.policy, y, c));
        rounds.push(Round {
            advice,
            outcome: y,
            cost: c,
        });
    }
    let episode = Episode::new(2, rounds)?;
    let Expectation::Sampled(m) = config.expectation else {
        unreachable!("validated: reactive runs are sampled")
    };
    let realized = sampled_losses(config.seed, m, &played);
    let ctx = BoundContext {
        mode: config.mode,
        eta_policy: config.eta_policy(),
        n_experts: 2,
        ldim: None,
        best_hypothesis_loss: None,
    };
    let report = RegretReport::from_trace(
        &ctx,
        config.seed,
        &rows,
        episode.expert_losses(),
        Some(&realized),
    )?;
    Ok(RunOutput {
        report,
        trace: rows,
        env_text: write_replay(&episode),
    })
}

fn run_multiclass(config: &RunConfig) -> Result<RunOutput> {
    let (n, k, t, c) = (config.n, config.k, config.t, config.c);
    let env = iid_class_env(
        k,
        t,
        &config.expert_rates(),
        c,
        derive_seed(config.seed, ENV_STREAM),
    )?;
    let episode = ClassEpisode::new(n, k, env.collect())?;
    let costs = CostSchedule::constant(c, t)?;
    let eta = fixed_eta(config.eta_policy(), config.mode, n, &costs)?;
    let mut learner = MulticlassForecaster::new(n, k, eta)?;
    let mut rng = stream(config.seed, DECISION_STREAM);
    let mut rows = Vec::with_capacity(t);
    let mut played: Vec<(MulticlassPolicy, usize)> = Vec::with_capacity(t);
    for (i, round) in episode.rounds().iter().enumerate() {
        let (_, policy) = learner.policy(&round.advice)?;
        let (decision, stats) = learner.step(&round.advice, round.outcome, c, &mut rng)?;
        rows.push(TraceRow {
            t: i + 1,
            p_t: policy.p_star,
            alpha_t: policy.alpha,
            decision: match decision {
                ClassDecision::Abstain => "*".into(),
                ClassDecision::Class(k) => k.to_string(),
            },
            y_t: round.outcome,
            c_t: c,
            r_t: stats.r,
            mix_loss: stats.mix_loss,
            expected_loss: stats.expected_loss,
            eta_t: eta,
            d_t: 0,
        });
        played.push((policy, round.outcome));
    }
    let realized = match config.expectation {
        Expectation::Exact => None,
        Expectation::Sampled(m) => {
            use rayon::prelude::*;
            Some(
                (0..m)
                    .into_par_iter()
                    .map(|j| {
                        let mut rng = stream(config.seed, SAMPLED_STREAM_BASE + j as u64);
                        played
                            .iter()
                            .map(|(p, y)| {
                                crate::multiclass::sample_class_decision(p, &mut rng).loss(*y, c)
                            })
                            .sum()
                    })
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let ctx = BoundContext {
        mode: config.mode,
        eta_policy: config.eta_policy(),
        n_experts: n,
        ldim: None,
        best_hypothesis_loss: None,
    };
    let report = RegretReport::from_trace(
        &ctx,
        config.seed,
        &rows,
        episode.expert_losses(),
        realized.as_deref(),
    )?;
    Ok(RunOutput {
        report,
        trace: rows,
        env_text: write_class_replay(&episode),
    })
}

#[derive(Clone, Copy, Debug)]
struct LittlestoneInfo {
    ldim: u32,
    best_hypothesis_loss: u64,
}

pub fn load_class(spec: &ClassSpec) -> Result<HypothesisClass> {
    match spec {
        ClassSpec::All(m) => HypothesisClass::all_functions(*m),
        ClassSpec::Thresholds(m) => HypothesisClass::thresholds(*m),
        ClassSpec::File(path) => HypothesisClass::parse(&fs::read_to_string(path)?),
    }
}

fn run_littlestone(config: &RunConfig) -> Result<RunOutput> {
    let class = load_class(config.class.as_ref().expect("validated"))?;
    if config.target >= class.len() {
        return Err(Error::Config {
            field: "target",
            msg: format!("class has {} hypotheses", class.len()),
        });
    }
    let t = config.t;
    let mut rng = stream(config.seed, ENV_STREAM);
    let xs: Vec<usize> = (0..t)
        .map(|_| rng.gen_range(0..class.domain_size()))
        .collect();
    let ys: Vec<u8> = xs
        .iter()
        .map(|&x| class.label(config.target, x) ^ rng.gen_bool(config.noise) as u8)
        .collect();
    let mut cover = ExpertCover::new(class.clone(), t)?;
    let advice = cover.advice(&xs)?;
    let rounds = advice
        .into_iter()
        .zip(&ys)
        .map(|(advice, &y)| {
            Ok(Round {
                advice,
                outcome: Outcome::new(y)?,
                cost: config.c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let episode = Episode::new(cover.len(), rounds)?;
    let best_hypothesis_loss = (0..class.len())
        .map(|i| {
            xs.iter()
                .zip(&ys)
                .filter(|&(&x, &y)| class.label(i, x) != y)
                .count() as u64
        })
        .min()
        .unwrap_or(0);
    let info = LittlestoneInfo {
        ldim: cover.ldim(),
        best_hypothesis_loss,
    };
    run_episode(config, &episode, Some(info))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(env: EnvSpec, t: usize) -> RunConfig {
        let mut c = RunConfig::new(Mode::BinaryFixedC, 2, t, 9);
        c.c = 0.4;
        c.env = env;
        c
    }

    #[test]
    fn alternating_constant_experts_pass() {
        let out = run(&fixed(EnvSpec::Alternating, 1000)).unwrap();
        assert!(out.report.pass);
        assert!(out.report.regret <= 2f64.ln() / 0.4 + 1e-9);
        let names: Vec<&str> = out.report.bounds.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, ["fixed_rate", "hedge", "tuned_rate"]);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut config = RunConfig::new(Mode::Adaptive, 8, 500, 3);
        config.costs = Some(CostSpec::Tsybakov {
            alpha: 0.5,
            beta: 1.0,
        });
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.report.to_toml(), b.report.to_toml());
        assert_eq!(trace_csv(&a.trace).unwrap(), trace_csv(&b.trace).unwrap());
        assert_eq!(a.env_text, b.env_text);
        assert!(a.report.pass);
        assert!(a.report.hindsight.is_some());
    }

    #[test]
    fn report_regret_matches_trace() {
        let mut config = fixed(EnvSpec::Bernoulli(0.3), 300);
        config.n = 5;
        let out = run(&config).unwrap();
        let learner: f64 = out.trace.iter().map(|r| r.expected_loss).sum();
        let best = *out.report.expert_losses.iter().min().unwrap();
        assert_eq!(out.report.regret, learner - best as f64);
        let back = RegretReport::from_toml(&out.report.to_toml()).unwrap();
        assert_eq!(back, out.report);
    }

    #[test]
    fn every_mode_runs() {
        let mut multi = RunConfig::new(Mode::Multiclass, 4, 200, 1);
        multi.k = 3;
        multi.c = 0.3;
        multi.expectation = Expectation::Sampled(20);
        let out = run(&multi).unwrap();
        assert!(out.report.pass, "{:?}", out.report.bounds);
        assert!(out.env_text.starts_with("# N=4 T=200 K=3"));

        let mut ls = RunConfig::new(Mode::Littlestone, 0, 6, 1);
        ls.class = Some(ClassSpec::All(3));
        ls.target = 5;
        let out = run(&ls).unwrap();
        assert_eq!(out.report.n_experts, 42);
        assert_eq!(out.report.ldim, Some(3));
        assert!(out.report.pass);

        let mut adv = fixed(EnvSpec::Adversary, 400);
        adv.c = 0.3;
        adv.expectation = Expectation::Sampled(50);
        let out = run(&adv).unwrap();
        assert!(out.report.pass, "{:?}", out.report.bounds);
        assert!(out.report.sampled.is_some());

        let mut changing = RunConfig::new(Mode::BinaryChangingC, 4, 300, 2);
        changing.costs = Some(CostSpec::Uniform { lo: 0.0, hi: 0.5 });
        assert!(run(&changing).unwrap().report.pass);
    }

    #[test]
    fn cost_file_round_trip() {
        let costs = build_costs(&CostSpec::Uniform { lo: 0.1, hi: 0.4 }, 20, 5).unwrap();
        assert_eq!(parse_costs(&write_costs(&costs)).unwrap(), costs);
        assert!(matches!(
            parse_costs("0.1\n0.9\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
