//! Numerical property suites and the standalone trace checker.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::config::Mode;
use super::report::{evaluate_bounds, BoundContext, RegretReport, TraceRow, BOUND_TOLERANCE};
use crate::adaptive::{AdaptiveState, CostSchedule};
use crate::environments::{parse_class_replay, parse_replay};
use crate::error::{Error, Result};
use crate::forecaster::{f_function, g_function, mix_loss, Advice, ForecasterState, Outcome};
use crate::littlestone::{cover_size_bound, ExpertCover, HypothesisClass};
use crate::multiclass::{ClassAdvice, MulticlassForecaster};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// `g <= f` on an `r` grid and the end-point derivative conditions.
    Mixability,
    /// Cumulative mix loss against the best expert plus `ln N / eta`.
    MixRegret,
    /// Per-round Hoeffding gap and `g(r) <= r`.
    Hoeffding,
    /// Per-round gap and counter chain of the adaptive rates.
    AdaptiveGap,
    /// Per-round dominance for K-class runs.
    Multiclass,
    /// Exhaustive coverage of small expert covers.
    Cover,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Mixability,
        Suite::MixRegret,
        Suite::Hoeffding,
        Suite::AdaptiveGap,
        Suite::Multiclass,
        Suite::Cover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Mixability => "mixability",
            Suite::MixRegret => "mixregret",
            Suite::Hoeffding => "hoeffding",
            Suite::AdaptiveGap => "adaptive-gap",
            Suite::Multiclass => "multiclass",
            Suite::Cover => "cover",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Config {
                field: "suite",
                msg: format!("unknown suite `{s}`"),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Rates are `eta_factor * (1 - 2c)`. The default 2 is the largest rate
    /// the dominance argument claims; larger values show the failure mode.
    pub eta_factor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            eta_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub checks: usize,
    /// Largest `lhs - rhs` over the suite's headline inequality (`g - f` for
    /// mixability).
    pub max_violation: f64,
    /// The first failing check; absent when the suite passes.
    pub witness: Option<String>,
}

/// Accumulates `lhs <= rhs + tol` checks.
struct Tracker {
    name: String,
    checks: usize,
    max_excess: f64,
    failed: Option<String>,
}

impl Tracker {
    fn new(name: &str) -> Self {
        Tracker {
            name: name.into(),
            checks: 0,
            max_excess: f64::NEG_INFINITY,
            failed: None,
        }
    }

    fn check(&mut self, lhs: f64, rhs: f64, tol: f64, witness: impl FnOnce() -> String) {
        self.max_excess = self.max_excess.max(lhs - rhs);
        self.check_aux(lhs, rhs, tol, witness);
    }

    /// Counts toward pass/fail but not toward `max_violation`.
    fn check_aux(&mut self, lhs: f64, rhs: f64, tol: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        let within = lhs - rhs <= tol;
        if !within && self.failed.is_none() {
            self.failed = Some(witness());
        }
    }

    fn finish(self) -> SuiteResult {
        let pass = self.failed.is_none();
        SuiteResult {
            name: self.name,
            pass,
            checks: self.checks,
            max_violation: self.max_excess,
            witness: self.failed,
        }
    }
}

pub fn verify_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteResult> {
    match suite {
        Suite::Mixability => mixability(opts),
        Suite::MixRegret => mix_regret(opts),
        Suite::Hoeffding => hoeffding(opts),
        Suite::AdaptiveGap => adaptive_gap(opts),
        Suite::Multiclass => multiclass(opts),
        Suite::Cover => cover(),
    }
}

pub fn verify_all(opts: &VerifyOptions) -> Result<Vec<SuiteResult>> {
    Suite::ALL.iter().map(|&s| verify_suite(s, opts)).collect()
}

fn costs_grid() -> impl Iterator<Item = f64> {
    (0..10).map(|i| i as f64 * 0.05)
}

fn mixability(opts: &VerifyOptions) -> Result<SuiteResult> {
    let mut tr = Tracker::new("mixability");
    let h = 1e-6;
    for c in costs_grid() {
        let eta = opts.eta_factor * (1.0 - 2.0 * c);
        for i in 0..10_000 {
            let r = i as f64 / 9_999.0;
            let (g, f) = (g_function(r, c)?, f_function(r, eta)?);
            tr.check(g, f, 1e-12, || {
                format!("c={c} eta={eta} r={r}: g={g} f={f}")
            });
        }
        for j in 1..=1000 {
            let e = eta * j as f64 / 1000.0;
            let lo = -(-e).exp_m1() / e;
            let hi = e.exp_m1() / e;
            tr.check_aux(2.0 * c, lo, 1e-12, || {
                format!("c={c} eta={e}: (1-e^-eta)/eta={lo} < 2c")
            });
            tr.check_aux(hi, 2.0 * (1.0 - c), 1e-12, || {
                format!("c={c} eta={e}: (e^eta-1)/eta={hi} > 2(1-c)")
            });
        }
        // One-sided finite differences against the closed-form slopes.
        let fd = [
            (
                (f_function(h, eta)? - f_function(0.0, eta)?) / h,
                -(-eta).exp_m1() / eta,
                "f'(0)",
            ),
            (
                (f_function(1.0, eta)? - f_function(1.0 - h, eta)?) / h,
                eta.exp_m1() / eta,
                "f'(1)",
            ),
            (
                (g_function(h, c)? - g_function(0.0, c)?) / h,
                2.0 * c,
                "g'(0)",
            ),
            (
                (g_function(1.0, c)? - g_function(1.0 - h, c)?) / h,
                2.0 * (1.0 - c),
                "g'(1)",
            ),
        ];
        for (numeric, exact, what) in fd {
            tr.check_aux((numeric - exact).abs(), 0.0, 1e-5, || {
                format!("c={c} eta={eta}: {what} numeric {numeric} vs {exact}")
            });
        }
    }
    Ok(tr.finish())
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize, t: usize) -> Vec<Vec<u8>> {
    let density: f64 = rng.gen();
    (0..t)
        .map(|_| (0..n).map(|_| rng.gen_bool(density) as u8).collect())
        .collect()
}

fn mix_regret(opts: &VerifyOptions) -> Result<SuiteResult> {
    let mut tr = Tracker::new("mixregret");
    let mut rng = stream(opts.seed, 0x5EED_0001);
    for m in 0..200 {
        let n = rng.gen_range(1..=32);
        let t = rng.gen_range(1..=500);
        let matrix = random_matrix(&mut rng, n, t);
        for eta in [0.1, 0.5, 1.0] {
            let mut state = ForecasterState::new(n, eta)?;
            let mut total = 0.0;
            for row in &matrix {
                total += mix_loss(&state.posterior(), row, eta)?;
                state.charge(row)?;
            }
            let best = *state.cum_losses().iter().min().expect("n >= 1") as f64;
            let bound = best + (n as f64).ln() / eta;
            tr.check(total, bound, 1e-9, || {
                format!("matrix {m} (N={n}, T={t}) eta={eta}: mix {total} > {bound}")
            });
        }
    }
    Ok(tr.finish())
}

fn hoeffding(opts: &VerifyOptions) -> Result<SuiteResult> {
    let mut tr = Tracker::new("hoeffding");
    let mut rng = stream(opts.seed, 0x5EED_0002);
    for m in 0..100 {
        let n = rng.gen_range(1..=32);
        let t = rng.gen_range(1..=300);
        let eta = rng.gen_range(0.01..3.0);
        let c = rng.gen_range(0.0..=0.5);
        let matrix = random_matrix(&mut rng, n, t);
        let mut state = ForecasterState::new(n, eta)?;
        for (round, row) in matrix.iter().enumerate() {
            let post = state.posterior();
            let r: f64 = post
                .probs()
                .iter()
                .zip(row)
                .map(|(q, &l)| q * l as f64)
                .sum();
            let mix = mix_loss(&post, row, eta)?;
            tr.check(r, mix + eta / 8.0, 1e-12, || {
                format!("matrix {m} round {round}: avg loss {r} > mix {mix} + eta/8")
            });
            let r = r.clamp(0.0, 1.0);
            let g = g_function(r, c)?;
            tr.check(g, r, 1e-12, || format!("c={c} r={r}: g={g} > r"));
            state.charge(row)?;
        }
    }
    Ok(tr.finish())
}

fn adaptive_gap(opts: &VerifyOptions) -> Result<SuiteResult> {
    let mut tr = Tracker::new("adaptive-gap");
    let mut rng = stream(opts.seed, 0x5EED_0003);
    for m in 0..50 {
        let n = rng.gen_range(2..=16);
        let t = rng.gen_range(1..=1000);
        let lo = rng.gen_range(0.0..=0.5);
        let costs: Vec<f64> = (0..t).map(|_| rng.gen_range(lo..=0.5)).collect();
        let schedule = CostSchedule::new(costs.clone())?;
        let matrix = random_matrix(&mut rng, n, t);
        let mut state = AdaptiveState::new(n)?;
        let mut chain = 0.0;
        for (round, (row, &c)) in matrix.iter().zip(&costs).enumerate() {
            let advice = Advice::new(row.clone())?;
            let eta = state.eta();
            let prediction = state.predict(&advice)?;
            let stats = prediction.settle(
                &advice,
                Outcome::ZERO,
                c,
                eta,
                crate::forecaster::Decision::Abstain,
            )?;
            let allowance = if 2.0 * (1.0 - 2.0 * c) < eta {
                eta / 8.0
            } else {
                0.0
            };
            let gap = stats.expected_loss - stats.mix_loss;
            tr.check(gap, allowance, 1e-12, || {
                format!("schedule {m} round {round}: c={c} eta={eta} gap {gap} > {allowance}")
            });
            if state.finish_round(&advice, Outcome::ZERO, c)? {
                chain += eta / 8.0;
            }
        }
        let ln_n = (n as f64).ln();
        let cap = 0.25 * (state.d() as f64 * ln_n).sqrt();
        tr.check(chain, cap, 1e-12, || {
            format!(
                "schedule {m}: counter chain {chain} > {cap} (d={})",
                state.d()
            )
        });
        let _ = schedule;
    }
    Ok(tr.finish())
}

fn multiclass(opts: &VerifyOptions) -> Result<SuiteResult> {
    let mut tr = Tracker::new("multiclass");
    let mut rng = stream(opts.seed, 0x5EED_0004);
    for m in 0..20 {
        let k = rng.gen_range(2..=6);
        let n = rng.gen_range(2..=32);
        let c = [0.1, 0.2, 0.25, 0.3, 0.4, 0.45][rng.gen_range(0..6)];
        let eta = opts.eta_factor * (1.0 - 2.0 * c);
        let mut learner = MulticlassForecaster::new(n, k, eta)?;
        for round in 0..1000 {
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let y = rng.gen_range(0..k);
            let (_, stats) = learner.step(&ClassAdvice::new(labels, k)?, y, c, &mut rng)?;
            let (e, mix, r) = (stats.expected_loss, stats.mix_loss, stats.r);
            tr.check(e, mix, 1e-12, || {
                format!(
                    "run {m} (K={k}, N={n}, c={c}) round {round}: r={r} expected {e} > mix {mix}"
                )
            });
            let case = r + (2.0 * c - 1.0) * r.min(1.0 - r);
            tr.check(e, case, 1e-12, || {
                format!("run {m} round {round}: expected {e} > case bound {case}")
            });
        }
    }
    Ok(tr.finish())
}

fn cover() -> Result<SuiteResult> {
    let mut tr = Tracker::new("cover");
    for (m, t) in [(2usize, 4usize), (3, 6)] {
        let class = HypothesisClass::all_functions(m)?;
        let mut cover = ExpertCover::new(class.clone(), t)?;
        let bound = cover_size_bound(t, cover.ldim()) as f64;
        tr.check(cover.len() as f64, bound, 0.0, || {
            format!("m={m} T={t}: {} experts > {bound}", cover.len())
        });
        for code in 0..m.pow(t as u32) {
            let xs: Vec<usize> = (0..t).map(|i| (code / m.pow(i as u32)) % m).collect();
            let preds = (0..cover.len())
                .map(|i| cover.expert_predictions(i, &xs))
                .collect::<Result<Vec<_>>>()?;
            for h in 0..class.len() {
                let target: Vec<u8> = xs.iter().map(|&x| class.label(h, x)).collect();
                let missing = !preds.contains(&target) as u8 as f64;
                tr.check(missing, 0.0, 0.0, || {
                    format!("m={m} T={t}: no expert follows hypothesis {h} on {xs:?}")
                });
            }
        }
    }
    Ok(tr.finish())
}

/// Recomputes a run from its trace and episode file and compares every
/// per-round quantity, the expert totals and each bound line of the report.
pub fn check_trace(
    report: &RegretReport,
    trace: &[TraceRow],
    env_text: &str,
) -> Result<SuiteResult> {
    let mut tr = Tracker::new("trace");
    let expert_losses = if report.mode == Mode::Multiclass {
        recheck_multiclass(&mut tr, trace, env_text)?
    } else {
        recheck_binary(&mut tr, report.mode, trace, env_text)?
    };
    for (i, (a, b)) in expert_losses.iter().zip(&report.expert_losses).enumerate() {
        tr.check((*a as f64 - *b as f64).abs(), 0.0, 0.0, || {
            format!("expert {i}: episode loss {a}, report says {b}")
        });
    }
    tr.check(
        (expert_losses.len() as f64 - report.expert_losses.len() as f64).abs(),
        0.0,
        0.0,
        || "expert count differs from report".into(),
    );
    let learner: f64 = trace.iter().map(|r| r.expected_loss).sum();
    let best = expert_losses.iter().copied().min().unwrap_or(0);
    let regret = learner - best as f64;
    tr.check((regret - report.regret).abs(), 0.0, 1e-9, || {
        format!("regret {regret}, report says {}", report.regret)
    });

    let ctx = BoundContext {
        mode: report.mode,
        eta_policy: report.eta_policy,
        n_experts: expert_losses.len(),
        ldim: report.ldim,
        best_hypothesis_loss: report.best_hypothesis_loss,
    };
    if report.mode == Mode::Littlestone {
        // The cover contains an expert for every hypothesis.
        let h = report.best_hypothesis_loss.unwrap_or(0) as f64;
        tr.check(best as f64, h, 0.0, || {
            format!("best cover expert loss {best} above best hypothesis loss {h}")
        });
    }
    let (bounds, _) = evaluate_bounds(&ctx, trace, &expert_losses)?;
    for b in &bounds {
        match report.bounds.iter().find(|r| r.name == b.name) {
            Some(r) => {
                tr.check((b.value - r.value).abs(), 0.0, 1e-9, || {
                    format!(
                        "bound {}: recomputed {}, report says {}",
                        b.name, b.value, r.value
                    )
                });
                tr.check((b.pass != r.pass) as u8 as f64, 0.0, 0.0, || {
                    format!(
                        "bound {}: recomputed pass={}, report says {}",
                        b.name, b.pass, r.pass
                    )
                });
            }
            None => tr.check(1.0, 0.0, 0.0, || {
                format!("bound {} missing from report", b.name)
            }),
        }
    }
    for r in report
        .bounds
        .iter()
        .filter(|r| !r.name.ends_with("/sampled"))
    {
        let present = bounds.iter().any(|b| b.name == r.name);
        tr.check(!present as u8 as f64, 0.0, 0.0, || {
            format!("report lists unknown bound {}", r.name)
        });
    }
    if let Some(s) = &report.sampled {
        for r in report
            .bounds
            .iter()
            .filter(|r| r.name.ends_with("/sampled"))
        {
            let pass = s.mean_regret - s.ci_half_width <= r.value + BOUND_TOLERANCE;
            tr.check((pass != r.pass) as u8 as f64, 0.0, 0.0, || {
                format!(
                    "bound {}: recomputed pass={pass}, report says {}",
                    r.name, r.pass
                )
            });
        }
    }
    let pass = report.bounds.iter().all(|b| b.pass);
    tr.check((pass != report.pass) as u8 as f64, 0.0, 0.0, || {
        format!("overall pass recomputes to {pass}")
    });
    Ok(tr.finish())
}

fn close(tr: &mut Tracker, t: usize, what: &str, got: f64, want: f64) {
    tr.check((got - want).abs(), 0.0, 1e-12, || {
        format!("round {t}: {what} is {got} in the trace, recomputed {want}")
    });
}

fn recheck_binary(
    tr: &mut Tracker,
    mode: Mode,
    trace: &[TraceRow],
    env_text: &str,
) -> Result<Vec<u64>> {
    let episode = parse_replay(env_text)?;
    tr.check(
        (trace.len() as f64 - episode.horizon() as f64).abs(),
        0.0,
        0.0,
        || {
            format!(
                "trace has {} rows, episode {} rounds",
                trace.len(),
                episode.horizon()
            )
        },
    );
    let n = episode.n_experts();
    let first_eta = trace.first().map_or(1.0, |r| r.eta_t);
    let mut fixed = ForecasterState::new(n, first_eta)?;
    let mut adaptive = if mode == Mode::Adaptive {
        Some(AdaptiveState::new(n)?)
    } else {
        None
    };
    for (row, round) in trace.iter().zip(episode.rounds()) {
        let t = row.t;
        let (prediction, eta) = match &adaptive {
            Some(s) => (s.predict(&round.advice)?, s.eta()),
            None => (fixed.predict(&round.advice)?, fixed.eta()),
        };
        let stats = prediction.settle(
            &round.advice,
            round.outcome,
            round.cost,
            eta,
            crate::forecaster::Decision::Abstain,
        )?;
        close(tr, t, "eta_t", row.eta_t, eta);
        close(tr, t, "p_t", row.p_t, prediction.policy.p);
        close(tr, t, "alpha_t", row.alpha_t, prediction.policy.alpha);
        close(tr, t, "r_t", row.r_t, stats.r);
        close(tr, t, "mix_loss", row.mix_loss, stats.mix_loss);
        close(
            tr,
            t,
            "expected_loss",
            row.expected_loss,
            stats.expected_loss,
        );
        close(tr, t, "y_t", row.y_t as f64, round.outcome.label() as f64);
        close(tr, t, "c_t", row.c_t, round.cost);
        match &mut adaptive {
            Some(s) => {
                s.finish_round(&round.advice, round.outcome, round.cost)?;
                close(tr, t, "d_t", row.d_t as f64, s.d() as f64);
            }
            None => {
                fixed.update(&round.advice, round.outcome)?;
            }
        }
    }
    Ok(episode.expert_losses())
}

fn recheck_multiclass(tr: &mut Tracker, trace: &[TraceRow], env_text: &str) -> Result<Vec<u64>> {
    let episode = parse_class_replay(env_text)?;
    tr.check(
        (trace.len() as f64 - episode.horizon() as f64).abs(),
        0.0,
        0.0,
        || {
            format!(
                "trace has {} rows, episode {} rounds",
                trace.len(),
                episode.horizon()
            )
        },
    );
    let eta = trace.first().map_or(1.0, |r| r.eta_t);
    let mut learner = MulticlassForecaster::new(episode.n_experts(), episode.k(), eta)?;
    let mut rng = stream(0, 0);
    for (row, round) in trace.iter().zip(episode.rounds()) {
        let (_, policy) = learner.policy(&round.advice)?;
        let (_, stats) = learner.step(&round.advice, round.outcome, round.cost, &mut rng)?;
        let t = row.t;
        close(tr, t, "eta_t", row.eta_t, eta);
        close(tr, t, "p_t", row.p_t, policy.p_star);
        close(tr, t, "alpha_t", row.alpha_t, policy.alpha);
        close(tr, t, "r_t", row.r_t, stats.r);
        close(tr, t, "mix_loss", row.mix_loss, stats.mix_loss);
        close(
            tr,
            t,
            "expected_loss",
            row.expected_loss,
            stats.expected_loss,
        );
        close(tr, t, "y_t", row.y_t as f64, round.outcome as f64);
        close(tr, t, "c_t", row.c_t, round.cost);
    }
    Ok(episode.expert_losses())
}
