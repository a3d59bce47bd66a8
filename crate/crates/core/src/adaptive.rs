//! Time-varying abstention costs.
//!
//! When the cost `c_t` changes every round, a single learning rate cannot be
//! tuned in advance. [`AdaptiveState`] starts at `eta = 1` and counts the rounds
//! in which the current rate was too large for the round's cost
//! (`eta_t >= 2 (1 - 2 c_t)`); after `d` such rounds the rate becomes
//! `min(sqrt(ln N / d), 1)`. Its regret is within a constant factor of the best
//! fixed-rate bound chosen in hindsight, computed exactly by [`optimal_bound`].

use rand::Rng;

use crate::error::{check_cost, check_eta, domain, Error, Result};
use crate::forecaster::{
    sample_decision, Advice, Decision, ForecasterState, Outcome, Prediction, RoundOutcomeStats,
};

/// Per-round abstention costs `c_1..c_T`, each in `[0, 1/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSchedule {
    costs: Vec<f64>,
}

impl CostSchedule {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        for &c in &costs {
            check_cost(c)?;
        }
        Ok(CostSchedule { costs })
    }

    pub fn constant(c: f64, horizon: usize) -> Result<Self> {
        CostSchedule::new(vec![c; horizon])
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Margins `1/2 - c_t`.
    pub fn margins(&self) -> impl Iterator<Item = f64> + '_ {
        self.costs.iter().map(|c| 0.5 - c)
    }

    /// Largest rate `2 (1 - 2 c_t)` for which round `t` is mixable.
    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.costs.iter().map(|&c| mixable_threshold(c))
    }
}

/// `2 (1 - 2c)`.
pub fn mixable_threshold(c: f64) -> f64 {
    2.0 * (1.0 - 2.0 * c)
}

/// Exponential weights with the mixability-violation counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveState {
    inner: ForecasterState,
    d: u64,
}

impl AdaptiveState {
    /// Needs `n >= 2`: with one expert `ln N = 0` and the rate schedule degenerates.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Shape {
                expected: 2,
                got: n,
            });
        }
        Ok(AdaptiveState {
            inner: ForecasterState::new(n, 1.0)?,
            d: 1,
        })
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }

    /// Counter value; starts at 1.
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn cum_losses(&self) -> &[u64] {
        self.inner.cum_losses()
    }

    pub fn round(&self) -> u64 {
        self.inner.round()
    }

    pub fn n_experts(&self) -> usize {
        self.inner.n_experts()
    }

    pub fn predict(&self, advice: &Advice) -> Result<Prediction> {
        self.inner.predict(advice)
    }

    /// Reveals `y` and `c_t`, bumps the counter and resets the rate.
    /// Returns whether the counter moved.
    pub fn finish_round(&mut self, advice: &Advice, y: Outcome, c: f64) -> Result<bool> {
        check_cost(c)?;
        self.inner.update(advice, y)?;
        let bumped = self.inner.eta() >= mixable_threshold(c);
        if bumped {
            self.d += 1;
        }
        let ln_n = (self.n_experts() as f64).ln();
        self.inner.set_eta((ln_n / self.d as f64).sqrt().min(1.0));
        Ok(bumped)
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        advice: &Advice,
        y: Outcome,
        c: f64,
        rng: &mut R,
    ) -> Result<(Decision, RoundOutcomeStats)> {
        check_cost(c)?;
        let prediction = self.predict(advice)?;
        let decision = sample_decision(&prediction.policy, rng);
        let stats = prediction.settle(advice, y, c, self.eta(), decision)?;
        self.finish_round(advice, y, c)?;
        Ok((decision, stats))
    }
}

/// Pure form of [`AdaptiveState::step`].
pub fn adaptive_step<R: Rng + ?Sized>(
    state: &AdaptiveState,
    advice: &Advice,
    y: Outcome,
    c: f64,
    rng: &mut R,
) -> Result<(Decision, RoundOutcomeStats, AdaptiveState)> {
    let mut next = state.clone();
    let (decision, stats) = next.step(advice, y, c, rng)?;
    Ok((decision, stats, next))
}

/// Rounds with `2 (1 - 2 c_t) <= eta`.
pub fn tau(eta: f64, costs: &CostSchedule) -> usize {
    costs.thresholds().filter(|&b| b <= eta).count()
}

/// Rounds with `2 (1 - 2 c_t) < eta`.
pub fn strict_count(eta: f64, costs: &CostSchedule) -> usize {
    costs.thresholds().filter(|&b| b < eta).count()
}

/// `ln N / eta + eta * tau(eta) / 8`.
pub fn bound_b(eta: f64, costs: &CostSchedule, n: usize) -> Result<f64> {
    check_eta(eta)?;
    Ok((n as f64).ln() / eta + eta * tau(eta, costs) as f64 / 8.0)
}

/// Regret bound of the fixed-rate forecaster under changing costs:
/// `ln N / eta + (eta / 8) #{t : 2 (1 - 2 c_t) < eta}`.
pub fn fixed_rate_bound(eta: f64, costs: &CostSchedule, n: usize) -> Result<f64> {
    check_eta(eta)?;
    Ok((n as f64).ln() / eta + eta * strict_count(eta, costs) as f64 / 8.0)
}

/// Minimizer of [`fixed_rate_bound`] over `eta > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalBound {
    pub eta_star: f64,
    /// Minimum value, counting with strict `<`.
    pub r_star: f64,
    /// [`bound_b`] at `eta_star`; differs from `r_star` only when the
    /// minimizer sits exactly on a threshold.
    pub r_star_nonstrict: f64,
}

/// Exact minimization of the piecewise bound.
///
/// Between consecutive distinct thresholds the strict count is constant, so
/// the bound is `ln N / eta + eta j / 8` on a left-open interval; its minimum
/// is the stationary point `sqrt(8 ln N / j)` clipped to the interval.
pub fn optimal_bound(costs: &CostSchedule, n: usize) -> Result<OptimalBound> {
    if n < 2 {
        return Err(Error::Shape {
            expected: 2,
            got: n,
        });
    }
    let ln_n = (n as f64).ln();
    let mut sorted: Vec<f64> = costs.thresholds().collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();

    let value = |eta: f64, count: usize| ln_n / eta + eta * count as f64 / 8.0;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |eta: f64, count: usize| {
        let v = value(eta, count);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((eta, v));
        }
    };

    // (0, v_1]: count is zero and the bound decreases in eta.
    if distinct[0] > 0.0 {
        consider(distinct[0], 0);
    }
    for (j, &lo) in distinct.iter().enumerate() {
        let hi = distinct.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let count = sorted.partition_point(|&b| b <= lo);
        let stationary = (8.0 * ln_n / count as f64).sqrt();
        // At or below `lo` the previous piece is strictly smaller.
        if stationary > lo {
            consider(stationary.min(hi), count);
        }
    }
    let (eta_star, r_star) = best.expect("at least one piece is nonempty");
    Ok(OptimalBound {
        eta_star,
        r_star,
        r_star_nonstrict: bound_b(eta_star, costs, n)?,
    })
}

/// Regret guarantee of [`AdaptiveState`]: `(15/8) R* + (5/4) sqrt(ln N)`.
pub fn adaptive_regret_bound(costs: &CostSchedule, n: usize) -> Result<f64> {
    let opt = optimal_bound(costs, n)?;
    Ok(15.0 / 8.0 * opt.r_star + 1.25 * (n as f64).ln().sqrt())
}

/// Margin-condition parameters: the fraction of rounds with margin below `x`
/// is at most `beta * x^(alpha / (1 - alpha))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsybakovParams {
    alpha: f64,
    beta: f64,
}

impl TsybakovParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(domain("margin exponent alpha", alpha));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain("margin constant beta", beta));
        }
        Ok(TsybakovParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha / (1 - alpha)`.
    pub fn exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// Growth exponent of the regret in `T`: `(1 - alpha) / (2 - alpha)`.
    pub fn rate_exponent(&self) -> f64 {
        (1.0 - self.alpha) / (2.0 - self.alpha)
    }
}

/// `(ln N / T)^((1 - alpha) / (2 - alpha))`.
pub fn tsybakov_eta(n: usize, horizon: usize, alpha: f64) -> f64 {
    let ratio = (n.max(1) as f64).ln() / horizon.max(1) as f64;
    ratio.powf((1.0 - alpha) / (2.0 - alpha))
}
