//! K-class prediction with abstention.
//!
//! Classes are indexed `0..k`. The forecaster aggregates the posterior into a
//! class distribution, abstains with probability `min(2 (1 - p*), 1)` and
//! otherwise outputs the most likely class (lowest index on ties). When no
//! class carries more than half the mass it abstains surely.

use rand::Rng;

use crate::error::{check_cost, domain, Error, Result};
use crate::forecaster::{mix_loss, ForecasterState, Posterior, RoundOutcomeStats};

/// Class predictions of the `N` experts for one round.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassAdvice {
    labels: Vec<usize>,
    k: usize,
}

impl ClassAdvice {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(domain("number of classes", k as f64));
        }
        if labels.is_empty() {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= k) {
            return Err(domain("class label", l as f64));
        }
        Ok(ClassAdvice { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Aggregated probability of each class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MulticlassPolicy {
    pub p_star: f64,
    pub k_star: usize,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassDecision {
    Class(usize),
    Abstain,
}

impl ClassDecision {
    pub fn loss(self, y: usize, c: f64) -> f64 {
        match self {
            ClassDecision::Abstain => c,
            ClassDecision::Class(k) => (k != y) as u8 as f64,
        }
    }
}

pub fn class_distribution(post: &Posterior, advice: &ClassAdvice) -> Result<ClassDistribution> {
    if post.len() != advice.len() {
        return Err(Error::Shape {
            expected: post.len(),
            got: advice.len(),
        });
    }
    let labels = advice.labels();
    let probs = (0..advice.k())
        .map(|k| post.mass_where(|i| labels[i] == k))
        .collect();
    Ok(ClassDistribution { probs })
}

pub fn multiclass_policy(dist: &ClassDistribution) -> MulticlassPolicy {
    let (k_star, p_star) =
        dist.probs
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bp), (k, p)| {
                if p > bp {
                    (k, p)
                } else {
                    (bk, bp)
                }
            });
    let alpha = (2.0 * (1.0 - p_star)).clamp(0.0, 1.0);
    MulticlassPolicy {
        p_star,
        k_star,
        alpha,
    }
}

pub fn sample_class_decision<R: Rng + ?Sized>(
    policy: &MulticlassPolicy,
    rng: &mut R,
) -> ClassDecision {
    let u: f64 = rng.gen();
    if u < policy.alpha {
        ClassDecision::Abstain
    } else {
        ClassDecision::Class(policy.k_star)
    }
}

/// Exponential weights over experts that predict one of `k` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassForecaster {
    inner: ForecasterState,
    k: usize,
}

impl MulticlassForecaster {
    pub fn new(n: usize, k: usize, eta: f64) -> Result<Self> {
        if k < 2 {
            return Err(domain("number of classes", k as f64));
        }
        Ok(MulticlassForecaster {
            inner: ForecasterState::new(n, eta)?,
            k,
        })
    }

    pub fn state(&self) -> &ForecasterState {
        &self.inner
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn policy(&self, advice: &ClassAdvice) -> Result<(ClassDistribution, MulticlassPolicy)> {
        self.check_advice(advice)?;
        let dist = class_distribution(&self.inner.posterior(), advice)?;
        let policy = multiclass_policy(&dist);
        Ok((dist, policy))
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        advice: &ClassAdvice,
        y: usize,
        c: f64,
        rng: &mut R,
    ) -> Result<(ClassDecision, RoundOutcomeStats)> {
        check_cost(c)?;
        self.check_advice(advice)?;
        if y >= self.k {
            return Err(domain("class label", y as f64));
        }
        let post = self.inner.posterior();
        let dist = class_distribution(&post, advice)?;
        let policy = multiclass_policy(&dist);
        let decision = sample_class_decision(&policy, rng);

        let losses: Vec<u8> = advice.labels().iter().map(|&l| (l != y) as u8).collect();
        let r = post.mass_where(|i| losses[i] == 1);
        let wrong = (policy.k_star != y) as u8 as f64;
        let stats = RoundOutcomeStats {
            r,
            mix_loss: mix_loss(&post, &losses, self.inner.eta())?,
            expected_loss: policy.alpha * c + (1.0 - policy.alpha) * wrong,
            realized_loss: decision.loss(y, c),
            losses,
        };
        self.inner.charge(&stats.losses)?;
        Ok((decision, stats))
    }

    fn check_advice(&self, advice: &ClassAdvice) -> Result<()> {
        if advice.k() != self.k {
            return Err(Error::Shape {
                expected: self.k,
                got: advice.k(),
            });
        }
        if advice.len() != self.inner.n_experts() {
            return Err(Error::Shape {
                expected: self.inner.n_experts(),
                got: advice.len(),
            });
        }
        Ok(())
    }
}

/// Pure form of [`MulticlassForecaster::step`].
pub fn multiclass_step<R: Rng + ?Sized>(
    state: &MulticlassForecaster,
    advice: &ClassAdvice,
    y: usize,
    c: f64,
    rng: &mut R,
) -> Result<(ClassDecision, RoundOutcomeStats, MulticlassForecaster)> {
    let mut next = state.clone();
    let (decision, stats) = next.step(advice, y, c, rng)?;
    Ok((decision, stats, next))
}

/// Multiclass regret guarantee with the tuned rate; the same expression as
/// [`tuned_regret_bound`](crate::forecaster::tuned_regret_bound).
pub fn multiclass_regret_bound(n: usize, horizon: usize, c: f64) -> f64 {
    crate::forecaster::tuned_regret_bound(n, horizon, c)
}
