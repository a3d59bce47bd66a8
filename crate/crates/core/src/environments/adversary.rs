//! Reactive environments and the learners that play against them.
//!
//! A reactive environment is shown the learner's strategy for the round (its
//! distribution over actions) before choosing the label. It never sees the
//! learner's random draw.

use rand::Rng;

use crate::error::{check_cost, Error, Result};
use crate::forecaster::{
    decision_policy, Advice, Decision, DecisionPolicy, ForecasterState, Outcome,
};

/// Probabilities of the three actions in one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionDistribution {
    pub zero: f64,
    pub one: f64,
    pub abstain: f64,
}

impl ActionDistribution {
    pub fn point(decision: Decision) -> Self {
        let mut d = ActionDistribution {
            zero: 0.0,
            one: 0.0,
            abstain: 0.0,
        };
        match decision {
            Decision::Zero => d.zero = 1.0,
            Decision::One => d.one = 1.0,
            Decision::Abstain => d.abstain = 1.0,
        }
        d
    }

    pub fn from_policy(policy: &DecisionPolicy) -> Self {
        let mut d = ActionDistribution::point(Decision::predict(policy.k_star));
        d.zero *= 1.0 - policy.alpha;
        d.one *= 1.0 - policy.alpha;
        d.abstain = policy.alpha;
        d
    }

    /// Abstention wins ties, then label 1.
    pub fn most_likely(&self) -> Decision {
        if self.abstain >= self.zero && self.abstain >= self.one {
            Decision::Abstain
        } else if self.one >= self.zero {
            Decision::One
        } else {
            Decision::Zero
        }
    }

    pub fn expected_loss(&self, y: Outcome, c: f64) -> f64 {
        let wrong = if y == Outcome::ONE {
            self.zero
        } else {
            self.one
        };
        self.abstain * c + wrong
    }

    /// Draws `Abstain` when `u < abstain`, else `Zero` when `u < abstain + zero`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Decision {
        let u: f64 = rng.gen();
        if u < self.abstain {
            Decision::Abstain
        } else if u < self.abstain + self.zero {
            Decision::Zero
        } else {
            Decision::One
        }
    }
}

/// Environment that picks each label after seeing the learner's strategy.
///
/// Rounds strictly alternate: [`open_round`](Self::open_round) then
/// [`reveal`](Self::reveal). Calling them out of order is a protocol error.
pub trait ReactiveEnvironment {
    fn n_experts(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Advice and abstention cost for the next round, or `None` when finished.
    fn open_round(&mut self) -> Result<Option<(Advice, f64)>>;
    fn reveal(&mut self, strategy: &ActionDistribution) -> Result<Outcome>;
}

/// Two constant experts (all zeros, all ones). Predictions get the opposite
/// label; abstentions get the label of the expert leading so far, expert 0 on
/// ties.
#[derive(Clone, Debug)]
pub struct ContrarianAdversary {
    cost: f64,
    horizon: usize,
    t: usize,
    losses: [u64; 2],
    open: bool,
}

impl ContrarianAdversary {
    pub fn new(cost: f64, horizon: usize) -> Result<Self> {
        check_cost(cost)?;
        Ok(ContrarianAdversary {
            cost,
            horizon,
            t: 0,
            losses: [0, 0],
            open: false,
        })
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

impl ReactiveEnvironment for ContrarianAdversary {
    fn n_experts(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn open_round(&mut self) -> Result<Option<(Advice, f64)>> {
        if self.open {
            return Err(Error::Protocol("round opened twice without a reveal"));
        }
        if self.t == self.horizon {
            return Ok(None);
        }
        self.open = true;
        Ok(Some((Advice::new(vec![0, 1])?, self.cost)))
    }

    fn reveal(&mut self, strategy: &ActionDistribution) -> Result<Outcome> {
        if !self.open {
            return Err(Error::Protocol("reveal called before open_round"));
        }
        let y = match strategy.most_likely() {
            Decision::Zero => Outcome::ONE,
            Decision::One => Outcome::ZERO,
            Decision::Abstain if self.losses[1] < self.losses[0] => Outcome::ONE,
            Decision::Abstain => Outcome::ZERO,
        };
        // Expert 0 always says 0, expert 1 always says 1.
        self.losses[(y == Outcome::ZERO) as usize] += 1;
        self.t += 1;
        self.open = false;
        Ok(y)
    }
}

/// A learner facing a reactive environment.
pub trait ReactiveLearner {
    fn name(&self) -> String;
    fn act(&mut self, advice: &Advice, c: f64) -> Result<ActionDistribution>;
    fn observe(&mut self, advice: &Advice, y: Outcome) -> Result<()>;
}

#[derive(Clone, Copy, Debug)]
pub struct AlwaysPredict(pub Outcome);

impl ReactiveLearner for AlwaysPredict {
    fn name(&self) -> String {
        format!("always-{}", self.0.label())
    }

    fn act(&mut self, _: &Advice, _: f64) -> Result<ActionDistribution> {
        Ok(ActionDistribution::point(Decision::predict(self.0)))
    }

    fn observe(&mut self, _: &Advice, _: Outcome) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AlwaysAbstain;

impl ReactiveLearner for AlwaysAbstain {
    fn name(&self) -> String {
        "always-abstain".into()
    }

    fn act(&mut self, _: &Advice, _: f64) -> Result<ActionDistribution> {
        Ok(ActionDistribution::point(Decision::Abstain))
    }

    fn observe(&mut self, _: &Advice, _: Outcome) -> Result<()> {
        Ok(())
    }
}

/// Copies the expert with the fewest mistakes so far (lowest index on ties).
#[derive(Clone, Debug)]
pub struct FollowTheLeader {
    losses: Vec<u64>,
}

impl FollowTheLeader {
    pub fn new(n: usize) -> Self {
        FollowTheLeader { losses: vec![0; n] }
    }
}

impl ReactiveLearner for FollowTheLeader {
    fn name(&self) -> String {
        "follow-the-leader".into()
    }

    fn act(&mut self, advice: &Advice, _: f64) -> Result<ActionDistribution> {
        if advice.len() != self.losses.len() {
            return Err(Error::Shape {
                expected: self.losses.len(),
                got: advice.len(),
            });
        }
        let leader = (0..self.losses.len())
            .min_by_key(|&i| self.losses[i])
            .unwrap_or(0);
        let label = Outcome::new(advice.bits()[leader])?;
        Ok(ActionDistribution::point(Decision::predict(label)))
    }

    fn observe(&mut self, advice: &Advice, y: Outcome) -> Result<()> {
        for (acc, &b) in self.losses.iter_mut().zip(advice.bits()) {
            *acc += (b != y.label()) as u64;
        }
        Ok(())
    }
}

/// Deterministic rule: abstain iff `alpha >= threshold`, else predict `k_star`.
pub fn derandomized_decision(policy: &DecisionPolicy, threshold: f64) -> Decision {
    if policy.alpha >= threshold {
        Decision::Abstain
    } else {
        Decision::predict(policy.k_star)
    }
}

/// Exponential weights with the randomized abstention replaced by a threshold.
#[derive(Clone, Debug)]
pub struct DerandomizedForecaster {
    state: ForecasterState,
    threshold: f64,
}

impl DerandomizedForecaster {
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        Self::with_threshold(n, eta, 0.5)
    }

    pub fn with_threshold(n: usize, eta: f64, threshold: f64) -> Result<Self> {
        Ok(DerandomizedForecaster {
            state: ForecasterState::new(n, eta)?,
            threshold,
        })
    }
}

impl ReactiveLearner for DerandomizedForecaster {
    fn name(&self) -> String {
        format!("derandomized(threshold={})", self.threshold)
    }

    fn act(&mut self, advice: &Advice, _: f64) -> Result<ActionDistribution> {
        let policy = self.state.predict(advice)?.policy;
        Ok(ActionDistribution::point(derandomized_decision(
            &policy,
            self.threshold,
        )))
    }

    fn observe(&mut self, advice: &Advice, y: Outcome) -> Result<()> {
        self.state.update(advice, y).map(|_| ())
    }
}

/// The abstaining exponentially weighted forecaster, exposing its full strategy.
#[derive(Clone, Debug)]
pub struct RandomizedForecaster {
    state: ForecasterState,
}

impl RandomizedForecaster {
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        Ok(RandomizedForecaster {
            state: ForecasterState::new(n, eta)?,
        })
    }
}

impl ReactiveLearner for RandomizedForecaster {
    fn name(&self) -> String {
        format!("randomized(eta={})", self.state.eta())
    }

    fn act(&mut self, advice: &Advice, _: f64) -> Result<ActionDistribution> {
        let p = self.state.predict(advice)?.policy.p;
        Ok(ActionDistribution::from_policy(&decision_policy(p)?))
    }

    fn observe(&mut self, advice: &Advice, y: Outcome) -> Result<()> {
        self.state.update(advice, y).map(|_| ())
    }
}

/// Totals from [`run_reactive`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReactiveRun {
    /// Loss of the sampled decisions.
    pub realized_loss: f64,
    /// Sum of per-round expected losses under the announced strategies.
    pub expected_loss: f64,
    pub expert_losses: Vec<u64>,
    pub labels: Vec<Outcome>,
    pub decisions: Vec<Decision>,
}

impl ReactiveRun {
    pub fn best_expert_loss(&self) -> u64 {
        self.expert_losses.iter().copied().min().unwrap_or(0)
    }

    pub fn expected_regret(&self) -> f64 {
        self.expected_loss - self.best_expert_loss() as f64
    }

    pub fn realized_regret(&self) -> f64 {
        self.realized_loss - self.best_expert_loss() as f64
    }
}

/// Plays `learner` against `env` until the environment runs out of rounds.
pub fn run_reactive<E, L, R>(env: &mut E, learner: &mut L, rng: &mut R) -> Result<ReactiveRun>
where
    E: ReactiveEnvironment + ?Sized,
    L: ReactiveLearner + ?Sized,
    R: Rng + ?Sized,
{
    let mut run = ReactiveRun {
        realized_loss: 0.0,
        expected_loss: 0.0,
        expert_losses: vec![0; env.n_experts()],
        labels: Vec::with_capacity(env.horizon()),
        decisions: Vec::with_capacity(env.horizon()),
    };
    while let Some((advice, c)) = env.open_round()? {
        let strategy = learner.act(&advice, c)?;
        let y = env.reveal(&strategy)?;
        let decision = strategy.sample(rng);
        run.realized_loss += decision.loss(y, c);
        run.expected_loss += strategy.expected_loss(y, c);
        for (acc, &b) in run.expert_losses.iter_mut().zip(advice.bits()) {
            *acc += (b != y.label()) as u64;
        }
        learner.observe(&advice, y)?;
        run.labels.push(y);
        run.decisions.push(decision);
    }
    Ok(run)
}
