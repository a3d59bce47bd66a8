//! Outcome, advice and cost generators.
//!
//! Oblivious environments fix their whole sequence independently of the
//! learner and can be materialized into an [`Episode`]. Reactive environments
//! see the learner's declared strategy before revealing each label.

mod adversary;
mod iid;
mod replay;
mod tsybakov;

pub use adversary::{
    derandomized_decision, run_reactive, ActionDistribution, AlwaysAbstain, AlwaysPredict,
    ContrarianAdversary, DerandomizedForecaster, FollowTheLeader, RandomizedForecaster,
    ReactiveEnvironment, ReactiveLearner, ReactiveRun,
};
pub use iid::{iid_class_env, iid_env, IidClassEnv, IidEnv};
pub use replay::{
    parse_class_replay, parse_replay, replay_env, write_class_replay, write_replay, Replay,
};
pub use tsybakov::{tsybakov_costs, verify_tsybakov, TsybakovCheck};

use crate::adaptive::CostSchedule;
use crate::error::{Error, Result};
use crate::forecaster::{Advice, Outcome};
use crate::multiclass::ClassAdvice;

/// One round of a binary oblivious environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub advice: Advice,
    pub outcome: Outcome,
    pub cost: f64,
}

/// One round of a multiclass oblivious environment.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassRound {
    pub advice: ClassAdvice,
    pub outcome: usize,
    pub cost: f64,
}

/// A sequence of rounds fixed before the learner acts.
pub trait ObliviousEnvironment {
    fn n_experts(&self) -> usize;
    fn horizon(&self) -> usize;
    fn next_round(&mut self) -> Option<Round>;
}

/// A fully materialized binary environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    n: usize,
    rounds: Vec<Round>,
}

impl Episode {
    pub fn new(n: usize, rounds: Vec<Round>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        if let Some(r) = rounds.iter().find(|r| r.advice.len() != n) {
            return Err(Error::Shape {
                expected: n,
                got: r.advice.len(),
            });
        }
        Ok(Episode { n, rounds })
    }

    pub fn collect<E: ObliviousEnvironment + ?Sized>(env: &mut E) -> Result<Self> {
        let n = env.n_experts();
        let mut rounds = Vec::with_capacity(env.horizon());
        while let Some(r) = env.next_round() {
            rounds.push(r);
        }
        Episode::new(n, rounds)
    }

    /// Experts predict 1 exactly when they lose; every label is 0.
    pub fn from_loss_matrix(losses: &[Vec<u8>], costs: &CostSchedule) -> Result<Self> {
        if losses.len() != costs.len() {
            return Err(Error::Shape {
                expected: costs.len(),
                got: losses.len(),
            });
        }
        let n = losses.first().map_or(0, Vec::len);
        let rounds = losses
            .iter()
            .zip(costs.costs())
            .map(|(row, &cost)| {
                Ok(Round {
                    advice: Advice::new(row.clone())?,
                    outcome: Outcome::ZERO,
                    cost,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Episode::new(n, rounds)
    }

    pub fn n_experts(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn costs(&self) -> Result<CostSchedule> {
        CostSchedule::new(self.rounds.iter().map(|r| r.cost).collect())
    }

    /// Cumulative loss of every expert over the whole episode.
    pub fn expert_losses(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n];
        for r in &self.rounds {
            for (acc, &b) in totals.iter_mut().zip(r.advice.bits()) {
                *acc += (b != r.outcome.label()) as u64;
            }
        }
        totals
    }

    pub fn replay(&self) -> Replay {
        Replay::new(self.clone())
    }
}

/// A fully materialized multiclass environment.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassEpisode {
    n: usize,
    k: usize,
    rounds: Vec<ClassRound>,
}

impl ClassEpisode {
    pub fn new(n: usize, k: usize, rounds: Vec<ClassRound>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape {
                expected: 1,
                got: 0,
            });
        }
        for r in &rounds {
            if r.advice.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: r.advice.len(),
                });
            }
            if r.advice.k() != k {
                return Err(Error::Shape {
                    expected: k,
                    got: r.advice.k(),
                });
            }
            if r.outcome >= k {
                return Err(crate::error::domain("class label", r.outcome as f64));
            }
        }
        Ok(ClassEpisode { n, k, rounds })
    }

    pub fn n_experts(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[ClassRound] {
        &self.rounds
    }

    pub fn expert_losses(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n];
        for r in &self.rounds {
            for (acc, &l) in totals.iter_mut().zip(r.advice.labels()) {
                *acc += (l != r.outcome) as u64;
            }
        }
        totals
    }
}
