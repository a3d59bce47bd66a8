//! Deterministic learners against the reactive adversary, with the
//! randomized forecaster for contrast.

use rayon::prelude::*;
use serde::Serialize;

use crate::environments::{
    run_reactive, AlwaysAbstain, AlwaysPredict, ContrarianAdversary, DerandomizedForecaster,
    FollowTheLeader, RandomizedForecaster, ReactiveLearner,
};
use crate::error::{domain, Result};
use crate::forecaster::{tuned_eta, tuned_regret_bound, Outcome};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterministicOutcome {
    pub learner: String,
    pub regret: f64,
    /// `cT/2 - 1`.
    pub floor: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomizedOutcome {
    pub eta: f64,
    /// Exact, from the announced strategies.
    pub expected_regret: f64,
    pub seeds: usize,
    pub mean_realized_regret: f64,
    pub bound: f64,
    /// `4 sqrt(T / seeds)`.
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundDemo {
    pub c: f64,
    pub horizon: usize,
    pub deterministic: Vec<DeterministicOutcome>,
    pub randomized: RandomizedOutcome,
}

impl LowerBoundDemo {
    pub fn pass(&self) -> bool {
        self.deterministic.iter().all(|d| d.pass) && self.randomized.pass
    }
}

/// Every deterministic learner shipped with the crate, configured for cost `c`.
pub fn deterministic_learners(
    c: f64,
    horizon: usize,
) -> Result<Vec<Box<dyn ReactiveLearner + Send>>> {
    let eta = tuned_eta(2, horizon, c);
    Ok(vec![
        Box::new(AlwaysPredict(Outcome::ZERO)),
        Box::new(AlwaysPredict(Outcome::ONE)),
        Box::new(AlwaysAbstain),
        Box::new(FollowTheLeader::new(2)),
        Box::new(DerandomizedForecaster::new(2, eta)?),
        Box::new(DerandomizedForecaster::with_threshold(2, eta, 0.25)?),
        Box::new(DerandomizedForecaster::with_threshold(2, eta, 0.75)?),
    ])
}

pub fn demo_lower_bound(
    c: f64,
    horizon: usize,
    seeds: usize,
    master: u64,
) -> Result<LowerBoundDemo> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(domain("abstention cost", c));
    }
    let floor = c * horizon as f64 / 2.0 - 1.0;
    let deterministic = deterministic_learners(c, horizon)?
        .into_par_iter()
        .map(|mut learner| {
            let mut env = ContrarianAdversary::new(c, horizon)?;
            let run = run_reactive(&mut env, learner.as_mut(), &mut stream(master, 0))?;
            let regret = run.expected_regret();
            Ok(DeterministicOutcome {
                learner: learner.name(),
                regret,
                floor,
                pass: regret >= floor,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let eta = tuned_eta(2, horizon, c);
    let runs = (0..seeds.max(1))
        .into_par_iter()
        .map(|j| {
            let mut env = ContrarianAdversary::new(c, horizon)?;
            let mut learner = RandomizedForecaster::new(2, eta)?;
            run_reactive(&mut env, &mut learner, &mut stream(master, 1 + j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_realized_regret =
        runs.iter().map(|r| r.realized_regret()).sum::<f64>() / runs.len() as f64;
    let bound = tuned_regret_bound(2, horizon, c);
    let allowance = 4.0 * (horizon as f64 / runs.len() as f64).sqrt();
    let expected_regret = runs[0].expected_regret();
    Ok(LowerBoundDemo {
        c,
        horizon,
        deterministic,
        randomized: RandomizedOutcome {
            eta,
            expected_regret,
            seeds: runs.len(),
            mean_realized_regret,
            bound,
            allowance,
            pass: mean_realized_regret <= bound + allowance,
        },
    })
}
