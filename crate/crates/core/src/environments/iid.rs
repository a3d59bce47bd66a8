use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassRound, ObliviousEnvironment, Round};
use crate::adaptive::CostSchedule;
use crate::error::{domain, Error, Result};
use crate::forecaster::{Advice, Outcome};
use crate::multiclass::ClassAdvice;

/// Labels drawn as Bernoulli(`bias`); expert `i` flips the label with
/// probability `rates[i]`, independently across experts and rounds.
#[derive(Clone, Debug)]
pub struct IidEnv {
    rates: Vec<f64>,
    bias: f64,
    costs: CostSchedule,
    horizon: usize,
    t: usize,
    rng: ChaCha8Rng,
}

pub fn iid_env(n: usize, horizon: usize, rates: &[f64], bias: f64, seed: u64) -> Result<IidEnv> {
    if rates.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: rates.len(),
        });
    }
    check_rates(rates)?;
    if !(0.0..=1.0).contains(&bias) {
        return Err(domain("label bias", bias));
    }
    Ok(IidEnv {
        rates: rates.to_vec(),
        bias,
        costs: CostSchedule::constant(0.5, horizon.max(1))?,
        horizon,
        t: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::Shape {
            expected: 1,
            got: 0,
        });
    }
    match rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        Some(&r) => Err(domain("expert error rate", r)),
        None => Ok(()),
    }
}

impl IidEnv {
    /// Attaches per-round abstention costs (default: 1/2 every round).
    pub fn with_costs(mut self, costs: CostSchedule) -> Result<Self> {
        if costs.len() != self.horizon {
            return Err(Error::Shape {
                expected: self.horizon,
                got: costs.len(),
            });
        }
        self.costs = costs;
        Ok(self)
    }
}

impl ObliviousEnvironment for IidEnv {
    fn n_experts(&self) -> usize {
        self.rates.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_round(&mut self) -> Option<Round> {
        if self.t >= self.horizon {
            return None;
        }
        let cost = self.costs.costs()[self.t];
        self.t += 1;
        let y = self.rng.gen_bool(self.bias) as u8;
        let bits = self
            .rates
            .iter()
            .map(|&rate| y ^ self.rng.gen_bool(rate) as u8)
            .collect();
        Some(Round {
            advice: Advice::new(bits).expect("bits are binary"),
            outcome: Outcome::new(y).expect("label is binary"),
            cost,
        })
    }
}

/// Uniform labels over `k` classes; expert `i` is wrong with probability
/// `rates[i]`, in which case it names a uniformly random other class.
#[derive(Clone, Debug)]
pub struct IidClassEnv {
    rates: Vec<f64>,
    k: usize,
    cost: f64,
    horizon: usize,
    t: usize,
    rng: ChaCha8Rng,
}

pub fn iid_class_env(
    k: usize,
    horizon: usize,
    rates: &[f64],
    cost: f64,
    seed: u64,
) -> Result<IidClassEnv> {
    if k < 2 {
        return Err(domain("number of classes", k as f64));
    }
    check_rates(rates)?;
    crate::error::check_cost(cost)?;
    Ok(IidClassEnv {
        rates: rates.to_vec(),
        k,
        cost,
        horizon,
        t: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl IidClassEnv {
    pub fn n_experts(&self) -> usize {
        self.rates.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

impl Iterator for IidClassEnv {
    type Item = ClassRound;

    fn next(&mut self) -> Option<ClassRound> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let y = self.rng.gen_range(0..self.k);
        let labels = self
            .rates
            .iter()
            .map(|&rate| {
                if self.rng.gen_bool(rate) {
                    let other = self.rng.gen_range(0..self.k - 1);
                    if other >= y {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    y
                }
            })
            .collect();
        Some(ClassRound {
            advice: ClassAdvice::new(labels, self.k).expect("labels are in range"),
            outcome: y,
            cost: self.cost,
        })
    }
}
