//! Adaptive learning rates on a changing cost schedule, compared with the
//! best fixed rate chosen in hindsight.

use abstain::adaptive::{adaptive_regret_bound, optimal_bound, AdaptiveState, TsybakovParams};
use abstain::environments::{iid_env, tsybakov_costs, ObliviousEnvironment};
use abstain::rng::stream;
use abstain::Result;

fn main() -> Result<()> {
    let (n, horizon) = (16, 10_000);
    let costs = tsybakov_costs(horizon, TsybakovParams::new(0.5, 1.0)?, 11)?;
    let rates: Vec<f64> = (0..n).map(|i| i as f64 / (2 * n) as f64).collect();
    let mut env = iid_env(n, horizon, &rates, 0.5, 11)?.with_costs(costs.clone())?;

    let mut learner = AdaptiveState::new(n)?;
    let mut rng = stream(11, 3);
    let mut expected = 0.0;
    while let Some(round) = env.next_round() {
        let (_, stats) = learner.step(&round.advice, round.outcome, round.cost, &mut rng)?;
        expected += stats.expected_loss;
    }
    let best = *learner.cum_losses().iter().min().unwrap() as f64;

    let hindsight = optimal_bound(&costs, n)?;
    println!(
        "final eta {:.4} after {} counted rounds",
        learner.eta(),
        learner.d()
    );
    println!(
        "best fixed rate in hindsight: eta* = {:.4}, R* = {:.3}",
        hindsight.eta_star, hindsight.r_star
    );
    println!(
        "regret {:.3} <= adaptive bound {:.3}",
        expected - best,
        adaptive_regret_bound(&costs, n)?
    );
    Ok(())
}
