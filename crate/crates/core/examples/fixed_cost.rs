//! The exponentially weighted forecaster with abstention at a fixed cost,
//! driven round by round over an i.i.d. environment.

use abstain::environments::{iid_env, ObliviousEnvironment};
use abstain::forecaster::{tuned_eta, tuned_regret_bound, Decision, ForecasterState};
use abstain::rng::stream;
use abstain::Result;

fn main() -> Result<()> {
    let (n, horizon, c) = (8, 5_000, 0.25);
    let rates: Vec<f64> = (0..n).map(|i| 0.05 + 0.05 * i as f64).collect();
    let mut env = iid_env(n, horizon, &rates, 0.5, 7)?;

    let eta = tuned_eta(n, horizon, c);
    let mut learner = ForecasterState::new(n, eta)?;
    let mut rng = stream(7, 3);
    let (mut expected, mut realized, mut abstentions) = (0.0, 0.0, 0);
    while let Some(round) = env.next_round() {
        let (decision, stats) = learner.step(&round.advice, round.outcome, c, &mut rng)?;
        expected += stats.expected_loss;
        realized += stats.realized_loss;
        abstentions += (decision == Decision::Abstain) as usize;
    }

    let best = *learner.cum_losses().iter().min().unwrap() as f64;
    println!("eta = {eta:.4}, abstained on {abstentions} of {horizon} rounds");
    println!("best expert loss      {best}");
    println!("expected learner loss {expected:.3}");
    println!("realized learner loss {realized}");
    println!(
        "regret {:.3} <= bound {:.3}",
        expected - best,
        tuned_regret_bound(n, horizon, c)
    );
    Ok(())
}
