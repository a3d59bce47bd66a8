//! K-class prediction with abstention: abstain with probability
//! `2(1 - p*)` and otherwise name the plurality label.

use abstain::environments::iid_class_env;
use abstain::forecaster::tuned_eta;
use abstain::multiclass::{multiclass_regret_bound, MulticlassForecaster};
use abstain::rng::stream;
use abstain::Result;

fn main() -> Result<()> {
    let (k, horizon, c) = (5, 4_000, 0.3);
    let rates = [0.1, 0.2, 0.35, 0.5, 0.7, 0.9];
    let n = rates.len();
    let env = iid_class_env(k, horizon, &rates, c, 21)?;

    let mut learner = MulticlassForecaster::new(n, k, tuned_eta(n, horizon, c))?;
    let mut rng = stream(21, 3);
    let mut expected = 0.0;
    for round in env {
        let (_, stats) = learner.step(&round.advice, round.outcome, round.cost, &mut rng)?;
        expected += stats.expected_loss;
    }
    let best = *learner.state().cum_losses().iter().min().unwrap() as f64;
    println!("K = {k}, N = {n}, T = {horizon}, c = {c}");
    println!("best expert {best}, learner {expected:.3}");
    println!(
        "regret {:.3} <= bound {:.3}",
        expected - best,
        multiclass_regret_bound(n, horizon, c)
    );
    Ok(())
}
