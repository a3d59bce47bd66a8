//! Learning a hypothesis class of finite Littlestone dimension by running
//! the abstaining forecaster over an expert cover built from SOA.

use rand::Rng;

use abstain::forecaster::tuned_eta;
use abstain::littlestone::{
    expert_cover, ldim, littlestone_regret_bound, run_on_cover, HypothesisClass,
};
use abstain::rng::stream;
use abstain::Result;

fn main() -> Result<()> {
    let class = HypothesisClass::thresholds(8)?;
    let (horizon, c, noise) = (40, 0.2, 0.1);
    println!(
        "thresholds on 8 points: |H| = {}, Ldim = {}",
        class.len(),
        ldim(&class)
    );

    let mut cover = expert_cover(&class, horizon)?;
    println!("cover has {} experts for T = {horizon}", cover.len());

    let mut rng = stream(3, 1);
    let target = 5;
    let xs: Vec<usize> = (0..horizon).map(|_| rng.gen_range(0..8)).collect();
    let ys: Vec<u8> = xs
        .iter()
        .map(|&x| class.label(target, x) ^ rng.gen_bool(noise) as u8)
        .collect();

    let eta = tuned_eta(cover.len(), horizon, c);
    let run = run_on_cover(&mut cover, &xs, &ys, c, eta)?;
    println!("best hypothesis loss {}", run.best_hypothesis_loss);
    println!("best cover expert    {}", run.best_expert_loss);
    println!(
        "regret {:.3} <= bound {:.3}",
        run.regret(),
        littlestone_regret_bound(cover.ldim(), horizon, c)
    );
    Ok(())
}
