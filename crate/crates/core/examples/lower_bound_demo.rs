//! Any deterministic learner pays about cT/2 against an adversary that sees
//! its decision; randomizing the abstention removes the linear term.

use abstain::harness::demo_lower_bound;
use abstain::Result;

fn main() -> Result<()> {
    for c in [0.1, 0.3, 0.49] {
        let demo = demo_lower_bound(c, 10_000, 200, 5)?;
        println!("c = {c}, floor cT/2 - 1 = {}", demo.deterministic[0].floor);
        for d in &demo.deterministic {
            println!("  {:<30} regret {:>10.2}", d.learner, d.regret);
        }
        let r = &demo.randomized;
        println!(
            "  randomized (eta {:.3})       mean regret {:>6.2} over {} seeds, bound {:.2} + {:.2}",
            r.eta, r.mean_realized_regret, r.seeds, r.bound, r.allowance
        );
    }
    Ok(())
}
