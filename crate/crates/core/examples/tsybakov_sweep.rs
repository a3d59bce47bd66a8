//! Regret growth in T under the margin condition: the fitted log-log slope
//! stays below (1 - alpha) / (2 - alpha).

use abstain::harness::{sweep, CostSpec, EtaPolicy, Mode, RunConfig, SweepAxis};
use abstain::Result;

fn main() -> Result<()> {
    let horizons = vec![1_000, 3_000, 10_000, 30_000];
    // At alpha = 0 every schedule qualifies once beta >= 1; beta = 4 fixes
    // the margin at 1/4 instead of the degenerate 1/2.
    for (alpha, beta) in [(0.0, 4.0), (0.5, 1.0), (0.8, 1.0)] {
        let mut base = RunConfig::new(Mode::BinaryChangingC, 16, 1_000, 9);
        base.costs = Some(CostSpec::Tsybakov { alpha, beta });
        base.eta = Some(EtaPolicy::Tsybakov(alpha));
        let result = sweep(&base, &SweepAxis::Horizon(horizons.clone()), 4)?;
        println!("alpha = {alpha}");
        for row in &result.rows {
            println!(
                "  T = {:>6}  regret {:>8.3}  bound {:>8.3}",
                row.axis, row.regret, row.bound
            );
        }
        println!(
            "  slope {:.3}, rate exponent {:.3}",
            result.slope.unwrap(),
            (1.0 - alpha) / (2.0 - alpha)
        );
    }
    Ok(())
}
