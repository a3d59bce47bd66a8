//! Runs an experiment, writes its files, then re-checks every trace row and
//! bound line from the files alone.

use abstain::harness::{
    check_trace, parse_trace, run, CostSpec, Mode, RegretReport, RunConfig, ENV_FILE, REPORT_FILE,
    TRACE_FILE,
};
use abstain::Result;

fn main() -> Result<()> {
    let mut config = RunConfig::new(Mode::Adaptive, 8, 2_000, 17);
    config.costs = Some(CostSpec::Uniform { lo: 0.1, hi: 0.5 });
    let dir = std::env::temp_dir().join("abstain-replay-trace");
    run(&config)?.write_to(&dir)?;
    println!("wrote {}", dir.display());

    let read = |name: &str| std::fs::read_to_string(dir.join(name));
    let report = RegretReport::from_toml(&read(REPORT_FILE)?)?;
    let trace = parse_trace(&read(TRACE_FILE)?)?;
    let check = check_trace(&report, &trace, &read(ENV_FILE)?)?;
    println!(
        "{} checks, {}",
        check.checks,
        if check.pass {
            "all consistent"
        } else {
            "MISMATCH"
        }
    );
    if let Some(w) = check.witness {
        println!("  {w}");
    }

    let mut edited = trace.clone();
    edited[99].mix_loss += 0.01;
    let tampered = check_trace(&report, &edited, &read(ENV_FILE)?)?;
    println!("after editing row 100: pass = {}", tampered.pass);
    Ok(())
}
