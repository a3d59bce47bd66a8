use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use abstain::harness::{
    build_costs, check_trace, demo_lower_bound, load_class, parse_trace, run, sweep, verify_all,
    verify_suite, write_costs, ClassSpec, CostSpec, EnvSpec, EtaPolicy, Expectation, Mode,
    RegretReport, RunConfig, Suite, SuiteResult, SweepAxis, VerifyOptions, ENV_FILE, REPORT_FILE,
    TRACE_FILE,
};
use abstain::littlestone::{describe_cover, expert_cover};
use abstain::Result;

#[derive(Parser)]
#[command(
    name = "abstain",
    version,
    about = "Prediction with expert advice and costly abstention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.toml, trace.csv and env.txt.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Repeat an experiment along one axis and write the sweep CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// `horizon:<t>,...`, `alpha:<a>,...` or `cost:<c>,...`
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical property suites, or check a run directory.
    Verify {
        /// mixability, mixregret, hoeffding, adaptive-gap, multiclass, cover or all
        #[arg(default_value = "all")]
        suite: String,
        /// Recompute every bound line of a `run` output directory instead.
        #[arg(long, conflicts_with = "suite")]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rates are `eta_factor * (1 - 2c)` in the dominance suites.
        #[arg(long, default_value_t = 2.0)]
        eta_factor: f64,
    },
    /// Deterministic learners against the reactive adversary.
    DemoLowerBound {
        #[arg(short, long)]
        c: f64,
        #[arg(short, long, default_value_t = 10_000)]
        t: usize,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a cost schedule file.
    GenCosts {
        #[arg(short, long)]
        t: usize,
        /// `constant:<c>`, `tsybakov:<alpha>:<beta>` or `uniform:<lo>:<hi>`
        #[arg(long)]
        costs: CostSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the expert cover of a hypothesis class and list its experts.
    Cover {
        /// `all:<m>`, `thresholds:<m>` or `file:<path>`
        #[arg(long)]
        class: ClassSpec,
        #[arg(short, long)]
        t: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Every config field as a flag; flags override the file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(short, long)]
    t: Option<usize>,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(short, long)]
    c: Option<f64>,
    #[arg(long)]
    costs: Option<CostSpec>,
    #[arg(long)]
    eta: Option<EtaPolicy>,
    #[arg(long)]
    env: Option<EnvSpec>,
    /// Comma-separated expert error rates.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long)]
    class: Option<ClassSpec>,
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    expectation: Option<Expectation>,
}

impl ConfigArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
            None => {
                let missing = |field| abstain::Error::Config {
                    field,
                    msg: "required without --config".into(),
                };
                RunConfig::new(
                    self.mode.ok_or_else(|| missing("mode"))?,
                    self.n.unwrap_or(2),
                    self.t.ok_or_else(|| missing("t"))?,
                    self.seed.ok_or_else(|| missing("seed"))?,
                )
            }
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { config.$f = v; })* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $(if self.$f.is_some() { config.$f = self.$f; })* };
        }
        set!(
            mode,
            n,
            t,
            k,
            c,
            env,
            bias,
            target,
            noise,
            seed,
            expectation
        );
        set_opt!(costs, eta, rates, class);
        config.validate()?;
        Ok(config)
    }
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    pass: bool,
    suite: &'a [SuiteResult],
}

fn print_suites(results: &[SuiteResult]) -> bool {
    let pass = results.iter().all(|r| r.pass);
    let text = toml::to_string(&SuiteReport {
        pass,
        suite: results,
    })
    .expect("suite results serialize");
    print!("{text}");
    pass
}

fn write_or_print(out: Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out } => {
            let config = config.resolve()?;
            let output = run(&config)?;
            output.write_to(&out)?;
            let r = &output.report;
            println!("regret = {}", r.regret);
            for b in &r.bounds {
                let verdict = if b.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {} <= {}", b.name, b.value);
            }
            println!("wrote {}", out.display());
            Ok(r.pass)
        }
        Command::Sweep {
            config,
            axis,
            repeats,
            out,
        } => {
            let config = config.resolve()?;
            let result = sweep(&config, &axis, repeats)?;
            write_or_print(out, &result.to_csv()?)?;
            if let Some(slope) = result.slope {
                eprintln!("log-log slope = {slope}");
            }
            Ok(result.all_pass)
        }
        Command::Verify {
            suite,
            trace,
            seed,
            eta_factor,
        } => {
            if let Some(dir) = trace {
                let report =
                    RegretReport::from_toml(&std::fs::read_to_string(dir.join(REPORT_FILE))?)?;
                let rows = parse_trace(&std::fs::read_to_string(dir.join(TRACE_FILE))?)?;
                let env = std::fs::read_to_string(dir.join(ENV_FILE))?;
                return Ok(print_suites(&[check_trace(&report, &rows, &env)?]));
            }
            let opts = VerifyOptions { seed, eta_factor };
            let results = if suite == "all" {
                verify_all(&opts)?
            } else {
                vec![verify_suite(suite.parse::<Suite>()?, &opts)?]
            };
            Ok(print_suites(&results))
        }
        Command::DemoLowerBound { c, t, seeds, seed } => {
            let demo = demo_lower_bound(c, t, seeds, seed)?;
            print!("{}", toml::to_string(&demo).expect("demo serializes"));
            Ok(demo.pass())
        }
        Command::GenCosts {
            t,
            costs,
            seed,
            out,
        } => {
            write_or_print(out, &write_costs(&build_costs(&costs, t, seed)?))?;
            Ok(true)
        }
        Command::Cover { class, t, out } => {
            let cover = expert_cover(&load_class(&class)?, t)?;
            write_or_print(out, &describe_cover(&cover))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
