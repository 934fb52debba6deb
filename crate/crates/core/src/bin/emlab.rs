use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emlab::config::RunConfig;
use emlab::experiments::{run_fit, run_inequalities, run_linear, run_simulate, Outcome};

#[derive(Parser)]
#[command(name = "emlab", version, about = "Euler-Maxwell decay laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exit nonzero if any verdict fails.
    #[arg(long, global = true)]
    ci: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Nonlinear periodic-box run with energy monitors.
    Simulate(Common),
    /// Whole-space linear decay analyzer.
    Linear(Common),
    /// Randomized inequality checks.
    Inequalities(Common),
    /// Power-law fits of an existing time-series CSV.
    Fit {
        /// CSV with a `time` column (defaults to `fit.csv` in the config).
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> emlab::Result<(RunConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    Ok((cfg, out))
}

fn report(name: &str, outcome: &Outcome, out: &Path) {
    println!(
        "{name}: {} ({} files in {})",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.files.len(),
        out.display()
    );
}

fn run(cli: Cli) -> emlab::Result<(bool, bool)> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            let o = run_simulate(&cfg, &out)?;
            report("simulate", &o, &out);
            Ok((o.passed, c.ci))
        }
        Command::Linear(c) => {
            let (cfg, out) = load(&c)?;
            let (o, rep) = run_linear(&cfg, &out)?;
            for r in &rep.rows {
                println!(
                    "  {:<10} k={} slope {:>8.4} target {:>8.4}  {:?}",
                    r.quantity, r.k, r.fitted_slope, r.target, r.verdict
                );
            }
            report("linear", &o, &out);
            Ok((o.passed, c.ci))
        }
        Command::Inequalities(c) => {
            let (cfg, out) = load(&c)?;
            let (o, reps) = run_inequalities(&cfg, &out)?;
            for r in &reps {
                println!("  {:<40} max ratio {:>10.4}  {}", r.lemma, r.max_ratio, if r.passed { "ok" } else { "FAIL" });
            }
            report("inequalities", &o, &out);
            Ok((o.passed, c.ci))
        }
        Command::Fit { csv, common } => {
            let (cfg, out) = load(&common)?;
            let path = csv
                .or_else(|| cfg.fit.csv.as_ref().map(PathBuf::from))
                .ok_or_else(|| emlab::Error::Config("fit: no CSV given on the command line or in fit.csv".into()))?;
            let (o, fits) = run_fit(&cfg, &path, &out)?;
            for f in &fits {
                println!("  {:<24} slope {:>8.4}  r2 {:.4}  {:?}", f.quantity, f.slope, f.r_squared, f.verdict);
            }
            report("fit", &o, &out);
            Ok((o.passed, common.ci))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((passed, ci)) => {
            if ci && !passed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
