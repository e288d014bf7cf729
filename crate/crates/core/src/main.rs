use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use disentangle_core::config::{Scenario, ScenarioConfig};
use disentangle_core::scenarios::{run, RunOutput};

#[derive(Parser)]
#[command(name = "disentangle", version, about = "Nonlinear disentanglement dynamics of two-spin systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schmidt-state disentanglement (CSV)
    Fig1(Flags),
    /// Dipolar-coupled spins (CSV)
    Fig2(Flags),
    /// Free-energy flow toward the Gibbs state (CSV)
    Thermalize(Flags),
    /// Branch-vs-mixture signaling witness (JSON)
    Witness(Flags),
    /// Max-ent state from the marginals of a random state (JSON)
    Maxent(Flags),
}

#[derive(Args)]
struct Flags {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, overrides_with = "unconstrained")]
    constrained: bool,
    #[arg(long, overrides_with = "constrained")]
    unconstrained: bool,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    eps_init: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the run's tolerance checks; exit nonzero if any fails
    #[arg(long)]
    check: bool,
}

impl Flags {
    fn resolve(&self, scenario: Scenario) -> disentangle_core::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path, scenario)?,
            None => ScenarioConfig::new(scenario),
        };
        if self.constrained {
            cfg.constrained = true;
        }
        if self.unconstrained {
            cfg.constrained = false;
        }
        cfg.p = self.p.unwrap_or(cfg.p);
        cfg.gamma = self.gamma.unwrap_or(cfg.gamma);
        cfg.omega = self.omega.unwrap_or(cfg.omega);
        cfg.beta = self.beta.unwrap_or(cfg.beta);
        cfg.eps_init = self.eps_init.unwrap_or(cfg.eps_init);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.dt = self.dt.or(cfg.dt);
        cfg.t_max = self.t_max.or(cfg.t_max);
        cfg.out = self.out.clone().or(cfg.out);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(flags: &Flags, scenario: Scenario) -> disentangle_core::Result<RunOutput> {
    let cfg = flags.resolve(scenario)?;
    let output = run(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &output.text)?,
        None => print!("{}", output.text),
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, scenario) = match &cli.command {
        Command::Fig1(f) => (f, Scenario::Fig1),
        Command::Fig2(f) => (f, Scenario::Fig2),
        Command::Thermalize(f) => (f, Scenario::Thermalize),
        Command::Witness(f) => (f, Scenario::Witness),
        Command::Maxent(f) => (f, Scenario::Maxent),
    };
    match execute(flags, scenario) {
        Ok(output) => {
            if !flags.check {
                return ExitCode::SUCCESS;
            }
            for c in &output.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{mark} {}: {:e} (want {})", c.name, c.value, c.condition);
            }
            if output.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
