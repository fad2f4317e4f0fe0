use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nipd_cli::config::RawConfig;
use nipd_cli::{cmd_compare, cmd_gradcheck, cmd_simulate, cmd_sweep, cmd_train, CliError, RunConfig};
use nipd_core::Metrics;

#[derive(Parser, Debug)]
#[command(name = "nipd", version, about = "Neural immune PD tracking control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` lines, optional `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one configuration key, e.g. `--set K_P=400`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run one closed-loop episode and write episode.csv.
    Simulate,
    /// Train the suppressor network; writes train.csv, weights.txt and episode.csv.
    Train,
    /// Compare the neural controller against another controller.
    Compare,
    /// Check BPTT gradients against finite differences.
    Gradcheck,
    /// Sweep (K_P, K_D) pairs and write sweep.csv.
    Sweep,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut raw = RawConfig::parse(&text)?;
    for s in &cli.set {
        raw.set(s)?;
    }
    if let Some(seed) = cli.seed {
        raw.set(&format!("seed={seed}"))?;
    }
    if let Some(out) = &cli.out {
        raw.set(&format!("out={}", out.display()))?;
    }
    let (cfg, warnings) = raw.build()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn show(m: &Metrics) -> String {
    let settle = m.settle_time.map_or("none".to_string(), |t| format!("{t:.4}"));
    format!("rmse {:.6e}  max|e| {:.6e}  settle {settle}", m.rmse, m.max_abs_e)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Simulate => {
            let m = cmd_simulate(&cfg)?;
            println!("{}: {}", cfg.controller.name(), show(&m));
        }
        Command::Train => {
            let s = cmd_train(&cfg)?;
            let j0 = s.report.initial_cost();
            let last = s.report.final_record();
            println!("J(0) {:.6e}  J({}) {:.6e}  ratio {:.4}", j0, last.epoch, last.cost, last.cost / j0);
            println!("trained:        {}", show(&s.trained));
            println!("suppressor off: {}", show(&s.suppressor_off));
        }
        Command::Compare => {
            let s = cmd_compare(&cfg)?;
            if let Some(b) = s.baseline {
                println!("baseline K0 {} suppression {} sigma {}", b.k0, b.eta, b.sigma);
            }
            println!("{:<22}{}", s.left.label, show(&s.left.metrics));
            println!("{:<22}{}", s.right.label, show(&s.right.metrics));
            println!("lower rmse: {}", s.winner().unwrap_or("tie"));
        }
        Command::Gradcheck => {
            let s = cmd_gradcheck(&cfg)?;
            println!("{} cases, max relative error {:.3e}", s.cases.len(), s.max_rel_error);
        }
        Command::Sweep => {
            for r in cmd_sweep(&cfg)? {
                let flag = if r.critically_damped { " critical" } else { "" };
                println!("K_P {:>8} K_D {:>8}  {}{flag}", r.gains.kp, r.gains.kd, show(&r.metrics));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
