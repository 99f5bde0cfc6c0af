use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavemap_cli::{reproduce_all, run, CliError, CliResult, Kind, Manifest, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "wavemap", version, about = "Wave map experiments from JSON configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Solve(Flags),
    Conserve(Flags),
    Norms(Flags),
    Estimate(Flags),
    Oracle(Flags),
    Scatter(Flags),
    Counterexample(Flags),
    /// Run every entry of a manifest and aggregate the checks.
    Reproduce(Flags),
}

#[derive(clap::Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "T")]
    t_max: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, workers: self.workers, h: self.h, t_max: self.t_max }
    }
}

fn single(kind: Kind, flags: &Flags) -> CliResult<bool> {
    let mut cfg = RunConfig::load(&flags.config)?;
    if cfg.kind != kind {
        return Err(CliError::Config(format!(
            "subcommand `{}` does not match config kind `{}`",
            kind.name(),
            cfg.kind.name()
        )));
    }
    cfg.apply(&flags.overrides())?;
    let out = flags.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("wavemap-out"));
    let outcome = run(&cfg, &out)?;
    for c in outcome.checks() {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.criterion, c.describe());
    }
    println!("wrote {}", out.display());
    Ok(outcome.pass())
}

fn reproduce(flags: &Flags) -> CliResult<i32> {
    let mut manifest = Manifest::load(&flags.config)?;
    for cfg in &mut manifest.runs {
        cfg.apply(&flags.overrides())?;
    }
    let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("wavemap-out"));
    let report = reproduce_all(&manifest, &out)?;
    for line in report.lines() {
        println!("{line}");
    }
    for r in report.runs.iter().filter(|r| r.error.is_some()) {
        eprintln!("error in run `{}`: {}", r.name, r.error.as_deref().unwrap_or_default());
    }
    println!("wrote {}", out.join("report.json").display());
    Ok(report.status())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(f) => single(Kind::Solve, f).map(|p| if p { 0 } else { 1 }),
        Command::Conserve(f) => single(Kind::Conserve, f).map(|p| if p { 0 } else { 1 }),
        Command::Norms(f) => single(Kind::Norms, f).map(|p| if p { 0 } else { 1 }),
        Command::Estimate(f) => single(Kind::Estimate, f).map(|p| if p { 0 } else { 1 }),
        Command::Oracle(f) => single(Kind::Oracle, f).map(|p| if p { 0 } else { 1 }),
        Command::Scatter(f) => single(Kind::Scatter, f).map(|p| if p { 0 } else { 1 }),
        Command::Counterexample(f) => single(Kind::Counterexample, f).map(|p| if p { 0 } else { 1 }),
        Command::Reproduce(f) => reproduce(f),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status() as u8)
        }
    }
}
