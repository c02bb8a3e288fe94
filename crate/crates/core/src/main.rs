use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use mixkpp::cli_io::commands::{evolve_command, kernel_command, spread_command, verify_command, wave_command, Outcome};
use mixkpp::cli_io::config::{env_overrides, parse_config, Override, RunConfig};
use mixkpp::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "mixkpp", version, about = "Pseudospectral lab for mixed local-nonlocal Fisher-KPP")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for independent legs (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for random probe families.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Heat-kernel tables and their checks.
    Kernel(KernelArgs),
    /// Semigroup, barrier and maximum-principle verification.
    Verify(VerifyArgs),
    /// One trajectory with snapshots and diagnostics.
    Evolve,
    /// Front spreading runs and rate fits.
    Spread(SpreadArgs),
    /// Traveling-wave residual sweep.
    Wave(WaveArgs),
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long)]
    s: Option<f64>,
    /// Time; repeatable.
    #[arg(long = "t")]
    t: Vec<f64>,
    /// gaussian, fractional or mixed; repeatable.
    #[arg(long)]
    kind: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    /// mass, symmetry, bounds, scaling, ck or oracle; repeatable.
    #[arg(long)]
    check: Vec<String>,
    /// Output directory for this run (overrides --out-dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// kernel, semigroup, barriers or maxprinciple; repeatable.
    #[arg(long)]
    suite: Vec<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Extra copy of the JSON report.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpreadArgs {
    /// classical, fractional, mixed or all.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Front threshold; repeatable, the first is primary.
    #[arg(long)]
    lambda: Vec<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// `t_min,t_max`.
    #[arg(long)]
    fit_window: Option<String>,
}

#[derive(Args, Debug)]
struct WaveArgs {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
}

fn float_list(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

fn string_list(values: &[String]) -> Value {
    Value::Array(values.iter().cloned().map(Value::String).collect())
}

struct Flags(Vec<Override>);

impl Flags {
    fn set(&mut self, section: &str, key: &str, value: Option<Value>) -> Result<()> {
        if let Some(v) = value {
            self.0.push(Override::new(section, key, v)?);
        }
        Ok(())
    }
}

fn nonempty<T>(v: &[T], f: impl Fn(&[T]) -> Value) -> Option<Value> {
    (!v.is_empty()).then(|| f(v))
}

fn cli_overrides(cli: &Cli) -> Result<Flags> {
    let mut o = Flags(Vec::new());
    o.set("experiment", "seed", cli.seed.map(|s| Value::Integer(s as i64)))?;
    match &cli.command {
        Command::Kernel(a) => {
            o.set("operator", "s", a.s.map(Value::Float))?;
            o.set("experiment", "kernel_times", nonempty(&a.t, float_list))?;
            o.set("experiment", "kernel_kinds", nonempty(&a.kind, string_list))?;
            o.set("grid", "n", a.n.map(|n| Value::Integer(n as i64)))?;
            o.set("grid", "L", a.half_width.map(Value::Float))?;
            o.set("experiment", "kernel_checks", nonempty(&a.check, string_list))?;
        }
        Command::Verify(a) => {
            o.set("experiment", "verify_suites", nonempty(&a.suite, string_list))?;
            o.set("operator", "s", a.s.map(Value::Float))?;
            o.set("operator", "gamma", a.gamma.map(Value::Float))?;
        }
        Command::Evolve => {}
        Command::Spread(a) => {
            o.set("experiment", "regime", a.regime.clone().map(Value::String))?;
            o.set("operator", "s", a.s.map(Value::Float))?;
            o.set("reaction", "rate", a.rate.map(Value::Float))?;
            o.set("experiment", "thresholds", nonempty(&a.lambda, float_list))?;
            o.set("solver", "t_end", a.t_end.map(Value::Float))?;
            let window = match &a.fit_window {
                Some(w) => Some(parse_window(w)?),
                None => None,
            };
            o.set("experiment", "fit_window", window)?;
        }
        Command::Wave(a) => {
            o.set("operator", "s", a.s.map(Value::Float))?;
            o.set("reaction", "rate", a.rate.map(Value::Float))?;
        }
    }
    Ok(o)
}

fn parse_window(raw: &str) -> Result<Value> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let bad = || Error::Config {
        key: "experiment.fit_window".into(),
        message: format!("expected `t_min,t_max`, got `{raw}`"),
    };
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    Ok(float_list(&[a, b]))
}

/// File < environment < flags.
fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = env_overrides(std::env::vars())?;
    overrides.extend(cli_overrides(cli)?.0);
    parse_config(cli.config.as_deref(), &overrides)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Outcome> {
    let out: &Path = match &cli.command {
        Command::Kernel(KernelArgs { out: Some(p), .. }) => p,
        _ => &cli.out_dir,
    };
    let outcome = match &cli.command {
        Command::Kernel(_) => kernel_command(cfg, out)?,
        Command::Verify(a) => {
            let outcome = verify_command(cfg, out)?;
            if let Some(path) = &a.json_out {
                let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
                std::fs::write(path, text).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
            }
            outcome
        }
        Command::Evolve => evolve_command(cfg, out)?,
        Command::Spread(_) => spread_command(cfg, out)?,
        Command::Wave(_) => wave_command(cfg, out)?,
    };
    Ok(outcome)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config { .. } | Error::InvalidParameter { .. })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if is_config_error(&e) || matches!(e, Error::Io { .. }) { 2 } else { 1 });
        }
    };
    match run(&cli, &cfg) {
        Ok(outcome) => {
            if !cli.quiet {
                for c in &outcome.report.checks {
                    println!("{c}");
                }
                let failed = outcome.report.checks.iter().filter(|c| !c.pass).count();
                println!("{} checks, {failed} failed", outcome.report.checks.len());
            }
            ExitCode::from(u8::from(!outcome.passed()))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
