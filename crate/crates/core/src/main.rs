use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use unavoidable::harness::{
    cmd_criteria, cmd_generate, cmd_report, cmd_simulate, cmd_whitney, exit_code, record_timing, OutputFormat,
    RunConfig,
};
use unavoidable::Error;

#[derive(Parser)]
#[command(name = "unavoidable", version, about = "Avoidability criteria and hitting simulations for bubble collections")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a shell configuration and write bubbles.csv.
    Generate(RunArgs),
    /// Evaluate the divergence criteria on a boundary grid.
    Criteria(RunArgs),
    /// Estimate the hitting probability by Monte Carlo.
    Simulate(RunArgs),
    /// Export the Whitney decomposition and its sandwich check.
    Whitney(RunArgs),
    /// Combine run directories into one CSV.
    Report {
        /// Run directories.
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> unavoidable::Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("output_dir: pass --out or set output_dir".into()))?;
    Ok((cfg, out))
}

fn run(command: Command) -> unavoidable::Result<()> {
    let start = Instant::now();
    let (name, args) = match command {
        Command::Report { runs, out } => {
            let summary = cmd_report(&runs, &out)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("report: {} rows -> {}", summary.rows, out.display());
            return Ok(());
        }
        Command::Generate(a) => ("generate", a),
        Command::Criteria(a) => ("criteria", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Whitney(a) => ("whitney", a),
    };
    let (cfg, out) = load(&args)?;
    let format = match args.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    };
    match name {
        "generate" => {
            let s = cmd_generate(&cfg, &out)?;
            println!("generate: {} bubbles in {} shells", s.bubbles, s.shells);
        }
        "criteria" => {
            let r = cmd_criteria(&cfg, &out, format)?;
            println!("criteria: {}", r.aggregate.as_str());
        }
        "simulate" => {
            let r = cmd_simulate(&cfg, &out, format)?;
            let e = &r.estimate;
            println!(
                "simulate: p_hat = {:.4} [{:.4}, {:.4}], timeouts {:.4}",
                e.p_hat, e.ci_low, e.ci_high, e.timeout_fraction
            );
        }
        _ => {
            let s = cmd_whitney(&cfg, &out)?;
            println!("whitney: {} cubes, sandwich {}", s.cubes, if s.sandwich_passed { "ok" } else { "FAILED" });
        }
    }
    record_timing(&out, name, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Error::Config(format!("threads: {e}"))),
        },
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
