use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agency_core::contract_space::enumerate_space;
use agency_core::generate::{generate_instance, GeneratorConfig};
use agency_core::oracle::grid_optimum;
use agency_core::pipeline::{batch, eta_for, evaluate, learn, plan, LearnParams, RunReport};
use agency_core::{Error, Instance, Sampling, UtilitySpec};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "agency", version, about = "Learn near-optimal contracts against a simulated agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random valid instance.
    Generate(GenerateArgs),
    /// List the coarse contract space as JSON lines.
    Discretize(DiscretizeArgs),
    /// Run the learner and write a JSON run report.
    Learn(LearnArgs),
    /// Grid-search the best learnable contract (reads the hidden agent).
    Oracle(OracleArgs),
    /// Score a run report against the grid optimum (reads the hidden agent).
    Evaluate(EvaluateArgs),
    /// Learn once per seed and write one CSV row per run.
    Batch(BatchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Crra,
    Log,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of outcomes.
    #[arg(long)]
    k: usize,
    /// Number of positive effort levels.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "crra")]
    family: Family,
    /// CRRA exponent in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Derive eta = epsilon / (4 k H).
    #[arg(long, required_unless_present = "eta_override")]
    epsilon: Option<f64>,
    #[arg(long)]
    eta_override: Option<f64>,
    #[arg(long)]
    prune_monotone_smooth: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnFlags {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Replaces eps / (4 k H); must stay below 1 / (4 k).
    #[arg(long)]
    eta_override: Option<f64>,
    #[arg(long)]
    prune_monotone_smooth: bool,
    /// Simulate every round instead of drawing per-batch outcome counts.
    #[arg(long)]
    per_round_sampling: bool,
    /// Sample arms of a round on all cores.
    #[arg(long)]
    parallel: bool,
}

impl LearnFlags {
    fn params(&self, seed: u64) -> LearnParams {
        let mut p = LearnParams::new(self.epsilon, self.delta, seed);
        p.eta_override = self.eta_override;
        p.prune_monotone_smooth = self.prune_monotone_smooth;
        p.sampling = if self.per_round_sampling { Sampling::PerRound } else { Sampling::Aggregated };
        p.parallel = self.parallel;
        p
    }
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    flags: LearnFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the elimination trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Run report written by `learn`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    flags: LearnFlags,
    /// First seed; runs use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    runs: u64,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SpaceLine<'a> {
    index: usize,
    code: &'a [u32],
    wages: &'a [f64],
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    instance_hash: &'a str,
    oracle_mode: bool,
    grid: usize,
    contract: &'a [f64],
    value: f64,
    step: f64,
    evaluated: usize,
    boundary_binds: bool,
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    Instance::load(path).with_context(|| format!("loading instance {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let utility = match a.family {
                Family::Crra => UtilitySpec::Crra { rho: a.rho },
                Family::Log => UtilitySpec::Log,
            };
            if a.k == 0 || a.n == 0 {
                return Err(Error::Precondition("k and n must be at least 1".into()).into());
            }
            let file = generate_instance(&GeneratorConfig { k: a.k, n: a.n, utility }, a.seed)?;
            write_json(&file, a.out.as_deref())
        }
        Command::Discretize(a) => {
            let inst = load(&a.instance)?;
            let eta = match (a.eta_override, a.epsilon) {
                (Some(eta), _) => eta,
                (None, Some(eps)) => eta_for(eps, inst.outcomes.k(), inst.outcomes.cap()),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let space = enumerate_space(&inst.outcomes, eta, a.prune_monotone_smooth)?;
            let mut w = sink(a.out.as_deref())?;
            for (index, member) in space.members.iter().enumerate() {
                let line = SpaceLine { index, code: member.code.exponents(), wages: member.contract.wages() };
                serde_json::to_writer(&mut w, &line)?;
                writeln!(w)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Learn(a) => {
            let inst = load(&a.flags.instance)?;
            let params = a.flags.params(a.seed);
            let (eta, budget, arms) = plan(&inst, &params)?;
            eprintln!("eta = {eta}, {arms} arms, budget {budget} samples");
            let (report, trace) = learn(&inst, &params)?;
            if let Some(path) = &a.trace {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                trace.write_csv(BufWriter::new(file))?;
            }
            write_json(&report, a.out.as_deref())
        }
        Command::Oracle(a) => {
            let inst = load(&a.instance)?;
            let best = grid_optimum(&inst.agent, &inst.outcomes, a.grid)?;
            let out = OracleOutput {
                instance_hash: inst.content_hash(),
                oracle_mode: true,
                grid: a.grid,
                contract: best.contract.wages(),
                value: best.value,
                step: best.step,
                evaluated: best.evaluated,
                boundary_binds: best.boundary_binds,
            };
            write_json(&out, a.out.as_deref())
        }
        Command::Evaluate(a) => {
            let inst = load(&a.instance)?;
            let text = std::fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
            let report: RunReport = serde_json::from_str(&text).context("parsing run report")?;
            write_json(&evaluate(&inst, &report, a.grid)?, a.out.as_deref())
        }
        Command::Batch(a) => {
            let inst = load(&a.flags.instance)?;
            let params = a.flags.params(a.seed);
            let (_, budget, arms) = plan(&inst, &params)?;
            eprintln!("{} runs, {arms} arms, budget {budget} samples each", a.runs);
            let seeds: Vec<u64> = (0..a.runs).map(|i| a.seed + i).collect();
            let rows = batch(&inst, &params, &seeds, a.grid)?;
            let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
            let ok = rows.iter().filter(|r| r.success).count();
            eprintln!("{ok}/{} runs within epsilon + grid slack", rows.len());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Precondition(_) | Error::EtaOutOfRange { .. }) => 2,
        _ => 1,
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    let kind = match (err.downcast_ref::<io::Error>(), err.downcast_ref::<serde_json::Error>()) {
        (Some(e), _) => Some(e.kind()),
        (None, Some(e)) => e.io_error_kind(),
        _ => None,
    };
    kind == Some(io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
