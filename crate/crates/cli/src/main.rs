mod report;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conflictbn::circuits::{
    benchmark_csv, build_adder, output_scenario, run_benchmark, AdderSpec, GridSpec,
};
use conflictbn::format::{emit_evidence, emit_network, parse_evidence, read_network};
use conflictbn::{
    run_anytime, top_m_worlds, Error, Network, Observation, QueryFormula, SearchParams, Strategy,
    DEFAULT_EPSILON_NORMAL,
};

use report::{faults, progress_line, trace_line, Config, RunReport, WorldSummary};

#[derive(Parser)]
#[command(
    name = "conflictbn",
    version,
    about = "Anytime Bayesian network inference by search over possible worlds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound the probability of a query given evidence.
    Query(QueryArgs),
    /// List the most probable worlds consistent with the evidence.
    Diagnose(DiagnoseArgs),
    /// Write an n-bit adder network and an output scenario.
    GenAdder(GenAdderArgs),
    /// Time top-m diagnosis of single-error adders over a grid.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(long, default_value = "bestfirst")]
    strategy: Strategy,
    #[arg(long, value_enum, default_value = "on")]
    conflicts: Switch,
    #[arg(long, default_value_t = DEFAULT_EPSILON_NORMAL)]
    epsilon_normal: f64,
    /// Print one JSON report with no timing fields.
    #[arg(long)]
    machine: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Formula over `name=value` atoms with `!`, `&`, `|` and parentheses.
    #[arg(long)]
    query: String,
    #[arg(long)]
    max_error: Option<f64>,
    #[arg(long)]
    max_worlds: Option<usize>,
    #[arg(long)]
    max_expansions: Option<u64>,
    /// Write a CSV line per snapshot to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Keep every n-th snapshot in the trace.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trace_every: u64,
    /// Number of generated worlds to list.
    #[arg(long, default_value_t = 5)]
    top: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
}

#[derive(Args)]
struct GenAdderArgs {
    #[arg(long)]
    bits: usize,
    /// Output bit observed on; repeat for several. Without it all outputs
    /// are observed off.
    #[arg(long)]
    error_bit: Vec<usize>,
    /// `network[,evidence]`; the network goes to stdout when omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    out: Vec<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// e.g. `n=16,32,64;k=half;conflicts=on,off;m=5`
    #[arg(long)]
    grid: String,
    #[arg(long, default_value = "iddfs")]
    strategy: Strategy,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Query(args) => query(args),
        Command::Diagnose(args) => diagnose(args),
        Command::GenAdder(args) => gen_adder(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let zero_evidence = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::ZeroEvidence)));
            ExitCode::from(if zero_evidence { 3 } else { 2 })
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(args: &SearchArgs) -> anyhow::Result<(Network, Observation)> {
    let net = read_network(&read(&args.network)?)
        .with_context(|| format!("in {}", args.network.display()))?;
    let obs = match &args.evidence {
        Some(path) => {
            parse_evidence(&read(path)?, &net).with_context(|| format!("in {}", path.display()))?
        }
        None => Observation::new(),
    };
    Ok((net, obs))
}

fn params(args: &SearchArgs) -> anyhow::Result<SearchParams> {
    let mut params = SearchParams::default()
        .with_strategy(args.strategy)
        .with_conflicts(matches!(args.conflicts, Switch::On));
    params.epsilon_normal = args.epsilon_normal;
    params.validate()?;
    Ok(params)
}

fn config(args: &SearchArgs, query: Option<String>, top: usize) -> Config {
    Config {
        network: args.network.display().to_string(),
        evidence: args.evidence.as_ref().map(|p| p.display().to_string()),
        query,
        strategy: args.strategy.to_string(),
        conflicts: matches!(args.conflicts, Switch::On),
        epsilon_normal: args.epsilon_normal,
        max_error: None,
        max_worlds: None,
        max_expansions: None,
        top,
    }
}

fn emit(report: &mut RunReport, machine: bool) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    if machine {
        if let Some(b) = &mut report.bounds {
            b.elapsed_us = 0;
        }
        serde_json::to_writer_pretty(&mut out, report)?;
        writeln!(out)?;
    } else {
        write!(out, "{}", report.human())?;
    }
    Ok(())
}

fn query(args: QueryArgs) -> anyhow::Result<()> {
    let (net, obs) = load(&args.search)?;
    let formula = QueryFormula::parse(&args.query, &net).context("in --query")?;
    let mut params = params(&args.search)?;
    params.stop.max_error = args.max_error;
    params.stop.max_worlds = args.max_worlds;
    params.stop.max_expansions = args.max_expansions;
    params.validate()?;

    let mut trace = match &args.trace {
        Some(path) => Some(BufWriter::new(
            fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => None,
    };
    let mut steps = 0u64;
    let mut trace_error = None;
    let verbose = !args.search.machine;
    let run = run_anytime(&net, &obs, &formula, &params, |snapshot| {
        steps += 1;
        if let Some(t) = &mut trace {
            if steps.is_multiple_of(args.trace_every) {
                if let Err(e) = writeln!(t, "{}", trace_line(snapshot)) {
                    trace_error.get_or_insert(e);
                }
            }
        }
        if verbose && steps.is_power_of_two() {
            println!("{}", progress_line(snapshot));
        }
    })?;
    if let Some(mut t) = trace {
        if !steps.is_multiple_of(args.trace_every) {
            writeln!(t, "{}", trace_line(&run.report))?;
        }
        t.flush()?;
    }
    if let Some(e) = trace_error {
        bail!("writing the trace failed: {e}");
    }

    let mut worlds = run.worlds.clone();
    worlds.sort_by(|a, b| b.log_g.total_cmp(&a.log_g));
    let worlds = worlds
        .iter()
        .take(args.top)
        .map(|w| WorldSummary {
            probability: w.g(),
            faults: faults(&net, &run.retained, &w.values, params.epsilon_normal),
        })
        .collect();
    let mut config = config(&args.search, Some(args.query.clone()), args.top);
    config.max_error = args.max_error;
    config.max_worlds = args.max_worlds;
    config.max_expansions = args.max_expansions;
    let mut report = RunReport {
        config,
        variables: net.len(),
        searched_variables: run.retained.len(),
        stop: Some(run.stop),
        bounds: Some(run.report),
        worlds,
        conflicts: run.conflicts,
        counters: run.counters,
    };
    emit(&mut report, args.search.machine)
}

fn diagnose(args: DiagnoseArgs) -> anyhow::Result<()> {
    let (net, obs) = load(&args.search)?;
    let params = params(&args.search)?;
    let m = args.top as usize;
    let top = top_m_worlds(&net, &obs, m, &params)?;
    let all: Vec<usize> = (0..net.len()).collect();
    let worlds = top
        .worlds
        .iter()
        .map(|w| WorldSummary {
            probability: w.g(),
            faults: faults(&net, &all, &w.values, params.epsilon_normal),
        })
        .collect();
    let conflicts = top
        .conflicts
        .iter()
        .map(|c| c.names(&net).into_iter().map(str::to_owned).collect())
        .collect();
    let mut report = RunReport {
        config: config(&args.search, None, m),
        variables: net.len(),
        searched_variables: net.len(),
        stop: None,
        bounds: top.bounds,
        worlds,
        conflicts,
        counters: top.counters,
    };
    emit(&mut report, args.search.machine)
}

fn gen_adder(args: GenAdderArgs) -> anyhow::Result<()> {
    let adder = build_adder(&AdderSpec::new(args.bits))?;
    let obs = output_scenario(&adder, &args.error_bit)?;
    let network = emit_network(&adder.network);
    match args.out.as_slice() {
        [] => print!("{network}"),
        [net_path, rest @ ..] => {
            fs::write(net_path, network)
                .with_context(|| format!("cannot write {}", net_path.display()))?;
            if let [ev_path] = rest {
                fs::write(ev_path, emit_evidence(&obs, &adder.network))
                    .with_context(|| format!("cannot write {}", ev_path.display()))?;
            }
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let grid: GridSpec = args.grid.parse()?;
    let rows = run_benchmark(&grid.0, args.strategy);
    print!("{}", benchmark_csv(&rows));
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("n={} k={}: {e}", r.n_bits, r.k);
        }
    }
    Ok(())
}
