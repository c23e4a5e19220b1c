use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mot::client::{HttpTransport, Transport};
use mot::config::{ExecutorConfig, Mode, PartialProvider, PartialRunConfig};
use mot::mot_core::benchmark::DatasetId;
use mot::mot_core::metrics::Pricing;
use mot::mot_core::strategy::StrategyId;
use mot::report::cmd_report;
use mot::run::{build_client, cmd_run};

#[derive(Parser)]
#[command(name = "mot", version, about = "Modularization-of-Thought code generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and evaluate candidates for every (problem, strategy) pair.
    Run(RunArgs),
    /// Compare run directories in score and cost tables.
    Report(ReportArgs),
    /// Run the graph phase for one problem and print the MLR graph.
    Graph(GraphArgs),
}

#[derive(Args, Default)]
struct ProviderArgs {
    /// Model name sent to the provider.
    #[arg(long)]
    model: Option<String>,
    /// Base URL of an OpenAI-compatible API.
    #[arg(long)]
    base_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    request_timeout_ms: Option<u64>,
    #[arg(long)]
    max_output_tokens: Option<u32>,
    /// USD per input token.
    #[arg(long, requires = "price_out")]
    price_in: Option<f64>,
    /// USD per output token.
    #[arg(long, requires = "price_in")]
    price_out: Option<f64>,
}

impl ProviderArgs {
    fn partial(self) -> PartialProvider {
        PartialProvider {
            base_url: self.base_url,
            api_key_env: self.api_key_env,
            model: self.model,
            request_timeout_ms: self.request_timeout_ms,
            max_retries: self.max_retries,
            pricing: self
                .price_in
                .zip(self.price_out)
                .map(|(i, o)| Pricing { usd_per_input_token: i, usd_per_output_token: o }),
            max_output_tokens: self.max_output_tokens,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<DatasetId>,
    /// JSONL dataset file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated strategy ids.
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<StrategyId>>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Directory of recorded provider responses.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// In record mode, replace fixtures that already exist.
    #[arg(long)]
    overwrite_fixtures: bool,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Per-case execution timeout.
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated task ids to keep.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Skip pairs already present in the run log.
    #[arg(long)]
    resume: bool,
    /// Generate code one graph node at a time.
    #[arg(long)]
    per_node_phase2: bool,
    #[arg(long)]
    repeats: Option<u32>,
    /// JSON file of recorded execution reports keyed by request id.
    #[arg(long, conflicts_with = "runner")]
    exec_fixtures: Option<PathBuf>,
    /// Sandbox worker command line, split on whitespace.
    #[arg(long)]
    runner: Option<String>,
    /// Number of sandbox workers.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Comma-separated run directories.
    #[arg(long, value_delimiter = ',', required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value = "mot")]
    baseline: StrategyId,
    /// Also write the comma-separated form here; `-` prints it instead of the tables.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<DatasetId>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    task: String,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Write the accepted graph as schema JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    provider: ProviderArgs,
}

fn flag(set: bool) -> Option<bool> {
    set.then_some(true)
}

fn http() -> Result<Arc<dyn Transport>, String> {
    HttpTransport::new().map(|t| Arc::new(t) as Arc<dyn Transport>).map_err(|e| e.0)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(p) => PartialRunConfig::from_file(p)?,
        None => PartialRunConfig::default(),
    };
    let executor = match (args.exec_fixtures, args.runner) {
        (Some(path), _) => Some(ExecutorConfig::Recorded(path)),
        (None, Some(cmd)) => Some(ExecutorConfig::Runner {
            command: cmd.split_whitespace().map(str::to_string).collect(),
            workers: args.workers,
        }),
        (None, None) => None,
    };
    let flags = PartialRunConfig {
        dataset: args.dataset,
        data: args.data,
        strategies: args.strategy,
        provider: args.provider.partial(),
        mode: args.mode,
        fixtures: args.fixtures,
        overwrite_fixtures: flag(args.overwrite_fixtures),
        parallelism: args.parallelism,
        timeout_ms: args.timeout_ms,
        out: args.out,
        only: args.only,
        resume: flag(args.resume),
        per_node_phase2: flag(args.per_node_phase2),
        repeats: args.repeats,
        executor,
    };
    let cfg = flags.or(file).finish()?;
    let out = cmd_run(&cfg)?;
    println!(
        "{} jobs run, {} skipped; summary written to {}",
        out.jobs_run,
        out.jobs_skipped,
        out.dir.join(mot::run::SUMMARY_FILE).display()
    );
    for b in &out.summary.blocks {
        match &b.metrics {
            Some(m) => println!(
                "{:<24} repeat {}  Pass@1 {}  APR {}  ({} problems, {} generation failures)",
                b.strategy.display_name(),
                b.repeat,
                mot::mot_core::metrics::fmt_pct(m.pass_at_1_pct),
                m.apr_pct.map(mot::mot_core::metrics::fmt_pct).unwrap_or_else(|| "n/a".into()),
                m.problems,
                b.generation_failures
            ),
            None => println!("{:<24} repeat {}  no evaluated problems", b.strategy.display_name(), b.repeat),
        }
    }
    if out.infra_failures > 0 {
        eprintln!(
            "{} problem runs failed for infrastructure reasons and were excluded; see {}",
            out.infra_failures,
            out.dir.join(mot::run::FAILURES_FILE).display()
        );
    }
    Ok(ExitCode::from(out.exit_code() as u8))
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let report = cmd_report(&args.runs, args.baseline)?;
    match args.csv.as_deref() {
        Some(p) if p.as_os_str() == "-" => print!("{}", report.csv()),
        Some(p) => {
            std::fs::write(p, report.csv()).with_context(|| format!("writing {}", p.display()))?;
            print!("{}", report.human());
        }
        None => print!("{}", report.human()),
    }
    Ok(ExitCode::SUCCESS)
}

fn graph(args: GraphArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(p) => PartialRunConfig::from_file(p)?,
        None => PartialRunConfig::default(),
    };
    let dataset = args.dataset.or(file.dataset).context("missing --dataset")?;
    let data = args.data.or(file.data).context("missing --data")?;
    let mode = args.mode.or(file.mode).unwrap_or(Mode::Live);
    let fixtures = args.fixtures.or(file.fixtures);
    let provider = args.provider.partial().or(file.provider).finish()?;
    let problems = mot::data::load_problems(dataset, &data, Some(std::slice::from_ref(&args.task)))?;
    if mode != Mode::Live && fixtures.is_none() {
        bail!("{} mode needs --fixtures", mode.as_str());
    }
    let client = build_client(&provider, mode, fixtures.as_deref(), false, http)?;
    let mut opts = mot::mot_core::strategy::GenerateOptions::new(provider.model.clone());
    opts.max_output_tokens = provider.max_output_tokens;
    let out = mot::graph_cmd::cmd_graph(&problems[0], client.as_ref(), &opts)?;
    print!("{}", out.text);
    match (&out.schema_json, &args.output) {
        (Some(json), Some(path)) => {
            std::fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
            println!("Graph written to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        (Some(_), None) => Ok(ExitCode::SUCCESS),
        (None, _) => Ok(ExitCode::FAILURE),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Graph(a) => graph(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
