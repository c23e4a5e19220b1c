//! The `run` command: generate and evaluate every (problem, strategy) pair.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use mot_core::benchmark::{exec_request, AssembleError, Problem};
use mot_core::exec::{evaluate_candidate, ExecError, ExecReport, ExecRequest, ExecutionBackend, RecordedBackend};
use mot_core::llm::CompletionService;
use mot_core::metrics::{MetricsError, ProblemOutcome};
use mot_core::strategy::{generate, GenerateError, GenerateOptions, StrategyId};
use serde::{Deserialize, Serialize};

use crate::client::{LiveClient, Transport};
use crate::config::{ConfigError, ExecutorConfig, Mode, ProviderConfig, RunConfig};
use crate::data::{load_problems, DataError};
use crate::fixtures::{FixtureStore, RecordingClient, ReplayClient, StoreError};
use crate::runlog::{read_log, EntryStatus, LogError, RunLogEntry, RunLogWriter};
use crate::summary::{summarize, timings, BlockTiming, Summary};
use crate::worker::WorkerBackend;

pub const LOG_FILE: &str = "run_log.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const FAILURES_FILE: &str = "failures.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("cannot aggregate metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("recorded executor fixtures {path}: {message}")]
    ExecFixtures { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

pub type SharedClient = Box<dyn CompletionService + Sync>;
pub type SharedBackend = Box<dyn ExecutionBackend + Sync>;

/// Builds the completion service for `mode`. `transport` is only invoked
/// for live and record modes.
pub fn build_client(
    provider: &ProviderConfig,
    mode: Mode,
    fixtures: Option<&Path>,
    overwrite: bool,
    transport: impl FnOnce() -> Result<Arc<dyn Transport>, String>,
) -> Result<SharedClient, RunError> {
    let fixtures_required = || ConfigError::Missing("fixtures");
    match mode {
        Mode::Replay => {
            let dir = fixtures.ok_or_else(fixtures_required)?;
            Ok(Box::new(ReplayClient::new(FixtureStore::open(dir)?)))
        }
        Mode::Live => {
            let t = transport().map_err(|m| ConfigError::Invalid { field: "transport", message: m })?;
            Ok(Box::new(LiveClient::new(provider.clone(), t)))
        }
        Mode::Record => {
            let dir = fixtures.ok_or_else(fixtures_required)?;
            let store = FixtureStore::create(dir)?;
            let t = transport().map_err(|m| ConfigError::Invalid { field: "transport", message: m })?;
            Ok(Box::new(RecordingClient::new(LiveClient::new(provider.clone(), t), store, overwrite)))
        }
    }
}

pub fn build_backend(exec: &ExecutorConfig) -> Result<SharedBackend, RunError> {
    match exec {
        ExecutorConfig::Recorded(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            let backend = RecordedBackend::from_json(&text)
                .map_err(|e| RunError::ExecFixtures { path: path.clone(), message: e.to_string() })?;
            Ok(Box::new(backend))
        }
        ExecutorConfig::Runner { command, workers } => Ok(Box::new(WorkerBackend::new(command.clone(), *workers))),
    }
}

/// Queues calls for backends that declare themselves serial.
struct Serialized<'a> {
    lock: Mutex<()>,
    inner: &'a (dyn ExecutionBackend + Sync),
}

impl ExecutionBackend for Serialized<'_> {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError> {
        let _guard = self.lock.lock().unwrap();
        self.inner.execute(req)
    }
}

/// Executor request id for the final evaluation of a candidate.
pub fn eval_id(task_id: &str, strategy: StrategyId, repeat: u32) -> String {
    if repeat == 0 {
        format!("{task_id}::{strategy}")
    } else {
        format!("{task_id}::{strategy}::r{repeat}")
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

struct Job<'a> {
    problem: &'a Problem,
    strategy: StrategyId,
    repeat: u32,
}

fn run_job(
    job: &Job<'_>,
    client: &(dyn CompletionService + Sync),
    backend: &(dyn ExecutionBackend + Sync),
    opts: &GenerateOptions,
) -> RunLogEntry {
    let p = job.problem;
    let started_at = now();
    let clock = Instant::now();
    let mut entry = RunLogEntry {
        task_id: p.task_id.clone(),
        strategy: job.strategy,
        repeat: job.repeat,
        status: EntryStatus::Evaluated,
        record: None,
        exec_report: None,
        outcome: None,
        error: None,
        started_at,
        finished_at: String::new(),
    };
    match generate(job.strategy, p, client, Some(backend), opts) {
        Ok(mut record) => {
            record.wall_time_ms = clock.elapsed().as_millis() as u64;
            let id = eval_id(&p.task_id, job.strategy, job.repeat);
            let report = match exec_request(p, &record.extracted_code, id.clone(), opts.exec_timeout_ms) {
                Ok(req) => evaluate_candidate(backend, &req),
                Err(e @ AssembleError::MissingEntryPoint(_)) => {
                    Ok(ExecReport::all_error(id, p.suite.cases.len(), &e.to_string()))
                }
                Err(e) => Err(ExecError::InvalidRequest(e.to_string())),
            };
            match report {
                Ok(report) => {
                    entry.outcome = Some(ProblemOutcome::from_report(&p.task_id, &report));
                    entry.exec_report = Some(report);
                }
                Err(e) => {
                    entry.status = EntryStatus::InfraFailure;
                    entry.error = Some(e.to_string());
                }
            }
            entry.record = Some(record);
        }
        Err(e @ (GenerateError::Provider(_) | GenerateError::Backend(_) | GenerateError::MissingExecutor(_))) => {
            entry.status = EntryStatus::InfraFailure;
            entry.error = Some(e.to_string());
        }
        Err(e) => {
            entry.status = EntryStatus::GenerationFailed;
            entry.outcome = Some(ProblemOutcome::unsolved(&p.task_id, p.suite.cases.len()));
            entry.error = Some(e.to_string());
        }
    }
    entry.finished_at = now();
    entry
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureManifest {
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub task_id: String,
    pub strategy: StrategyId,
    pub repeat: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub started_at: String,
    pub finished_at: String,
    pub wall_time_ms: u64,
    pub jobs_run: usize,
    pub blocks: Vec<BlockTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: Summary,
    pub infra_failures: usize,
    pub jobs_run: usize,
    pub jobs_skipped: usize,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.infra_failures == 0 {
            0
        } else {
            2
        }
    }
}

pub fn generate_options(cfg: &RunConfig) -> GenerateOptions {
    let mut opts = GenerateOptions::new(cfg.provider.model.clone());
    opts.max_output_tokens = cfg.provider.max_output_tokens;
    opts.per_node_phase2 = cfg.per_node_phase2;
    opts.exec_timeout_ms = cfg.timeout_ms;
    opts
}

/// Builds the client and backend from `cfg` and runs.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let client = build_client(&cfg.provider, cfg.mode, cfg.fixtures.as_deref(), cfg.overwrite_fixtures, || {
        crate::client::HttpTransport::new().map(|t| Arc::new(t) as Arc<dyn Transport>).map_err(|e| e.0)
    })?;
    let exec = cfg.executor.as_ref().ok_or(ConfigError::Missing("executor"))?;
    let backend = build_backend(exec)?;
    run_with(cfg, client.as_ref(), backend.as_ref())
}

/// Runs with an explicit client and backend. Appends to the run log as
/// jobs finish, then rebuilds the summary from the log alone.
pub fn run_with(
    cfg: &RunConfig,
    client: &(dyn CompletionService + Sync),
    backend: &(dyn ExecutionBackend + Sync),
) -> Result<RunOutput, RunError> {
    let started_at = now();
    let clock = Instant::now();
    let problems = load_problems(cfg.dataset, &cfg.data, cfg.only.as_deref())?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let log_path = cfg.out.join(LOG_FILE);
    let existing = read_log(&log_path)?;
    if !existing.is_empty() && !cfg.resume {
        return Err(ConfigError::Invalid {
            field: "out",
            message: format!("{} already holds a run log; pass --resume or choose a fresh directory", cfg.out.display()),
        }
        .into());
    }
    let done: BTreeSet<(String, StrategyId, u32)> =
        existing.iter().filter(|e| e.is_final()).map(RunLogEntry::key).collect();

    let mut jobs = Vec::new();
    let mut skipped = 0;
    for repeat in 0..cfg.repeats {
        for &strategy in &cfg.strategies {
            for problem in &problems {
                if done.contains(&(problem.task_id.clone(), strategy, repeat)) {
                    skipped += 1;
                } else {
                    jobs.push(Job { problem, strategy, repeat });
                }
            }
        }
    }

    let opts = generate_options(cfg);
    let serialized;
    let backend: &(dyn ExecutionBackend + Sync) = if backend.is_serial() {
        serialized = Serialized { lock: Mutex::new(()), inner: backend };
        &serialized
    } else {
        backend
    };
    let mut writer = RunLogWriter::append_to(&log_path)?;
    let next = AtomicUsize::new(0);
    let total = jobs.len();
    let mut write_error = None;
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..cfg.parallelism.min(total.max(1)) {
            let tx = tx.clone();
            let (jobs, next, opts) = (&jobs, &next, &opts);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                if tx.send(run_job(job, client, backend, opts)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (n, entry) in rx.into_iter().enumerate() {
            log::info!("[{}/{total}] {} {} -> {:?}", n + 1, entry.task_id, entry.strategy, entry.status);
            if write_error.is_none() {
                if let Err(e) = writer.append(&entry) {
                    write_error = Some(e);
                    next.store(total, Ordering::Relaxed);
                }
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e.into());
    }

    let entries = read_log(&log_path)?;
    let task_ids: Vec<String> = problems.iter().map(|p| p.task_id.clone()).collect();
    let summary = summarize(
        cfg.dataset,
        &cfg.provider.model,
        cfg.provider.pricing,
        &entries,
        Some(&task_ids),
        &cfg.strategies,
        cfg.repeats,
    )?;
    write_file(&cfg.out.join(SUMMARY_FILE), &summary.to_json())?;

    let timing = Timings {
        started_at,
        finished_at: now(),
        wall_time_ms: clock.elapsed().as_millis() as u64,
        jobs_run: total,
        blocks: timings(&entries, Some(&task_ids), &cfg.strategies, cfg.repeats),
    };
    write_file(&cfg.out.join(TIMINGS_FILE), &pretty(&timing))?;

    let failures: Vec<Failure> = crate::summary::latest_entries(&entries, Some(&task_ids))
        .into_values()
        .filter(|e| e.status == EntryStatus::InfraFailure)
        .filter(|e| cfg.strategies.contains(&e.strategy) && e.repeat < cfg.repeats)
        .map(|e| Failure {
            task_id: e.task_id.clone(),
            strategy: e.strategy,
            repeat: e.repeat,
            error: e.error.clone().unwrap_or_default(),
        })
        .collect();
    let failures_path = cfg.out.join(FAILURES_FILE);
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path).map_err(io_err(&failures_path))?;
        }
    } else {
        write_file(&failures_path, &pretty(&FailureManifest { failures: failures.clone() }))?;
    }

    Ok(RunOutput {
        dir: cfg.out.clone(),
        summary,
        infra_failures: failures.len(),
        jobs_run: total,
        jobs_skipped: skipped,
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(io_err(path))
}
