//! Prompting strategies: MoT, the baselines and the two ablations.
//!
//! [`generate`] runs one strategy on one problem and returns the full trace
//! of provider calls together with the extracted candidate. Calls within a
//! problem are strictly sequential.

mod extract;
pub mod prompts;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmark::Problem;
use crate::exec::{self, CaseStatus, ExecError, ExecReport, ExecRequest, ExecutionBackend, DEFAULT_TIMEOUT_MS};
use crate::graph::{parse_graph, validate_graph_with, InvalidGraph, MlrGraph, TaskElements, ValidationLimits};
use crate::llm::{ChatRequest, CompletionService, ProviderError, Usage};
use crate::prompt::Prompt;

pub use extract::{extract_asserts, extract_code, fenced_blocks, strip_top_level_asserts, EmptyCandidate, FencedBlock};
pub use prompts::Exemplar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    Mot,
    ZeroShot,
    FewShot,
    Cot,
    SelfPlanning,
    Scot,
    Codecot,
    MotNoGraph,
    MotNoModularization,
}

impl StrategyId {
    pub const ALL: [StrategyId; 9] = [
        StrategyId::Mot,
        StrategyId::ZeroShot,
        StrategyId::FewShot,
        StrategyId::Cot,
        StrategyId::SelfPlanning,
        StrategyId::Scot,
        StrategyId::Codecot,
        StrategyId::MotNoGraph,
        StrategyId::MotNoModularization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Mot => "mot",
            StrategyId::ZeroShot => "zero_shot",
            StrategyId::FewShot => "few_shot",
            StrategyId::Cot => "cot",
            StrategyId::SelfPlanning => "self_planning",
            StrategyId::Scot => "scot",
            StrategyId::Codecot => "codecot",
            StrategyId::MotNoGraph => "mot_no_graph",
            StrategyId::MotNoModularization => "mot_no_modularization",
        }
    }

    /// Row label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            StrategyId::Mot => "MoT",
            StrategyId::ZeroShot => "Zero-shot",
            StrategyId::FewShot => "Few-shot",
            StrategyId::Cot => "CoT",
            StrategyId::SelfPlanning => "Self-planning",
            StrategyId::Scot => "SCoT",
            StrategyId::Codecot => "CodeCoT",
            StrategyId::MotNoGraph => "w/o MLR Graph",
            StrategyId::MotNoModularization => "w/o Modularization",
        }
    }

    pub fn needs_executor(self) -> bool {
        self == StrategyId::Codecot
    }

    /// Upper bound on provider calls for one problem under `opts`.
    pub fn max_calls(self, opts: &GenerateOptions) -> usize {
        let graph_calls = 1 + opts.graph_retries as usize;
        match self {
            StrategyId::Mot if opts.per_node_phase2 => graph_calls + opts.limits.max_nodes,
            StrategyId::Mot | StrategyId::MotNoModularization => graph_calls + 1,
            StrategyId::Codecot => 1 + opts.repair_rounds as usize,
            StrategyId::SelfPlanning | StrategyId::Scot => 2,
            StrategyId::ZeroShot | StrategyId::FewShot | StrategyId::Cot | StrategyId::MotNoGraph => 1,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}`")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyId {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// What a provider call was for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallStage {
    Graph,
    GraphRetry,
    Code,
    CodeNode,
    Plan,
    Structure,
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub stage: CallStage,
    pub prompt: Prompt,
    pub response: String,
    pub usage: Usage,
}

/// One self-test execution of a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfTestRun {
    pub round: u32,
    pub tests: Vec<String>,
    pub report: ExecReport,
}

/// Trace of one strategy run on one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub task_id: String,
    pub strategy: StrategyId,
    pub calls: Vec<CallRecord>,
    #[serde(default)]
    pub parsed_graph: Option<MlrGraph>,
    #[serde(default)]
    pub task_elements: Option<TaskElements>,
    /// Why each rejected phase-1 response was rejected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graph_issues: Vec<String>,
    pub extracted_code: String,
    pub fallback_used: bool,
    /// Set by the caller; `generate` leaves it at zero.
    #[serde(default)]
    pub wall_time_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub self_tests: Vec<SelfTestRun>,
}

impl GenerationRecord {
    pub fn usage_total(&self) -> Usage {
        self.calls.iter().map(|c| c.usage).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub model: String,
    pub max_output_tokens: Option<u32>,
    /// Re-prompts after an unusable phase-1 graph.
    pub graph_retries: u32,
    /// Repair calls after failing self-tests.
    pub repair_rounds: u32,
    /// One phase-2 call per graph node instead of a single call.
    pub per_node_phase2: bool,
    pub exec_timeout_ms: u64,
    pub limits: ValidationLimits,
    pub exemplars: Vec<Exemplar>,
}

impl GenerateOptions {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            max_output_tokens: None,
            graph_retries: 2,
            repair_rounds: 3,
            per_node_phase2: false,
            exec_timeout_ms: DEFAULT_TIMEOUT_MS,
            limits: ValidationLimits::default(),
            exemplars: Exemplar::builtin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Backend(#[from] ExecError),
    #[error("response contains no candidate code")]
    EmptyCandidate,
    #[error("no usable graph and the fallback produced no code")]
    GraphUnrecoverable,
    #[error("strategy `{0}` needs an execution backend")]
    MissingExecutor(StrategyId),
    #[error("problem is unusable: {0}")]
    InvalidProblem(String),
}

impl From<EmptyCandidate> for GenerateError {
    fn from(_: EmptyCandidate) -> Self {
        GenerateError::EmptyCandidate
    }
}

/// Sequential call log for one problem.
struct Session<'a, C: ?Sized> {
    client: &'a C,
    opts: &'a GenerateOptions,
    calls: Vec<CallRecord>,
}

impl<C: CompletionService + ?Sized> Session<'_, C> {
    fn call(&mut self, stage: CallStage, prompt: Prompt) -> Result<String, ProviderError> {
        let req = ChatRequest {
            model: self.opts.model.clone(),
            messages: prompt,
            max_output_tokens: self.opts.max_output_tokens,
        };
        let resp = self.client.complete(&req)?;
        self.calls.push(CallRecord {
            stage,
            prompt: req.messages,
            response: resp.content.clone(),
            usage: resp.usage,
        });
        Ok(resp.content)
    }
}

/// Outcome of the graph phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPhase {
    pub graph: Option<(MlrGraph, TaskElements)>,
    pub issues: Vec<String>,
    pub calls: Vec<CallRecord>,
}

/// Explains why a response is not a usable graph, or returns the graph.
pub fn check_graph_response(
    response: &str,
    limits: &ValidationLimits,
) -> Result<(MlrGraph, TaskElements), String> {
    let (graph, task) = parse_graph(response).map_err(|e| format!("- {e}"))?;
    let report = validate_graph_with(&graph, limits);
    if !report.ok() {
        let mut text = String::new();
        for v in &report.violations {
            text.push_str(&format!("- {v}\n"));
        }
        return Err(String::from(text.trim_end()));
    }
    Ok((graph, task))
}

/// Phase 1 alone: request a graph, re-prompting with the reasons for
/// rejection up to `opts.graph_retries` times.
pub fn graph_phase<C: CompletionService + ?Sized>(
    problem: &Problem,
    client: &C,
    opts: &GenerateOptions,
) -> Result<GraphPhase, ProviderError> {
    let mut session = Session { client, opts, calls: Vec::new() };
    let (graph, issues) = run_graph_phase(problem, &mut session)?;
    Ok(GraphPhase { graph, issues, calls: session.calls })
}

type PhaseResult = (Option<(MlrGraph, TaskElements)>, Vec<String>);

fn run_graph_phase<C: CompletionService + ?Sized>(
    problem: &Problem,
    session: &mut Session<'_, C>,
) -> Result<PhaseResult, ProviderError> {
    let mut prompt = prompts::build_graph_prompt(problem);
    let mut issues = Vec::new();
    for attempt in 0..=session.opts.graph_retries {
        let stage = if attempt == 0 { CallStage::Graph } else { CallStage::GraphRetry };
        let response = session.call(stage, prompt.clone())?;
        match check_graph_response(&response, &session.opts.limits) {
            Ok(found) => return Ok((Some(found), issues)),
            Err(problems) => {
                prompt = prompts::build_graph_retry(&prompt, &response, &problems);
                issues.push(problems);
            }
        }
    }
    Ok((None, issues))
}

/// Runs `strategy` on `problem`. `executor` is required for `codecot` only.
pub fn generate<C, B>(
    strategy: StrategyId,
    problem: &Problem,
    client: &C,
    executor: Option<&B>,
    opts: &GenerateOptions,
) -> Result<GenerationRecord, GenerateError>
where
    C: CompletionService + ?Sized,
    B: ExecutionBackend + ?Sized,
{
    if problem.description.trim().is_empty() {
        return Err(GenerateError::InvalidProblem(String::from("empty description")));
    }
    let ep = problem.entry_point.as_deref();
    let mut session = Session { client, opts, calls: Vec::new() };
    let mut record = GenerationRecord {
        task_id: problem.task_id.clone(),
        strategy,
        calls: Vec::new(),
        parsed_graph: None,
        task_elements: None,
        graph_issues: Vec::new(),
        extracted_code: String::new(),
        fallback_used: false,
        wall_time_ms: 0,
        self_tests: Vec::new(),
    };

    let code = match strategy {
        StrategyId::Mot | StrategyId::MotNoModularization => {
            let (graph, issues) = run_graph_phase(problem, &mut session)?;
            record.graph_issues = issues;
            match graph {
                Some((g, t)) => {
                    let code = if strategy == StrategyId::Mot && opts.per_node_phase2 {
                        per_node_code(problem, &g, &t, &mut session)?
                    } else {
                        let prompt = if strategy == StrategyId::Mot {
                            prompts::build_code_prompt(problem, &g, &t)
                        } else {
                            prompts::build_monolithic_code_prompt(problem, &g, &t)
                        }
                        .map_err(invalid_graph)?;
                        let response = session.call(CallStage::Code, prompt)?;
                        extract_code(&response, ep)?
                    };
                    record.parsed_graph = Some(g);
                    record.task_elements = Some(t);
                    code
                }
                None => {
                    record.fallback_used = true;
                    let prompt = if strategy == StrategyId::Mot {
                        prompts::build_no_graph_prompt(problem)
                    } else {
                        prompts::build_zero_shot_prompt(problem)
                    };
                    let response = session.call(CallStage::Code, prompt)?;
                    extract_code(&response, ep).map_err(|_| GenerateError::GraphUnrecoverable)?
                }
            }
        }
        StrategyId::ZeroShot => single(&mut session, prompts::build_zero_shot_prompt(problem), ep)?,
        StrategyId::FewShot => {
            single(&mut session, prompts::build_few_shot_prompt(problem, &opts.exemplars), ep)?
        }
        StrategyId::Cot => single(&mut session, prompts::build_cot_prompt(problem), ep)?,
        StrategyId::MotNoGraph => single(&mut session, prompts::build_no_graph_prompt(problem), ep)?,
        StrategyId::SelfPlanning => {
            let plan = session.call(CallStage::Plan, prompts::build_plan_prompt(problem))?;
            single(&mut session, prompts::build_plan_code_prompt(problem, &plan), ep)?
        }
        StrategyId::Scot => {
            let structure = session.call(CallStage::Structure, prompts::build_structure_prompt(problem))?;
            single(&mut session, prompts::build_structure_code_prompt(problem, &structure), ep)?
        }
        StrategyId::Codecot => {
            let executor = executor.ok_or(GenerateError::MissingExecutor(strategy))?;
            let (code, runs) = codecot(problem, &mut session, executor)?;
            record.self_tests = runs;
            code
        }
    };

    record.calls = session.calls;
    record.extracted_code = code;
    debug_assert!(record.calls.len() <= strategy.max_calls(opts));
    Ok(record)
}

fn invalid_graph(e: InvalidGraph) -> GenerateError {
    GenerateError::InvalidProblem(e.to_string())
}

fn single<C: CompletionService + ?Sized>(
    session: &mut Session<'_, C>,
    prompt: Prompt,
    ep: Option<&str>,
) -> Result<String, GenerateError> {
    let response = session.call(CallStage::Code, prompt)?;
    Ok(extract_code(&response, ep)?)
}

/// Phase 2 one node at a time, High to Detailed, threading the code.
fn per_node_code<C: CompletionService + ?Sized>(
    problem: &Problem,
    g: &MlrGraph,
    t: &TaskElements,
    session: &mut Session<'_, C>,
) -> Result<String, GenerateError> {
    let ep = problem.entry_point.as_deref();
    let mut code = String::new();
    for node in g.nodes_by_level() {
        let prompt = prompts::build_node_code_prompt(problem, g, t, node, &code).map_err(invalid_graph)?;
        let response = session.call(CallStage::CodeNode, prompt)?;
        if let Ok(next) = extract_code(&response, ep) {
            code = next;
        }
    }
    if code.trim().is_empty() {
        return Err(GenerateError::EmptyCandidate);
    }
    Ok(code)
}

/// Request id for self-test round `round`.
pub fn self_test_id(task_id: &str, round: u32) -> String {
    format!("{task_id}::codecot::{round}")
}

fn codecot<C, B>(
    problem: &Problem,
    session: &mut Session<'_, C>,
    executor: &B,
) -> Result<(String, Vec<SelfTestRun>), GenerateError>
where
    C: CompletionService + ?Sized,
    B: ExecutionBackend + ?Sized,
{
    let ep = problem.entry_point.as_deref();
    let response = session.call(CallStage::Code, prompts::build_codecot_prompt(problem))?;
    let tests = extract_asserts(&response);
    let mut code = strip_top_level_asserts(&extract_code(&response, ep)?);
    let mut runs = Vec::new();
    if tests.is_empty() {
        return Ok((code, runs));
    }
    let repair_rounds = session.opts.repair_rounds;
    for round in 0..=repair_rounds {
        let req = ExecRequest {
            id: self_test_id(&problem.task_id, round),
            source: code.clone(),
            setup: String::new(),
            cases: tests.clone(),
            timeout_ms: session.opts.exec_timeout_ms,
        };
        let report = exec::evaluate_candidate(executor, &req)?;
        let solved = report.solved();
        let errors = failure_summary(&tests, &report);
        runs.push(SelfTestRun { round, tests: tests.clone(), report });
        if solved || round == repair_rounds {
            break;
        }
        let response = session.call(CallStage::Repair, prompts::build_repair_prompt(problem, &code, &errors))?;
        match extract_code(&response, ep) {
            Ok(next) => code = strip_top_level_asserts(&next),
            Err(_) => break,
        }
        if round + 1 == repair_rounds {
            // the last repair is kept without another test run
            break;
        }
    }
    Ok((code, runs))
}

fn failure_summary(tests: &[String], report: &ExecReport) -> String {
    let mut out = String::new();
    for (test, result) in tests.iter().zip(&report.results) {
        if result.status == CaseStatus::Pass {
            continue;
        }
        let status = match result.status {
            CaseStatus::Fail => "failed",
            CaseStatus::Error => "raised an error",
            CaseStatus::Timeout => "timed out",
            CaseStatus::Pass => unreachable!(),
        };
        out.push_str(&format!("{}\n  {status}", test.trim_end()));
        if !result.detail.trim().is_empty() {
            out.push_str(&format!(": {}", result.detail.trim()));
        }
        out.push('\n');
    }
    out
}
