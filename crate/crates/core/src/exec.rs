//! Candidate evaluation against an execution backend.
//!
//! A backend runs each case program in isolation and reports one verdict per
//! case. The request and response types double as the newline-delimited wire
//! protocol spoken by sandbox workers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

/// One evaluation request. Serializes to the worker wire request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub id: String,
    pub source: String,
    #[serde(default)]
    pub setup: String,
    pub cases: Vec<String>,
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Pass,
    Fail,
    Error,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub status: CaseStatus,
    #[serde(default)]
    pub detail: String,
}

impl CaseResult {
    pub fn pass() -> Self {
        Self { status: CaseStatus::Pass, detail: String::new() }
    }

    pub fn new(status: CaseStatus, detail: impl Into<String>) -> Self {
        let detail = if status == CaseStatus::Pass { String::new() } else { detail.into() };
        Self { status, detail }
    }
}

/// Worker wire response: verdicts aligned with the request's cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(default)]
    pub id: String,
    pub results: Vec<CaseResult>,
    #[serde(default)]
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecReport {
    pub id: String,
    pub results: Vec<CaseResult>,
    pub cases_passed: usize,
    pub cases_total: usize,
    pub duration_ms: u64,
}

impl ExecReport {
    pub fn from_results(id: impl Into<String>, results: Vec<CaseResult>, duration_ms: u64) -> Self {
        let cases_passed = results.iter().filter(|r| r.status == CaseStatus::Pass).count();
        Self {
            id: id.into(),
            cases_total: results.len(),
            cases_passed,
            results,
            duration_ms,
        }
    }

    /// Every case failed with the same error, without running anything.
    pub fn all_error(id: impl Into<String>, cases: usize, detail: &str) -> Self {
        let results = (0..cases).map(|_| CaseResult::new(CaseStatus::Error, detail)).collect();
        Self::from_results(id, results, 0)
    }

    pub fn solved(&self) -> bool {
        solved(self)
    }

    fn is_consistent(&self) -> bool {
        self.cases_total == self.results.len()
            && self.cases_passed
                == self.results.iter().filter(|r| r.status == CaseStatus::Pass).count()
            && self.cases_passed <= self.cases_total
            && self
                .results
                .iter()
                .all(|r| r.status != CaseStatus::Pass || r.detail.is_empty())
    }
}

impl From<WireResponse> for ExecReport {
    fn from(w: WireResponse) -> Self {
        ExecReport::from_results(w.id, w.results, w.duration_ms)
    }
}

/// The solved predicate: every case passed. Metrics consume this rather
/// than recomputing it.
pub fn solved(report: &ExecReport) -> bool {
    report.cases_total > 0 && report.cases_passed == report.cases_total
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    /// Infrastructure failure, never a verdict about the candidate.
    #[error("execution backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("invalid execution request: {0}")]
    InvalidRequest(String),
}

pub trait ExecutionBackend {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError>;

    /// Backends that cannot serve concurrent calls return true; callers
    /// then queue requests.
    fn is_serial(&self) -> bool {
        false
    }
}

impl<T: ExecutionBackend + ?Sized> ExecutionBackend for &T {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError> {
        (**self).execute(req)
    }

    fn is_serial(&self) -> bool {
        (**self).is_serial()
    }
}

/// Runs `req` on `backend` and checks the report against the request:
/// one verdict per case and counts consistent with the verdicts. A backend
/// that breaks this contract is treated as unavailable.
pub fn evaluate_candidate<B: ExecutionBackend + ?Sized>(
    backend: &B,
    req: &ExecRequest,
) -> Result<ExecReport, ExecError> {
    if req.cases.is_empty() {
        return Err(ExecError::InvalidRequest(String::from("request has no cases")));
    }
    if req.timeout_ms == 0 {
        return Err(ExecError::InvalidRequest(String::from("timeout_ms must be positive")));
    }
    let report = backend.execute(req)?;
    if report.results.len() != req.cases.len() {
        return Err(ExecError::BackendUnavailable(format!(
            "backend returned {} results for {} cases",
            report.results.len(),
            req.cases.len()
        )));
    }
    if !report.is_consistent() {
        return Err(ExecError::BackendUnavailable(String::from(
            "backend report counts disagree with its results",
        )));
    }
    Ok(report)
}

/// Serves canned reports keyed by request id.
#[derive(Debug, Clone, Default)]
pub struct RecordedBackend {
    fixtures: BTreeMap<String, ExecReport>,
}

impl RecordedBackend {
    pub fn new(fixtures: BTreeMap<String, ExecReport>) -> Self {
        Self { fixtures }
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    /// Parses a fixture file: a JSON object mapping request ids to wire
    /// responses (`results` and optional `duration_ms`).
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: BTreeMap<String, WireResponse> = serde_json::from_str(text)?;
        let fixtures = raw
            .into_iter()
            .map(|(id, mut w)| {
                w.id = id.clone();
                (id, ExecReport::from(w))
            })
            .collect();
        Ok(Self { fixtures })
    }
}

impl ExecutionBackend for RecordedBackend {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError> {
        self.fixtures
            .get(&req.id)
            .cloned()
            .ok_or_else(|| ExecError::BackendUnavailable(format!("no recorded report for `{}`", req.id)))
    }
}
