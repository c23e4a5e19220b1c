//! Splitting native test payloads into independent per-case programs.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::pysrc::{self, Statement, StatementKind};
use super::{DatasetFamily, DatasetId, TestSuite};

/// A dataset's test payload as it appears in the record file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTests {
    /// A `check(candidate)` program plus the name it is invoked with.
    CheckFunction { test: String, entry_point: String },
    /// A list of standalone assertions and optional shared setup code.
    AssertList { test_list: Vec<String>, setup: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    /// The payload could not be split. `fallback` runs it as one case.
    #[error("test payload could not be split: {reason}")]
    Unparseable { reason: String, fallback: TestSuite },
    #[error("test payload has no cases")]
    NoCases,
    #[error("{dataset} expects {expected} tests")]
    WrongShape { dataset: DatasetId, expected: &'static str },
}

impl SplitError {
    /// The degraded single-case suite, when one exists.
    pub fn fallback(&self) -> Option<&TestSuite> {
        match self {
            SplitError::Unparseable { fallback, .. } => Some(fallback),
            _ => None,
        }
    }
}

pub fn split_cases(id: DatasetId, raw: &RawTests) -> Result<TestSuite, SplitError> {
    match (id.family(), raw) {
        (DatasetFamily::HumanEval, RawTests::CheckFunction { test, entry_point }) => {
            split_check_function(test, entry_point)
        }
        (DatasetFamily::Mbpp, RawTests::AssertList { test_list, setup }) => {
            let cases: Vec<String> = test_list
                .iter()
                .filter(|c| !c.trim().is_empty())
                .map(|c| with_newline(c.trim_end()))
                .collect();
            if cases.is_empty() {
                return Err(SplitError::NoCases);
            }
            Ok(TestSuite {
                setup: if setup.trim().is_empty() { String::new() } else { with_newline(setup.trim_end()) },
                cases,
                monolithic: false,
            })
        }
        (DatasetFamily::HumanEval, _) => Err(SplitError::WrongShape { dataset: id, expected: "check-function" }),
        (DatasetFamily::Mbpp, _) => Err(SplitError::WrongShape { dataset: id, expected: "assert-list" }),
    }
}

fn with_newline(s: &str) -> String {
    let mut out = String::from(s);
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

/// The whole payload followed by its invocation, as a single case.
pub fn monolithic_suite(test: &str, entry_point: &str) -> TestSuite {
    let mut case = with_newline(test.trim_end());
    if has_check_def(test) {
        case.push_str(&format!("\ncheck({entry_point})\n"));
    }
    TestSuite { setup: String::new(), cases: alloc::vec![case], monolithic: true }
}

fn has_check_def(test: &str) -> bool {
    test.lines().any(|l| l.starts_with("def check("))
}

fn is_check_def(s: &Statement) -> bool {
    s.text.starts_with("def check(") || s.text.lines().any(|l| l.starts_with("def check("))
}

fn split_check_function(test: &str, entry_point: &str) -> Result<TestSuite, SplitError> {
    if test.trim().is_empty() {
        return Err(SplitError::NoCases);
    }
    let fail = |reason: &str| SplitError::Unparseable {
        reason: reason.to_string(),
        fallback: monolithic_suite(test, entry_point),
    };
    let top = pysrc::top_level_statements(test).map_err(|e| fail(&e.to_string()))?;

    let mut preamble = String::new();
    let mut check: Option<&Statement> = None;
    for stmt in &top {
        if is_check_def(stmt) {
            if check.is_some() {
                return Err(fail("more than one check function"));
            }
            check = Some(stmt);
        } else if check.is_some() && stmt.text.trim_start().starts_with("check(") {
            // the payload's own invocation; the harness supplies its own
        } else {
            preamble.push_str(&stmt.text);
        }
    }

    let (binding, body) = match check {
        Some(stmt) => {
            let (header, body) = pysrc::split_def(&stmt.text).ok_or_else(|| fail("check function has no body"))?;
            let params = pysrc::def_params(&header);
            let binding = match params.as_slice() {
                [param] if param != entry_point => format!("{param} = {entry_point}\n"),
                [_] => String::new(),
                _ => return Err(fail("check function must take exactly one parameter")),
            };
            (binding, pysrc::dedent(&body))
        }
        None => {
            // bare top-level assertions
            let body = core::mem::take(&mut preamble);
            (String::new(), body)
        }
    };

    let stmts = pysrc::top_level_statements(&body).map_err(|e| fail(&e.to_string()))?;
    let monolithic = || monolithic_suite(test, entry_point);
    if stmts.iter().any(|s| s.kind() == StatementKind::ControlFlow) {
        return Ok(monolithic());
    }
    if !stmts.iter().any(|s| s.kind() == StatementKind::Assert) {
        return Ok(monolithic());
    }

    // Statements before the first assertion are shared setup. Later
    // non-assertion statements are replayed in front of every assertion
    // that follows them, so each case sees the same bindings it would see
    // in the original sequential run.
    let mut setup = preamble;
    setup.push_str(&binding);
    let mut carried = String::new();
    let mut cases = Vec::new();
    let mut seen_assert = false;
    for stmt in &stmts {
        match stmt.kind() {
            StatementKind::Assert => {
                seen_assert = true;
                let mut case = carried.clone();
                case.push_str(&stmt.text);
                cases.push(case);
            }
            _ if seen_assert => carried.push_str(&stmt.text),
            _ => setup.push_str(&stmt.text),
        }
    }
    Ok(TestSuite { setup, cases, monolithic: false })
}
