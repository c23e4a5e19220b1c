//! Benchmark problems and their per-case test suites.
//!
//! Records are line-delimited JSON objects. HumanEval-family records carry
//! `task_id`, `prompt`, `entry_point`, `test` and `canonical_solution`;
//! MBPP-family records carry `task_id`, `text`, `code`, `test_list` and
//! `test_setup_code`.

pub mod pysrc;
mod split;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::exec::ExecRequest;

pub use split::{monolithic_suite, split_cases, RawTests, SplitError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetId {
    #[serde(rename = "humaneval")]
    HumanEval,
    #[serde(rename = "humaneval_plus")]
    HumanEvalPlus,
    #[serde(rename = "humaneval_et")]
    HumanEvalEt,
    Mbpp,
    MbppPlus,
    MbppEt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFamily {
    HumanEval,
    Mbpp,
}

impl DatasetId {
    pub const ALL: [DatasetId; 6] = [
        DatasetId::HumanEval,
        DatasetId::HumanEvalPlus,
        DatasetId::HumanEvalEt,
        DatasetId::Mbpp,
        DatasetId::MbppPlus,
        DatasetId::MbppEt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::HumanEval => "humaneval",
            DatasetId::HumanEvalPlus => "humaneval_plus",
            DatasetId::HumanEvalEt => "humaneval_et",
            DatasetId::Mbpp => "mbpp",
            DatasetId::MbppPlus => "mbpp_plus",
            DatasetId::MbppEt => "mbpp_et",
        }
    }

    /// Name used in report headers.
    pub fn display_name(self) -> &'static str {
        match self {
            DatasetId::HumanEval => "HumanEval",
            DatasetId::HumanEvalPlus => "HumanEval+",
            DatasetId::HumanEvalEt => "HumanEval-ET",
            DatasetId::Mbpp => "MBPP",
            DatasetId::MbppPlus => "MBPP+",
            DatasetId::MbppEt => "MBPP-ET",
        }
    }

    pub fn family(self) -> DatasetFamily {
        match self {
            DatasetId::HumanEval | DatasetId::HumanEvalPlus | DatasetId::HumanEvalEt => {
                DatasetFamily::HumanEval
            }
            DatasetId::Mbpp | DatasetId::MbppPlus | DatasetId::MbppEt => DatasetFamily::Mbpp,
        }
    }

    /// AvgPassRatio is not reported for MBPP+.
    pub fn apr_supported(self) -> bool {
        self != DatasetId::MbppPlus
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dataset `{0}`")]
pub struct UnknownDataset(pub String);

impl FromStr for DatasetId {
    type Err = UnknownDataset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .map(|c| if c == '+' { 'P' } else { c.to_ascii_lowercase() })
            .collect();
        Ok(match norm.as_str() {
            "humaneval" => DatasetId::HumanEval,
            "humanevalplus" | "humanevalP" => DatasetId::HumanEvalPlus,
            "humanevalet" => DatasetId::HumanEvalEt,
            "mbpp" => DatasetId::Mbpp,
            "mbppplus" | "mbppP" => DatasetId::MbppPlus,
            "mbppet" => DatasetId::MbppEt,
            _ => return Err(UnknownDataset(s.to_string())),
        })
    }
}

/// Test programs for one problem. Each case is run after `setup` in a
/// fresh interpreter and decides pass or fail on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub setup: String,
    pub cases: Vec<String>,
    /// The native payload could not be split and runs as a single case.
    #[serde(default)]
    pub monolithic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub task_id: String,
    pub description: String,
    pub entry_point: Option<String>,
    pub suite: TestSuite,
    pub dataset: DatasetId,
    /// Reference solution as a complete program, when the dataset has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_solution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}: missing or invalid field `{field}`")]
    Schema { field: &'static str, line: usize },
    #[error("line {line}: not a JSON object: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: duplicate task id `{task_id}`")]
    DuplicateTaskId { task_id: String, line: usize },
    #[error("line {line}: task `{task_id}` has no test cases")]
    EmptySuite { task_id: String, line: usize },
}

fn str_field(obj: &serde_json::Map<String, Value>, field: &'static str, line: usize) -> Result<String, DatasetError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        _ => Err(DatasetError::Schema { field, line }),
    }
}

fn task_id(obj: &serde_json::Map<String, Value>, line: usize) -> Result<String, DatasetError> {
    match obj.get("task_id") {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(DatasetError::Schema { field: "task_id", line }),
    }
}

/// Parses a dataset file. Blank lines are skipped; line numbers are 1-based.
pub fn parse_dataset(id: DatasetId, text: &str) -> Result<Vec<Problem>, DatasetError> {
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw_line)
            .map_err(|e| DatasetError::Json { line, message: e.to_string() })?;
        let Value::Object(obj) = value else {
            return Err(DatasetError::Json { line, message: String::from("expected an object") });
        };
        let problem = match id.family() {
            DatasetFamily::HumanEval => human_eval_record(id, &obj, line)?,
            DatasetFamily::Mbpp => mbpp_record(id, &obj, line)?,
        };
        if !seen.insert(problem.task_id.clone()) {
            return Err(DatasetError::DuplicateTaskId { task_id: problem.task_id, line });
        }
        problems.push(problem);
    }
    Ok(problems)
}

fn suite_or_fallback(id: DatasetId, raw: &RawTests, task_id: &str, line: usize) -> Result<TestSuite, DatasetError> {
    match split_cases(id, raw) {
        Ok(suite) => Ok(suite),
        Err(SplitError::Unparseable { fallback, .. }) => Ok(fallback),
        Err(_) => Err(DatasetError::EmptySuite { task_id: task_id.to_string(), line }),
    }
}

fn human_eval_record(
    id: DatasetId,
    obj: &serde_json::Map<String, Value>,
    line: usize,
) -> Result<Problem, DatasetError> {
    let task_id = task_id(obj, line)?;
    let prompt = str_field(obj, "prompt", line)?;
    let entry_point = str_field(obj, "entry_point", line)?;
    let test = str_field(obj, "test", line)?;
    let canonical = match obj.get("canonical_solution") {
        Some(Value::String(body)) => Some(format!("{prompt}{body}")),
        _ => None,
    };
    if entry_point.trim().is_empty() {
        return Err(DatasetError::Schema { field: "entry_point", line });
    }
    let raw = RawTests::CheckFunction { test, entry_point: entry_point.clone() };
    let suite = suite_or_fallback(id, &raw, &task_id, line)?;
    Ok(Problem {
        task_id,
        description: prompt,
        entry_point: Some(entry_point),
        suite,
        dataset: id,
        canonical_solution: canonical,
    })
}

fn mbpp_record(
    id: DatasetId,
    obj: &serde_json::Map<String, Value>,
    line: usize,
) -> Result<Problem, DatasetError> {
    let task_id = task_id(obj, line)?;
    let text = str_field(obj, "text", line)?;
    let code = str_field(obj, "code", line)?;
    let test_list = match obj.get("test_list") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(String::from))
            .collect::<Option<Vec<_>>>()
            .ok_or(DatasetError::Schema { field: "test_list", line })?,
        _ => return Err(DatasetError::Schema { field: "test_list", line }),
    };
    let setup = match obj.get("test_setup_code") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(DatasetError::Schema { field: "test_setup_code", line }),
    };
    let raw = RawTests::AssertList { test_list, setup };
    let suite = suite_or_fallback(id, &raw, &task_id, line)?;
    Ok(Problem {
        task_id,
        description: text,
        entry_point: pysrc::first_def_name(&code),
        suite,
        dataset: id,
        canonical_solution: Some(code),
    })
}

/// Whether `candidate` binds the problem's entry point at top level.
pub fn defines_entry_point(candidate: &str, entry_point: &str) -> bool {
    pysrc::binds_top_level(candidate, entry_point)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("candidate does not define `{0}`")]
    MissingEntryPoint(String),
    #[error("case index {index} out of range for {total} cases")]
    CaseOutOfRange { index: usize, total: usize },
}

/// Candidate source plus the run-time check that it defines the entry point.
pub fn checked_source(p: &Problem, candidate: &str) -> Result<String, AssembleError> {
    let mut source = String::from(candidate);
    if !source.ends_with('\n') {
        source.push('\n');
    }
    if let Some(ep) = &p.entry_point {
        if !defines_entry_point(candidate, ep) {
            return Err(AssembleError::MissingEntryPoint(ep.clone()));
        }
        source.push_str(&format!(
            "\nassert callable(globals().get({ep:?})), \"candidate does not define {ep}\"\n"
        ));
    }
    Ok(source)
}

/// The program executed for case `case_index`: candidate, entry-point
/// check, suite setup, then the case itself.
pub fn assemble_case_program(p: &Problem, candidate: &str, case_index: usize) -> Result<String, AssembleError> {
    let case = p.suite.cases.get(case_index).ok_or(AssembleError::CaseOutOfRange {
        index: case_index,
        total: p.suite.cases.len(),
    })?;
    let mut program = checked_source(p, candidate)?;
    program.push('\n');
    program.push_str(&p.suite.setup);
    if !program.ends_with('\n') {
        program.push('\n');
    }
    program.push_str(case);
    Ok(program)
}

/// Builds the executor request for a candidate. The worker concatenates
/// `source`, `setup` and each case exactly as [`assemble_case_program`] does.
pub fn exec_request(
    p: &Problem,
    candidate: &str,
    id: impl Into<String>,
    timeout_ms: u64,
) -> Result<ExecRequest, AssembleError> {
    let mut source = checked_source(p, candidate)?;
    source.push('\n');
    Ok(ExecRequest {
        id: id.into(),
        source,
        setup: p.suite.setup.clone(),
        cases: p.suite.cases.clone(),
        timeout_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const HE_LINE: &str = r#"{"task_id": "HumanEval/0", "prompt": "def add(a, b):\n    \"\"\"Add.\"\"\"\n", "entry_point": "add", "canonical_solution": "    return a + b\n", "test": "def check(candidate):\n    assert candidate(1, 2) == 3\n    assert candidate(0, 0) == 0\n"}"#;
    const MBPP_LINE: &str = r#"{"task_id": 11, "text": "Write a function to square a number.", "code": "def square(x):\r\n  return x * x", "test_list": ["assert square(2) == 4", "assert square(3) == 9", "assert square(0) == 0"], "test_setup_code": ""}"#;

    #[test]
    fn dataset_names_round_trip() {
        for id in DatasetId::ALL {
            assert_eq!(id.as_str().parse::<DatasetId>(), Ok(id));
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert_eq!("MBPP+".parse::<DatasetId>(), Ok(DatasetId::MbppPlus));
        assert_eq!("HumanEval-ET".parse::<DatasetId>(), Ok(DatasetId::HumanEvalEt));
        assert!(!DatasetId::MbppPlus.apr_supported());
        assert!(DatasetId::Mbpp.apr_supported());
    }

    #[test]
    fn parses_human_eval_record() {
        let problems = parse_dataset(DatasetId::HumanEval, HE_LINE).unwrap();
        let p = &problems[0];
        assert_eq!(p.task_id, "HumanEval/0");
        assert_eq!(p.entry_point.as_deref(), Some("add"));
        assert_eq!(p.suite.cases.len(), 2);
        assert!(p.description.starts_with("def add"));
        assert!(p.canonical_solution.as_ref().unwrap().ends_with("return a + b\n"));
    }

    #[test]
    fn parses_mbpp_record() {
        let text = format!("{MBPP_LINE}\n\n");
        let problems = parse_dataset(DatasetId::Mbpp, &text).unwrap();
        let p = &problems[0];
        assert_eq!(p.task_id, "11");
        assert_eq!(p.entry_point.as_deref(), Some("square"));
        assert_eq!(p.suite.cases.len(), 3);
    }

    #[test]
    fn schema_errors_name_the_line() {
        let bad = "{\"task_id\": \"HumanEval/1\", \"prompt\": \"x\", \"entry_point\": \"f\"}";
        let text = format!("{HE_LINE}\n{bad}\n");
        assert_eq!(
            parse_dataset(DatasetId::HumanEval, &text),
            Err(DatasetError::Schema { field: "test", line: 2 })
        );
        let dup = format!("{HE_LINE}\n{HE_LINE}\n");
        assert!(matches!(
            parse_dataset(DatasetId::HumanEval, &dup),
            Err(DatasetError::DuplicateTaskId { line: 2, .. })
        ));
        assert!(matches!(parse_dataset(DatasetId::Mbpp, "[1]"), Err(DatasetError::Json { line: 1, .. })));
    }

    #[test]
    fn parsing_is_pure() {
        let text = format!("{HE_LINE}\n");
        assert_eq!(parse_dataset(DatasetId::HumanEval, &text), parse_dataset(DatasetId::HumanEval, &text));
    }

    fn problem() -> Problem {
        parse_dataset(DatasetId::HumanEval, HE_LINE).unwrap().remove(0)
    }

    #[test]
    fn assembles_case_programs() {
        let p = problem();
        let program = assemble_case_program(&p, "def add(a, b):\n    return a + b", 1).unwrap();
        let def = program.find("def add").unwrap();
        let check = program.find("assert callable").unwrap();
        let bind = program.find("candidate = add").unwrap();
        let case = program.find("assert candidate(0, 0) == 0").unwrap();
        assert!(def < check && check < bind && bind < case);
        assert_eq!(program, assemble_case_program(&p, "def add(a, b):\n    return a + b", 1).unwrap());
        assert_eq!(
            assemble_case_program(&p, "def plus(a, b):\n    return a + b\n", 0),
            Err(AssembleError::MissingEntryPoint("add".into()))
        );
        assert_eq!(
            assemble_case_program(&p, "def add(a, b): return a + b\n", 2),
            Err(AssembleError::CaseOutOfRange { index: 2, total: 2 })
        );
    }

    #[test]
    fn request_matches_assembled_programs() {
        let p = problem();
        let candidate = "def add(a, b):\n    return a + b\n";
        let req = exec_request(&p, candidate, "HumanEval/0::mot", 10_000).unwrap();
        for (i, case) in req.cases.iter().enumerate() {
            let joined = format!("{}{}{}", req.source, req.setup, case);
            assert_eq!(joined, assemble_case_program(&p, candidate, i).unwrap());
        }
        assert_eq!(req.cases, vec![
            String::from("assert candidate(1, 2) == 3\n"),
            String::from("assert candidate(0, 0) == 0\n"),
        ]);
    }
}
