//! Regenerates the replay bundle used by the end-to-end tests.
//!
//! Writes `problems.jsonl`, one provider fixture per distinct request under
//! `llm/`, and `exec.json` with execution reports recorded by running every
//! candidate through the test worker. `manifest.json` is maintained by hand
//! and is not touched.
//!
//! ```text
//! cargo run -p mot --example build_bundle -- crates/mot/tests/data/bundle
//! ```

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mot::fixtures::FixtureStore;
use mot::mot_core::benchmark::{exec_request, parse_dataset, DatasetId, Problem};
use mot::mot_core::exec::{evaluate_candidate, WireResponse};
use mot::mot_core::graph::{to_schema_json, Level, MlrGraph, MlrNode, ReasoningBlock, TaskElements};
use mot::mot_core::llm::{fixture_key, ChatRequest, ChatResponse, CompletionService, ProviderError, Usage};
use mot::mot_core::strategy::{generate, GenerateOptions, StrategyId};
use mot::run::eval_id;
use mot::worker::WorkerBackend;
use serde_json::json;

const MODEL: &str = "gpt-4o-mini";

const STRATEGIES: [StrategyId; 5] = [
    StrategyId::Mot,
    StrategyId::ZeroShot,
    StrategyId::Cot,
    StrategyId::MotNoGraph,
    StrategyId::MotNoModularization,
];

struct Reply {
    content: String,
    usage: Usage,
}

fn reply(content: impl Into<String>, in_tokens: u64, out_tokens: u64) -> Reply {
    Reply { content: content.into(), usage: Usage::new(in_tokens, out_tokens) }
}

fn code(prose: &str, body: &str) -> String {
    format!("{prose}\n\n```python\n{}\n```\n", body.trim())
}

struct Design {
    task_id: &'static str,
    prompt: &'static str,
    entry_point: &'static str,
    canonical: &'static str,
    test: &'static str,
    /// Successive graph responses; the graph phase stops at the first valid one.
    graphs: Vec<String>,
    mot_code: Option<&'static str>,
    mono_code: Option<&'static str>,
    no_graph: &'static str,
    zero_shot: &'static str,
    cot: &'static str,
}

type NodeSpec<'a> = (&'a str, Level, &'a str, [&'a str; 3], &'a [&'a str]);

fn graph(task: (&str, &str, &str), nodes: &[NodeSpec<'_>]) -> String {
    let nodes = nodes
        .iter()
        .map(|(id, level, title, [p, r, s], children)| {
            let field = |x: &str| (!x.is_empty()).then(|| x.to_string());
            MlrNode::new(*id, *level, *title)
                .with_reasoning(ReasoningBlock {
                    task_purpose: field(p),
                    decision_rationale: field(r),
                    execution_strategy: field(s),
                })
                .with_children(children.iter().copied())
        })
        .collect();
    let g = MlrGraph::from_nodes(nodes).expect("designed graphs resolve");
    let t = TaskElements::new(task.0, task.1, task.2);
    format!("Here is the MLR graph for the task.\n\n```json\n{}\n```\n", to_schema_json(&g, &t))
}

const NONE: &[&str] = &[];
const BLANK: [&str; 3] = ["", "", ""];

fn designs() -> Vec<Design> {
    use Level::{Detailed as D, High as H, Intermediate as M};
    vec![
        Design {
            task_id: "Sample/0",
            prompt: "def largest_sum_divided(lists: list, k: float) -> float:\n    \"\"\"Given a list of sublists of numbers and a number k, find the largest\n    sum among the sublists and divide it by k. Raise ValueError when k is\n    zero or when there are no sublists.\n    >>> largest_sum_divided([[1, 2], [3, 4]], 2)\n    3.5\n    \"\"\"\n",
            entry_point: "largest_sum_divided",
            canonical: "    if k == 0 or not lists:\n        raise ValueError(\"invalid input\")\n    return max(sum(s) for s in lists) / k\n",
            test: "\n\nMETADATA = {}\n\n\ndef check(candidate):\n    assert candidate([[1, 2], [3, 4]], 2) == 3.5\n    assert candidate([[5], [-1, 10], []], 1) == 9\n    assert candidate([[-3, -4], [-1]], 1) == -1\n    assert candidate([[0.5, 0.25]], 0.25) == 3.0\n",
            graphs: vec![graph(
                (
                    "Find the largest sublist sum and divide it by K",
                    "lists: list of lists of numbers; k: number; returns a float",
                    "k must be non-zero and lists must be non-empty",
                ),
                &[
                    ("H1", H, "Validate the input", ["Ensure the inputs are usable before any computation", "Failing early keeps later steps simple", "Check k and the list of sublists"], &["M1", "M2"]),
                    ("H2", H, "Compute the sum of each sublist", ["Calculate the total of each sublist for comparison", "The built-in sum() is efficient and simple", "Iterate over the sublists and call sum() on each"], &["M3", "M4"]),
                    ("H3", H, "Divide the largest sum by K", ["Produce the final result", "Division by k is the last step of the task", "Return max_sum / k"], &["M5"]),
                    ("M1", M, "Check that K is non-zero", ["Avoid division by zero", "", "Compare k with 0"], &["D1"]),
                    ("M2", M, "Check that there is at least one sublist", ["max() of an empty sequence fails", "", "Test the truthiness of lists"], &["D2"]),
                    ("M3", M, "Iterate through each sublist", ["Visit every sublist once", "", ""], &["D3"]),
                    ("M4", M, "Track the largest sublist sum", ["Keep the best total seen so far", "", ""], &["D4"]),
                    ("M5", M, "Perform the division", ["Scale the largest sum", "", ""], &["D5"]),
                    ("D1", D, "Raise ValueError when k == 0", BLANK, NONE),
                    ("D2", D, "Raise ValueError when lists is empty", BLANK, NONE),
                    ("D3", D, "Use a for loop to iterate over sublist and call sum()", BLANK, NONE),
                    ("D4", D, "Use max() over the computed sums", BLANK, NONE),
                    ("D5", D, "Return max_sum / k as a float", BLANK, NONE),
                ],
            )],
            mot_code: Some(
                "def validate_input(lists, k):\n    if k == 0:\n        raise ValueError(\"k must be non-zero\")\n    if not lists:\n        raise ValueError(\"lists must be non-empty\")\n\n\ndef compute_sublist_sum(sublist):\n    return sum(sublist)\n\n\ndef find_max_sublist_sum(lists):\n    return max(compute_sublist_sum(s) for s in lists)\n\n\ndef divide_max_sum(max_sum, k):\n    return max_sum / k\n\n\ndef largest_sum_divided(lists, k):\n    validate_input(lists, k)\n    return divide_max_sum(find_max_sublist_sum(lists), k)\n",
            ),
            mono_code: Some(
                "def largest_sum_divided(lists, k):\n    if k == 0 or not lists:\n        raise ValueError(\"invalid input\")\n    best = None\n    for sub in lists:\n        total = sum(sub)\n        if best is None or total > best:\n            best = total\n    return best / k\n",
            ),
            no_graph: "def largest_sum_divided(lists, k):\n    if k == 0 or not lists:\n        raise ValueError(\"invalid input\")\n    best = 0\n    for sub in lists:\n        best = max(best, sum(sub))\n    return best / k\n",
            zero_shot: "def largest_sum_divided(lists, k):\n    if k == 0 or not lists:\n        raise ValueError(\"invalid input\")\n    return max(sum(s) for s in lists) // k\n",
            cot: "def largest_sum_divided(lists, k):\n    if k == 0 or not lists:\n        raise ValueError(\"invalid input\")\n    return max(sum(s) for s in lists) / k\n",
        },
        Design {
            task_id: "Sample/1",
            prompt: "def running_max(numbers: list) -> list:\n    \"\"\"Return a list whose i-th element is the maximum of numbers[:i + 1].\n    >>> running_max([1, 3, 2])\n    [1, 3, 3]\n    \"\"\"\n",
            entry_point: "running_max",
            canonical: "    result = []\n    for n in numbers:\n        result.append(n if not result else max(result[-1], n))\n    return result\n",
            test: "\n\nMETADATA = {}\n\n\ndef check(candidate):\n    assert candidate([]) == []\n    assert candidate([1, 3, 2, 5, 4]) == [1, 3, 3, 5, 5]\n    assert candidate([-2, -5, -1]) == [-2, -2, -1]\n",
            graphs: vec![graph(
                ("Prefix maxima of a list", "numbers: list of ints; returns a list of the same length", ""),
                &[
                    ("H1", H, "Scan the list keeping the maximum so far", ["Each output depends only on the prefix", "One pass is enough", ""], &["M1", "M2"]),
                    ("M1", M, "Initialise from the first element", ["Negative inputs must not be compared against 0", "", ""], &["D1"]),
                    ("M2", M, "Append the running maximum after each element", BLANK, &["D2"]),
                    ("D1", D, "Start with current = None", BLANK, NONE),
                    ("D2", D, "current = max(current, n); result.append(current)", BLANK, NONE),
                ],
            )],
            mot_code: Some(
                "def update_max(current, value):\n    return value if current is None else max(current, value)\n\n\ndef running_max(numbers):\n    result = []\n    current = None\n    for n in numbers:\n        current = update_max(current, n)\n        result.append(current)\n    return result\n",
            ),
            mono_code: Some(
                "def running_max(numbers):\n    result = []\n    current = None\n    for n in numbers:\n        current = n if current is None else max(current, n)\n        result.append(current)\n    return result\n",
            ),
            no_graph: "def running_max(numbers):\n    result = []\n    for i, n in enumerate(numbers):\n        result.append(n if i == 0 else max(result[-1], n))\n    return result\n",
            zero_shot: "def running_max(numbers):\n    out = []\n    for n in numbers:\n        out.append(max(out[-1], n) if out else n)\n    return out\n",
            cot: "def running_max(numbers):\n    result = []\n    current = 0\n    for n in numbers:\n        current = max(current, n)\n        result.append(current)\n    return result\n",
        },
        Design {
            task_id: "Sample/2",
            prompt: "def count_vowels(s: str) -> int:\n    \"\"\"Count the vowels a, e, i, o, u in s, ignoring case. The letter y also\n    counts as a vowel, but only when it is the last character.\n    >>> count_vowels(\"abcde\")\n    2\n    \"\"\"\n",
            entry_point: "count_vowels",
            canonical: "    lowered = s.lower()\n    n = sum(ch in \"aeiou\" for ch in lowered)\n    return n + (1 if lowered.endswith(\"y\") else 0)\n",
            test: "\n\nMETADATA = {}\n\n\ndef check(candidate):\n    assert candidate(\"abcde\") == 2\n    assert candidate(\"ACEDY\") == 3\n    assert candidate(\"\") == 0\n    assert candidate(\"rhythm\") == 0\n",
            graphs: vec![
                graph(
                    ("Count vowels", "s: str; returns int", "case-insensitive; y only at the end"),
                    &[
                        ("H1", H, "Count the vowels", BLANK, &["M1"]),
                        ("M1", M, "Lower-case the input", BLANK, &["D1"]),
                        ("D1", D, "Call s.lower()", BLANK, NONE),
                        ("D2", D, "Add one when the word ends in y", BLANK, NONE),
                    ],
                ),
                graph(
                    ("Count vowels", "s: str; returns int", "case-insensitive; y only at the end"),
                    &[
                        ("H1", H, "Count the vowels", ["Core of the task", "", ""], &["M1", "M2"]),
                        ("M1", M, "Count a, e, i, o, u", ["Case must not matter", "", ""], &["D1"]),
                        ("M2", M, "Handle a trailing y", ["y is a vowel only at the end", "", ""], &["D2"]),
                        ("D1", D, "sum(ch in 'aeiou' for ch in s.lower())", BLANK, NONE),
                        ("D2", D, "Add one when s.lower().endswith('y')", BLANK, NONE),
                    ],
                ),
            ],
            mot_code: Some(
                "def count_plain_vowels(text):\n    return sum(1 for ch in text if ch in \"aeiou\")\n\n\ndef trailing_y(text):\n    return 1 if text.endswith(\"y\") else 0\n\n\ndef count_vowels(s):\n    lowered = s.lower()\n    return count_plain_vowels(lowered) + trailing_y(lowered)\n",
            ),
            mono_code: Some(
                "def count_vowels(s):\n    return sum(1 for ch in s.lower() if ch in \"aeiou\")\n",
            ),
            no_graph: "def count_vowels(s):\n    lowered = s.lower()\n    count = sum(1 for ch in lowered if ch in \"aeiou\")\n    if lowered.endswith(\"y\"):\n        count += 1\n    return count\n",
            zero_shot: "def count_vowels(s):\n    return sum(1 for ch in s if ch in \"aeiou\") + (1 if s.endswith(\"y\") else 0)\n",
            cot: "def count_vowels(s):\n    s = s.lower()\n    total = 0\n    for ch in s:\n        if ch in \"aeiou\":\n            total += 1\n    if s and s[-1] == \"y\":\n        total += 1\n    return total\n",
        },
        Design {
            task_id: "Sample/3",
            prompt: "def is_balanced(s: str) -> bool:\n    \"\"\"Return True when every bracket in s, one of ()[]{}, is closed by the\n    matching bracket in the right order.\n    >>> is_balanced(\"([])\")\n    True\n    \"\"\"\n",
            entry_point: "is_balanced",
            canonical: "    pairs = {\")\": \"(\", \"]\": \"[\", \"}\": \"{\"}\n    stack = []\n    for ch in s:\n        if ch in \"([{\":\n            stack.append(ch)\n        elif ch in pairs:\n            if not stack or stack.pop() != pairs[ch]:\n                return False\n    return not stack\n",
            test: "\n\nMETADATA = {}\n\n\ndef check(candidate):\n    assert candidate(\"([]{})\") is True\n    assert candidate(\"([)]\") is False\n    assert candidate(\"((\") is False\n    assert candidate(\"\") is True\n    assert candidate(\"}{\") is False\n",
            graphs: vec![graph(
                ("Check bracket balance", "s: str; returns bool", "three bracket kinds"),
                &[
                    ("H1", H, "Match brackets with a stack", ["Order matters, so counting is not enough", "", ""], &["M1", "M2"]),
                    ("M1", M, "Push opening brackets", BLANK, &["D1"]),
                    ("M2", M, "Pop and compare on closing brackets", BLANK, &["D1", "D2"]),
                    ("D1", D, "Keep a dict from closing to opening bracket", BLANK, NONE),
                    ("D2", D, "Return False on mismatch; True when the stack ends empty", BLANK, NONE),
                ],
            )],
            mot_code: Some(
                "PAIRS = {\")\": \"(\", \"]\": \"[\", \"}\": \"{\"}\n\n\ndef closes(stack, ch):\n    return bool(stack) and stack.pop() == PAIRS[ch]\n\n\ndef is_balanced(s):\n    stack = []\n    for ch in s:\n        if ch in \"([{\":\n            stack.append(ch)\n        elif ch in PAIRS and not closes(stack, ch):\n            return False\n    return not stack\n",
            ),
            mono_code: Some(
                "def check_balanced(s):\n    stack = []\n    for ch in s:\n        if ch in \"([{\":\n            stack.append(ch)\n        elif ch in \")]}\":\n            if not stack:\n                return False\n            stack.pop()\n    return not stack\n",
            ),
            no_graph: "def is_balanced(s):\n    pairs = {\")\": \"(\", \"]\": \"[\", \"}\": \"{\"}\n    for close, open_ in pairs.items():\n        if s.count(open_) != s.count(close):\n            return False\n    return True\n",
            zero_shot: "def is_balanced(s):\n    pairs = {\")\": \"(\", \"]\": \"[\", \"}\": \"{\"}\n    stack = []\n    for ch in s:\n        if ch in \"([{\":\n            stack.append(ch)\n        elif ch in pairs:\n            if not stack or stack.pop() != pairs[ch]:\n                return False\n    return not stack\n",
            cot: "def is_balanced(s):\n    stack = []\n    match = {\")\": \"(\", \"]\": \"[\", \"}\": \"{\"}\n    for ch in s:\n        if ch in match.values():\n            stack.append(ch)\n        elif ch in match:\n            if not stack or stack[-1] != match[ch]:\n                return False\n            stack.pop()\n    return len(stack) == 0\n",
        },
        Design {
            task_id: "Sample/4",
            prompt: "def rotate_left(xs: list, k: int) -> list:\n    \"\"\"Rotate xs to the left by k positions. k may exceed len(xs).\n    >>> rotate_left([1, 2, 3], 1)\n    [2, 3, 1]\n    \"\"\"\n",
            entry_point: "rotate_left",
            canonical: "    if not xs:\n        return []\n    k %= len(xs)\n    return xs[k:] + xs[:k]\n",
            test: "\n\nMETADATA = {}\n\n\ndef check(candidate):\n    assert candidate([1, 2, 3, 4], 1) == [2, 3, 4, 1]\n    assert candidate([1, 2, 3], 5) == [3, 1, 2]\n    assert candidate([], 3) == []\n",
            graphs: vec![
                "The task is simple: slice the list at k and swap the two halves.".to_string(),
                graph(
                    ("Rotate a list", "xs: list; k: int", ""),
                    &[
                        ("H1", H, "Rotate by slicing", BLANK, &["D1"]),
                        ("D1", D, "Return xs[k:] + xs[:k]", BLANK, NONE),
                    ],
                ),
                graph(
                    ("Rotate a list", "xs: list; k: int", ""),
                    &[
                        ("M1", M, "Reduce k modulo the length", BLANK, &["D1"]),
                        ("D1", D, "Return xs[k:] + xs[:k]", BLANK, NONE),
                    ],
                ),
            ],
            mot_code: None,
            mono_code: None,
            no_graph: "def rotate_left(xs, k):\n    k = k % len(xs)\n    return xs[k:] + xs[:k]\n",
            zero_shot: "def rotate_left(xs, k):\n    if not xs:\n        return []\n    k %= len(xs)\n    return xs[k:] + xs[:k]\n",
            cot: "def rotate_left(xs, k):\n    return xs[k:] + xs[:k]\n",
        },
    ]
}

/// Token usage attached to each kind of response. Graph attempt `a` costs
/// more input because the conversation grows.
fn graph_usage(attempt: u64) -> (u64, u64) {
    (500 + 300 * attempt, 350)
}

/// Replies in order for one (problem, strategy) run.
fn script(d: &Design, strategy: StrategyId) -> Vec<Reply> {
    let with_graph = |code: Option<&str>, code_usage: (u64, u64), fallback: Reply| {
        let mut out = Vec::new();
        let mut valid = false;
        for (a, g) in d.graphs.iter().enumerate() {
            let (i, o) = graph_usage(a as u64);
            out.push(reply(g.clone(), i, o));
            if a + 1 == d.graphs.len() && code.is_some() {
                valid = true;
            }
        }
        match (valid, code) {
            (true, Some(c)) => out.push(reply(code_prose(c), code_usage.0, code_usage.1)),
            _ => out.push(fallback),
        }
        out
    };
    match strategy {
        StrategyId::Mot => with_graph(d.mot_code, (900, 250), reply(code_prose(d.no_graph), 300, 280)),
        StrategyId::MotNoModularization => {
            with_graph(d.mono_code, (900, 200), reply(code_prose(d.zero_shot), 150, 120))
        }
        StrategyId::ZeroShot => vec![reply(code_prose(d.zero_shot), 150, 120)],
        StrategyId::Cot => vec![reply(
            code(
                "Let's think step by step. First handle the inputs, then compute the result, then return it.",
                d.cot,
            ),
            200,
            260,
        )],
        StrategyId::MotNoGraph => vec![reply(code_prose(d.no_graph), 300, 280)],
        other => panic!("{other} is not part of the bundle"),
    }
}

fn code_prose(body: &str) -> String {
    code("Here is the implementation.", body)
}

/// Serves a fixed script and stores every exchange, refusing to store two
/// different responses for the same request.
struct Recorder<'a> {
    script: RefCell<Vec<Reply>>,
    store: &'a FixtureStore,
}

impl CompletionService for Recorder<'_> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut script = self.script.borrow_mut();
        if script.is_empty() {
            panic!("script exhausted");
        }
        let r = script.remove(0);
        let resp = ChatResponse { content: r.content, usage: r.usage, latency_ms: 0, attempts: 1 };
        let key = fixture_key(req);
        match self.store.get(&key).expect("store readable") {
            Some(existing) => assert_eq!(existing, (&resp).into(), "conflicting replies for one request"),
            None => {
                self.store.record(req, &resp, false).expect("store writable");
            }
        }
        Ok(resp)
    }
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/bundle"));
    let llm_dir = dir.join("llm");
    if llm_dir.exists() {
        std::fs::remove_dir_all(&llm_dir).expect("clear old fixtures");
    }
    let store = FixtureStore::create(&llm_dir).expect("create fixture dir");

    let designs = designs();
    let mut lines = String::new();
    for d in &designs {
        let rec = json!({
            "task_id": d.task_id,
            "prompt": d.prompt,
            "entry_point": d.entry_point,
            "canonical_solution": d.canonical,
            "test": d.test,
        });
        lines.push_str(&rec.to_string());
        lines.push('\n');
    }
    std::fs::write(dir.join("problems.jsonl"), &lines).expect("write problems");
    let problems: Vec<Problem> = parse_dataset(DatasetId::HumanEval, &lines).expect("problems parse");

    let worker = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/exec_worker.py");
    let backend = WorkerBackend::new(vec!["python3".into(), worker.to_string_lossy().into_owned()], 4);
    let opts = GenerateOptions::new(MODEL);
    let mut reports: BTreeMap<String, WireResponse> = BTreeMap::new();
    for (d, p) in designs.iter().zip(&problems) {
        for s in STRATEGIES {
            let recorder = Recorder { script: RefCell::new(script(d, s)), store: &store };
            let record = generate(s, p, &recorder, Some(&backend), &opts).expect("scripted generation succeeds");
            assert!(recorder.script.borrow().is_empty(), "{} {s}: unused replies", d.task_id);
            let id = eval_id(&p.task_id, s, 0);
            let Ok(req) = exec_request(p, &record.extracted_code, id.clone(), 10_000) else {
                println!("{id}: candidate lacks the entry point, no execution needed");
                continue;
            };
            let report = evaluate_candidate(&backend, &req).expect("worker runs");
            println!("{id}: {}/{}", report.cases_passed, report.cases_total);
            reports.insert(
                id,
                WireResponse { id: String::new(), results: report.results, duration_ms: report.duration_ms },
            );
        }
    }
    let exec: BTreeMap<&String, serde_json::Value> = reports
        .iter()
        .map(|(id, w)| (id, json!({"results": w.results, "duration_ms": w.duration_ms})))
        .collect();
    let mut text = serde_json::to_string_pretty(&exec).expect("serialize reports");
    text.push('\n');
    std::fs::write(dir.join("exec.json"), text).expect("write exec.json");
    println!("{} provider fixtures, {} execution reports", store.len().unwrap(), reports.len());
}
