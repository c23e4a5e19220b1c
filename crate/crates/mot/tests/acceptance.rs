//! Acceptance criteria 1-7, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail for reasons
//! outside the code; the target still fails if one of them starts passing,
//! or if any other criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{close, manifest, replay_config, BUNDLE_STRATEGIES};
use mot::mot_core::benchmark::{DatasetId, Problem, TestSuite};
use mot::mot_core::exec::{CaseResult, CaseStatus, ExecError, ExecReport, ExecRequest, ExecutionBackend};
use mot::mot_core::graph::{parse_graph, serialize_for_prompt, to_schema_json, validate_graph_with, ValidationLimits};
use mot::mot_core::llm::{ScriptedClient, Usage};
use mot::mot_core::metrics::{
    avg_pass_ratio, cost_summary, fmt_pct, pass_at_1, relative_delta, Pricing, ProblemOutcome,
};
use mot::mot_core::prompt::Prompt;
use mot::mot_core::strategy::{generate, CallRecord, CallStage, GenerateOptions, GenerationRecord, StrategyId};
use mot::report::build_report;
use mot::run::{cmd_run, LOG_FILE, SUMMARY_FILE};
use mot::runlog::read_log;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (criterion, reason) pairs that fail by construction.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    2,
    "the printed CoT/HumanEval cell -4.68% is not reproducible from (87.8, 92.1); the formula gives -4.6688 -> -4.67%",
)];

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(format!("{} ms", took.as_millis()))
}

fn metric_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    for set in 0..200 {
        let size = rng.random_range(1..=500);
        let outcomes = support::random_outcomes(&mut rng, size);
        let p = pass_at_1(&outcomes).map_err(|e| e.to_string())?;
        let a = avg_pass_ratio(&outcomes, DatasetId::HumanEval).map_err(|e| e.to_string())?;
        let (po, ao) = (support::oracle_pass_at_1(&outcomes), support::oracle_apr(&outcomes));
        ensure((p - po).abs() <= 1e-9, || format!("set {set}: Pass@1 {p} vs oracle {po}"))?;
        ensure((a - ao).abs() <= 1e-9, || format!("set {set}: APR {a} vs oracle {ao}"))?;
    }
    within(start, Duration::from_secs(5)).map(|t| format!("200 sets, {t}"))
}

fn table_deltas() -> Result<String, String> {
    let cells = [(88.4, 92.1, "-4.02%"), (87.8, 92.1, "-4.68%"), (85.4, 92.1, "-7.27%")];
    let mut bad = Vec::new();
    for (value, reference, want) in cells {
        let got = relative_delta(value, reference).map_err(|e| e.to_string())?;
        if got != want {
            bad.push(format!("({value}, {reference}) gave {got}, expected {want}"));
        }
    }
    if bad.is_empty() {
        Ok("3 cells".into())
    } else {
        Err(bad.join("; "))
    }
}

fn outcomes_with(solved: usize, total: usize) -> Vec<ProblemOutcome> {
    (0..total)
        .map(|i| {
            let ok = i < solved;
            ProblemOutcome {
                task_id: format!("HumanEval/{i}"),
                samples_total: 1,
                samples_correct: u32::from(ok),
                cases_total: 4,
                cases_passed: if ok { 4 } else { 1 },
            }
        })
        .collect()
}

fn rounding_anchor() -> Result<String, String> {
    for (solved, total, want) in [(151, 164, "92.1"), (164, 164, "100.0")] {
        let got = fmt_pct(pass_at_1(&outcomes_with(solved, total)).map_err(|e| e.to_string())?);
        ensure(got == want, || format!("{solved}/{total} rendered {got}, expected {want}"))?;
    }
    Ok("151/164 -> 92.1, 164/164 -> 100.0".into())
}

fn fuzz_input(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => {
            let n = rng.random_range(0..400);
            let bytes: Vec<u8> = (0..n).map(|_| rng.random()).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => {
            const PIECES: &[&str] = &[
                "{", "}", "[", "]", "\"", ":", ",", "```json\n", "```\n", "# ", "## High-Level", "### H1:",
                "- children: ", "\"nodes\"", "\"level\"", "\"high\"", "\"id\"", "\"children\"", "null", "\n", "H1",
                "M1", "D1", "Task Purpose:", "\"task_analysis\"", "1e999", "-", " ",
            ];
            (0..rng.random_range(0..80)).map(|_| PIECES[rng.random_range(0..PIECES.len())]).collect()
        }
        _ => {
            let g = support::random_graph(rng, true);
            let t = support::random_task(rng);
            let text = if rng.random_bool(0.5) {
                to_schema_json(&g, &t)
            } else {
                serialize_for_prompt(&g, &t).unwrap_or_else(|_| to_schema_json(&g, &t))
            };
            let mut at = rng.random_range(0..=text.len());
            while !text.is_char_boundary(at) {
                at -= 1;
            }
            let junk: String = (0..rng.random_range(0..6)).map(|_| ['{', '}', '"', '\n', '#', ':', 'x'][rng.random_range(0..7)]).collect();
            format!("{}{}{}", &text[..at], junk, &text[at..])
        }
    }
}

fn graph_suite() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let limits = ValidationLimits::default();
    let mut accepted = 0;
    for i in 0..1000 {
        let g = support::random_graph(&mut rng, true);
        let ok = validate_graph_with(&g, &limits).ok();
        ensure(ok == support::brute_force_ok(&g, limits.max_nodes), || format!("graph {i}: validator said {ok}"))?;
        if ok {
            accepted += 1;
            let t = support::random_task(&mut rng);
            let text = serialize_for_prompt(&g, &t).map_err(|e| format!("graph {i}: {e}"))?;
            let (back, _) = parse_graph(&text).map_err(|e| format!("graph {i}: fallback parse failed: {e}"))?;
            ensure(back.structurally_eq(&g), || format!("graph {i}: round trip changed the structure"))?;
        }
    }
    ensure(accepted > 100 && accepted < 900, || format!("generator skewed: {accepted} of 1000 accepted"))?;
    for i in 0..10_000 {
        let input = fuzz_input(&mut rng);
        catch_unwind(|| {
            let _ = parse_graph(&input);
        })
        .map_err(|_| format!("fuzz input {i} aborted the parser: {input:?}"))?;
    }
    within(start, Duration::from_secs(30)).map(|t| format!("{accepted}/1000 accepted, 10000 fuzz inputs, {t}"))
}

fn end_to_end() -> Result<String, String> {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = replay_config(a.path(), &BUNDLE_STRATEGIES);
    let out = cmd_run(&cfg).map_err(|e| e.to_string())?;
    ensure(out.infra_failures == 0, || format!("{} infra failures", out.infra_failures))?;
    let m = manifest();
    for block in &out.summary.blocks {
        let s = block.strategy.as_str();
        let want = &m["expected"][s];
        let got = block.metrics.as_ref().ok_or_else(|| format!("{s}: no metrics"))?;
        for (name, value) in [
            ("pass_at_1", got.pass_at_1_pct),
            ("apr", got.apr_pct.unwrap_or(f64::NAN)),
            ("avg_in", got.avg_in_tokens),
            ("avg_out", got.avg_out_tokens),
            ("avg_cost", got.avg_cost_usd),
        ] {
            let expected = want[name].as_f64().ok_or_else(|| format!("manifest lacks {s}.{name}"))?;
            ensure(close(value, expected), || format!("{s}.{name}: {value} vs manifest {expected}"))?;
        }
    }
    cfg.out = b.path().to_path_buf();
    cmd_run(&cfg).map_err(|e| e.to_string())?;
    let first = std::fs::read(a.path().join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
    let second = std::fs::read(b.path().join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
    ensure(first == second, || "summaries differ between runs".into())?;
    within(start, Duration::from_secs(10)).map(|t| format!("5 problems x 5 strategies, {t}"))
}

/// Fails or passes self-tests according to a fixed per-round pattern.
struct PatternBackend(Vec<bool>);

impl ExecutionBackend for PatternBackend {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError> {
        let round: usize = req.id.rsplit("::").next().and_then(|r| r.parse().ok()).unwrap_or(0);
        let pass = self.0.get(round).copied().unwrap_or(false);
        let results = req
            .cases
            .iter()
            .map(|_| if pass { CaseResult::pass() } else { CaseResult::new(CaseStatus::Fail, "AssertionError") })
            .collect();
        Ok(ExecReport::from_results(req.id.clone(), results, 0))
    }
}

fn add_problem() -> Problem {
    Problem {
        task_id: "P/1".into(),
        description: "def add(a, b):\n    \"\"\"Add.\"\"\"\n".into(),
        entry_point: Some("add".into()),
        suite: TestSuite { setup: String::new(), cases: vec!["assert add(1, 2) == 3\n".into()], monolithic: false },
        dataset: DatasetId::HumanEval,
        canonical_solution: None,
    }
}

const GRAPH: &str = "```json\n{\"task_analysis\": {\"goal\": \"Add\", \"io_spec\": \"ints\", \"constraints\": \"\"}, \"nodes\": [{\"id\": \"H1\", \"level\": \"high\", \"title\": \"Sum\", \"children\": [\"M1\"]}, {\"id\": \"M1\", \"level\": \"intermediate\", \"title\": \"Plus\", \"children\": []}]}\n```";
const BAD_GRAPH: &str = "```json\n{\"task_analysis\": {\"goal\": \"Add\"}, \"nodes\": [{\"id\": \"M1\", \"level\": \"intermediate\", \"title\": \"Plus\"}]}\n```";
const CODE: &str = "```python\ndef add(a, b):\n    return a + b\n```";
const CODE_TESTS: &str = "```python\ndef add(a, b):\n    return a + b\n```\n```python\nassert add(1, 1) == 2\n```";

fn call_bounds() -> Result<String, String> {
    let opts = GenerateOptions::new("m");
    let p = add_problem();

    let client = ScriptedClient::new([BAD_GRAPH, "no graph here", BAD_GRAPH, CODE, CODE]);
    let r = generate::<_, PatternBackend>(StrategyId::Mot, &p, &client, None, &opts).map_err(|e| e.to_string())?;
    ensure(r.calls.len() == 4 && r.fallback_used, || format!("mot max path made {} calls", r.calls.len()))?;

    let client = ScriptedClient::new([CODE_TESTS; 6]);
    let r = generate(StrategyId::Codecot, &p, &client, Some(&PatternBackend(vec![false; 6])), &opts)
        .map_err(|e| e.to_string())?;
    ensure(r.calls.len() == 4, || format!("codecot max path made {} calls", r.calls.len()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0006);
    let responses = [GRAPH, BAD_GRAPH, CODE, CODE_TESTS, "```python\n \n```", "I am not sure."];
    let mut runs = 0;
    for s in StrategyId::ALL {
        let bound = s.max_calls(&opts);
        let documented = match s {
            StrategyId::Mot | StrategyId::Codecot | StrategyId::MotNoModularization => 4,
            _ => 2,
        };
        ensure(bound <= documented, || format!("{s}: declared bound {bound} exceeds {documented}"))?;
        for _ in 0..200 {
            let script: Vec<&str> = (0..rng.random_range(0..8)).map(|_| responses[rng.random_range(0..responses.len())]).collect();
            let pattern: Vec<bool> = (0..rng.random_range(0..5)).map(|_| rng.random()).collect();
            let client = ScriptedClient::new(script.iter().copied());
            let _ = generate(s, &p, &client, Some(&PatternBackend(pattern)), &opts);
            let made = client.requests().len();
            ensure(made <= bound, || format!("{s}: {made} calls with script {script:?}"))?;
            runs += 1;
        }
    }
    Ok(format!("both maximum paths hit 4 calls, {runs} scripted runs within bounds"))
}

fn random_records(rng: &mut ChaCha8Rng, size: usize) -> Vec<GenerationRecord> {
    (0..size)
        .map(|i| GenerationRecord {
            task_id: format!("P{i}"),
            strategy: StrategyId::Mot,
            calls: (0..rng.random_range(1..=4))
                .map(|_| CallRecord {
                    stage: CallStage::Code,
                    prompt: Prompt::with_user("q"),
                    response: "a".into(),
                    usage: Usage::new(rng.random_range(0..5000), rng.random_range(0..3000)),
                })
                .collect(),
            parsed_graph: None,
            task_elements: None,
            graph_issues: Vec::new(),
            extracted_code: "pass".into(),
            fallback_used: false,
            wall_time_ms: 0,
            self_tests: Vec::new(),
        })
        .collect()
}

fn cost_linearity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0007);
    for trial in 0..100 {
        let size = rng.random_range(1..200);
        let records = random_records(&mut rng, size);
        let p = Pricing::new(rng.random_range(0.0..1e-4), rng.random_range(0.0..1e-4)).ok_or("bad pricing")?;
        let single = cost_summary(&records, &p).map_err(|e| e.to_string())?;
        let double = cost_summary(&records, &p.scaled(2.0)).map_err(|e| e.to_string())?;
        ensure(double.avg_cost_usd == 2.0 * single.avg_cost_usd, || {
            format!("trial {trial}: {} is not twice {}", double.avg_cost_usd, single.avg_cost_usd)
        })?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = cmd_run(&replay_config(dir.path(), &BUNDLE_STRATEGIES)).map_err(|e| e.to_string())?;
    let log = read_log(&dir.path().join(LOG_FILE)).map_err(|e| e.to_string())?;
    let table = build_report(&[out.summary], StrategyId::Mot).map_err(|e| e.to_string())?.cost_table();
    ensure(table.contains("In-token") && table.contains("Out-Token"), || format!("missing columns:\n{table}"))?;
    for s in BUNDLE_STRATEGIES {
        let entries: Vec<_> = log.iter().filter(|e| e.strategy == s).collect();
        let total: Usage = entries.iter().filter_map(|e| e.record.as_ref()).map(|r| r.usage_total()).sum();
        let n = entries.len() as f64;
        let row = table
            .lines()
            .find(|l| l.split('|').next().is_some_and(|c| c.trim() == s.display_name()))
            .ok_or_else(|| format!("no row for {s}"))?;
        let cells: Vec<&str> = row.split('|').map(str::trim).collect();
        let (want_in, want_out) =
            (format!("{:.1}", total.in_tokens as f64 / n), format!("{:.1}", total.out_tokens as f64 / n));
        ensure(cells[2] == want_in && cells[3] == want_out, || {
            format!("{s}: row {row:?}, log averages {want_in} / {want_out}")
        })?;
    }
    Ok("100 record sets doubled exactly; token columns match the log".into())
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 7] = [
        (1, "metric oracle equivalence", metric_oracle),
        (2, "table-fidelity deltas", table_deltas),
        (3, "Pass@1 rounding anchor", rounding_anchor),
        (4, "graph property suite", graph_suite),
        (5, "replay-deterministic end-to-end", end_to_end),
        (6, "strategy call-count bounds", call_bounds),
        (7, "cost linearity and token columns", cost_linearity),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut unexpected = 0;
    for (n, name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == n).map(|(_, why)| *why);
        match (result, known) {
            (Ok(detail), None) => println!("PASS {n} {name}: {detail}"),
            (Ok(detail), Some(_)) => {
                unexpected += 1;
                println!("PASS {n} {name}: {detail} (listed as a known failure; update the list)");
            }
            (Err(why), Some(reason)) => println!("FAIL {n} {name}: {why} [known: {reason}]"),
            (Err(why), None) => {
                unexpected += 1;
                println!("FAIL {n} {name}: {why}");
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
