//! The `graph` command: run phase 1 for one problem and show the result.

use std::fmt::Write as _;

use mot_core::benchmark::Problem;
use mot_core::graph::{graph_stats, serialize_for_prompt, to_schema_json, validate_graph_with, GraphStats};
use mot_core::llm::{CompletionService, ProviderError};
use mot_core::strategy::{graph_phase, GenerateOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphOutput {
    /// Human-readable listing: attempts, graph, validation, stats.
    pub text: String,
    pub stats: Option<GraphStats>,
    /// Schema JSON of the accepted graph.
    pub schema_json: Option<String>,
    pub attempts: usize,
}

impl GraphOutput {
    pub fn ok(&self) -> bool {
        self.schema_json.is_some()
    }
}

pub fn cmd_graph<C: CompletionService + ?Sized>(
    problem: &Problem,
    client: &C,
    opts: &GenerateOptions,
) -> Result<GraphOutput, ProviderError> {
    let phase = graph_phase(problem, client, opts)?;
    let attempts = phase.calls.len();
    let mut text = format!("Task {} ({} attempt{})\n", problem.task_id, attempts, if attempts == 1 { "" } else { "s" });
    for (i, issue) in phase.issues.iter().enumerate() {
        let _ = writeln!(text, "\nAttempt {} rejected:\n{issue}", i + 1);
    }
    let Some((graph, task)) = phase.graph else {
        let _ = writeln!(text, "\nNo valid MLR graph after {attempts} attempts.");
        return Ok(GraphOutput { text, stats: None, schema_json: None, attempts });
    };
    let stats = graph_stats(&graph);
    let report = validate_graph_with(&graph, &opts.limits);
    text.push('\n');
    text.push_str(&serialize_for_prompt(&graph, &task).unwrap_or_else(|e| format!("(cannot render: {e})\n")));
    let _ = writeln!(text, "\nValidation: {report}");
    let _ = writeln!(text, "Stats (high, intermediate, detailed, edges): {stats}");
    Ok(GraphOutput { text, stats: Some(stats), schema_json: Some(to_schema_json(&graph, &task)), attempts })
}
