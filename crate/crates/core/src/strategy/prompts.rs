//! Prompt builders for every strategy.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::benchmark::Problem;
use crate::graph::{serialize_for_prompt, InvalidGraph, MlrGraph, MlrNode, TaskElements};
use crate::prompt::{render, templates, Message, Prompt};

/// A worked example for few-shot prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub description: String,
    pub solution: String,
}

pub const EXEMPLARS_VERSION: &str = "v1";
const EXEMPLARS_JSON: &str = include_str!("../../assets/few_shot_exemplars.v1.json");

impl Exemplar {
    /// The two shipped exemplars. They are not drawn from any benchmark.
    pub fn builtin() -> Vec<Exemplar> {
        serde_json::from_str(EXEMPLARS_JSON).expect("shipped exemplar file is valid")
    }
}

fn entry_point_clause(p: &Problem) -> String {
    match &p.entry_point {
        Some(ep) => format!("The code must define a function named `{ep}`.\n"),
        None => String::new(),
    }
}

fn user(template: &str, p: &Problem, extra: &[(&str, &str)]) -> Prompt {
    let clause = entry_point_clause(p);
    let mut vars: Vec<(&str, &str)> = alloc::vec![
        ("description", p.description.as_str()),
        ("entry_point_clause", clause.as_str()),
    ];
    vars.extend_from_slice(extra);
    Prompt::with_user(render(template, &vars))
}

pub fn build_graph_prompt(p: &Problem) -> Prompt {
    user(templates::MOT_GRAPH, p, &[("schema", templates::GRAPH_SCHEMA.trim_end())])
}

/// Continues a phase-1 conversation after an unusable response.
pub fn build_graph_retry(previous: &Prompt, response: &str, problems: &str) -> Prompt {
    let mut prompt = previous.clone();
    prompt.push(Message::assistant(response));
    prompt.push(Message::user(render(templates::MOT_GRAPH_RETRY, &[("problems", problems)])));
    prompt
}

pub fn build_code_prompt(p: &Problem, g: &MlrGraph, t: &TaskElements) -> Result<Prompt, InvalidGraph> {
    let graph = serialize_for_prompt(g, t)?;
    Ok(user(templates::MOT_CODE, p, &[("graph", &graph)]))
}

pub fn build_monolithic_code_prompt(p: &Problem, g: &MlrGraph, t: &TaskElements) -> Result<Prompt, InvalidGraph> {
    let graph = serialize_for_prompt(g, t)?;
    Ok(user(templates::MOT_CODE_MONOLITHIC, p, &[("graph", &graph)]))
}

pub fn build_node_code_prompt(
    p: &Problem,
    g: &MlrGraph,
    t: &TaskElements,
    node: &MlrNode,
    code_so_far: &str,
) -> Result<Prompt, InvalidGraph> {
    let graph = serialize_for_prompt(g, t)?;
    let code = if code_so_far.trim().is_empty() { "# nothing yet" } else { code_so_far.trim_end() };
    Ok(user(
        templates::MOT_CODE_NODE,
        p,
        &[
            ("graph", &graph),
            ("code", code),
            ("node_id", &node.id),
            ("node_title", &node.title),
        ],
    ))
}

pub fn build_no_graph_prompt(p: &Problem) -> Prompt {
    user(templates::MOT_NO_GRAPH, p, &[])
}

pub fn build_zero_shot_prompt(p: &Problem) -> Prompt {
    user(templates::ZERO_SHOT, p, &[])
}

pub fn build_few_shot_prompt(p: &Problem, exemplars: &[Exemplar]) -> Prompt {
    let examples: Vec<String> = exemplars
        .iter()
        .map(|e| {
            render(
                templates::FEW_SHOT_EXAMPLE,
                &[
                    ("description", e.description.trim_end()),
                    ("solution", e.solution.trim_end()),
                ],
            )
        })
        .collect();
    let examples = examples.join("\n");
    user(templates::FEW_SHOT, p, &[("examples", &examples)])
}

pub fn build_cot_prompt(p: &Problem) -> Prompt {
    user(templates::COT, p, &[])
}

pub fn build_plan_prompt(p: &Problem) -> Prompt {
    user(templates::SELF_PLANNING_PLAN, p, &[])
}

pub fn build_plan_code_prompt(p: &Problem, plan: &str) -> Prompt {
    user(templates::SELF_PLANNING_CODE, p, &[("plan", plan.trim())])
}

pub fn build_structure_prompt(p: &Problem) -> Prompt {
    user(templates::SCOT_STRUCTURE, p, &[])
}

pub fn build_structure_code_prompt(p: &Problem, structure: &str) -> Prompt {
    user(templates::SCOT_CODE, p, &[("structure", structure.trim())])
}

pub fn build_codecot_prompt(p: &Problem) -> Prompt {
    user(templates::CODECOT, p, &[])
}

pub fn build_repair_prompt(p: &Problem, code: &str, errors: &str) -> Prompt {
    user(
        templates::CODECOT_REPAIR,
        p,
        &[("code", code.trim_end()), ("errors", errors.trim_end())],
    )
}
