use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::parse::{SchemaDoc, SchemaNode, SchemaReasoning, SchemaTask};
use super::validate::{validate_graph_with, ValidationLimits, ValidationReport};
use super::{MlrGraph, TaskElements};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidGraph {
    #[error("graph failed validation:\n{0}")]
    Violations(ValidationReport),
    #[error("task goal is empty")]
    EmptyGoal,
}

const NODE_INDENT: &str = "  ";
const FIELD_INDENT: &str = "    ";
const CONTINUATION_INDENT: &str = "        ";

/// Renders a validated graph as an indented outline for inclusion in a
/// prompt. The output is deterministic and parses back to the same graph
/// through the heading layout accepted by [`super::parse_graph`].
///
/// The node cap is not enforced here; only structural rules are.
pub fn serialize_for_prompt(g: &MlrGraph, t: &TaskElements) -> Result<String, InvalidGraph> {
    let report = validate_graph_with(g, &ValidationLimits { max_nodes: usize::MAX });
    if !report.ok() {
        return Err(InvalidGraph::Violations(report));
    }
    if t.goal.trim().is_empty() {
        return Err(InvalidGraph::EmptyGoal);
    }

    let mut out = String::new();
    out.push_str("Task Analysis:\n");
    push_field(&mut out, NODE_INDENT, "Goal", &t.goal);
    push_field(&mut out, NODE_INDENT, "Input/Output", &t.io_spec);
    push_field(&mut out, NODE_INDENT, "Constraints", &t.constraints);

    for level in super::Level::ALL {
        let mut nodes = g.level_nodes(level).peekable();
        if nodes.peek().is_none() {
            continue;
        }
        let _ = writeln!(out, "\n{}:", level.label());
        for node in nodes {
            let _ = write!(out, "{NODE_INDENT}[{}] ", node.id);
            push_text(&mut out, &node.title);
            for (label, value) in node.reasoning.fields() {
                if let Some(value) = value {
                    push_field(&mut out, FIELD_INDENT, label, value);
                }
            }
            if !node.children.is_empty() {
                let _ = writeln!(out, "{FIELD_INDENT}Refined by: {}", node.children.join(", "));
            }
        }
    }
    Ok(out)
}

fn push_field(out: &mut String, indent: &str, label: &str, value: &str) {
    out.push_str(indent);
    out.push_str(label);
    out.push(':');
    if !value.is_empty() {
        out.push(' ');
    }
    push_text(out, value);
}

fn push_text(out: &mut String, text: &str) {
    let mut lines = text.split('\n');
    if let Some(first) = lines.next() {
        out.push_str(first);
    }
    out.push('\n');
    for line in lines {
        out.push_str(CONTINUATION_INDENT);
        out.push_str(line);
        out.push('\n');
    }
}

/// Serializes a graph in the structured JSON schema requested from models.
pub fn to_schema_json(g: &MlrGraph, t: &TaskElements) -> String {
    let doc = SchemaDoc {
        task_analysis: Some(SchemaTask {
            goal: Some(t.goal.clone()),
            io_spec: Some(t.io_spec.clone()),
            constraints: Some(t.constraints.clone()),
        }),
        nodes: g
            .nodes()
            .iter()
            .map(|n| SchemaNode {
                id: Some(n.id.clone()),
                level: String::from(n.level.as_str()),
                title: n.title.clone(),
                reasoning: (!n.reasoning.is_empty()).then(|| SchemaReasoning {
                    purpose: n.reasoning.task_purpose.clone(),
                    rationale: n.reasoning.decision_rationale.clone(),
                    strategy: n.reasoning.execution_strategy.clone(),
                }),
                children: n.children.clone(),
            })
            .collect::<Vec<_>>(),
    };
    serde_json::to_string_pretty(&doc).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Level, MlrNode, ReasoningBlock};
    use alloc::vec;

    fn minimal() -> MlrGraph {
        MlrGraph::from_nodes(vec![
            MlrNode::new("H1", Level::High, "Validate input").with_children(["M1"]),
            MlrNode::new("M1", Level::Intermediate, "Check for empty list").with_children(["D1"]),
            MlrNode::new("D1", Level::Detailed, "Return 0 when empty").with_reasoning(
                ReasoningBlock {
                    task_purpose: Some("Avoid errors".into()),
                    decision_rationale: Some("Empty lists have no max".into()),
                    execution_strategy: Some("if not xs: return 0".into()),
                },
            ),
        ])
        .unwrap()
    }

    #[test]
    fn renders_three_node_lines_in_level_order() {
        let text = serialize_for_prompt(&minimal(), &TaskElements::new("g", "io", "")).unwrap();
        let node_lines: Vec<&str> = text.lines().filter(|l| l.starts_with("  [")).collect();
        assert_eq!(
            node_lines,
            vec![
                "  [H1] Validate input",
                "  [M1] Check for empty list",
                "  [D1] Return 0 when empty"
            ]
        );
    }

    #[test]
    fn reasoning_labels_in_fixed_order() {
        let text = serialize_for_prompt(&minimal(), &TaskElements::new("g", "io", "")).unwrap();
        let p = text.find("Task Purpose:").unwrap();
        let r = text.find("Decision Rationale:").unwrap();
        let s = text.find("Execution Strategy:").unwrap();
        assert!(p < r && r < s);
    }

    #[test]
    fn rejects_invalid_graph_and_empty_goal() {
        let bad = MlrGraph::from_nodes(vec![MlrNode::new("M1", Level::Intermediate, "m")]).unwrap();
        assert!(matches!(
            serialize_for_prompt(&bad, &TaskElements::new("g", "", "")),
            Err(InvalidGraph::Violations(_))
        ));
        assert_eq!(
            serialize_for_prompt(&minimal(), &TaskElements::new(" ", "", "")),
            Err(InvalidGraph::EmptyGoal)
        );
    }

    #[test]
    fn deterministic() {
        let t = TaskElements::new("goal", "list in, int out", "none");
        assert_eq!(
            serialize_for_prompt(&minimal(), &t).unwrap(),
            serialize_for_prompt(&minimal(), &t).unwrap()
        );
    }
}
