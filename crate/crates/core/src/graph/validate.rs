use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Level, MlrGraph};

/// Size limits applied during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationLimits {
    pub max_nodes: usize,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self { max_nodes: 64 }
    }
}

/// A graph invariant. Variants are declared in name order so that the derived
/// `Ord` sorts by rule name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Cycle,
    DuplicateEdge,
    EmptyReasoningField,
    EmptyTitle,
    LevelInversion,
    LevelSkip,
    MalformedId,
    NoHighNode,
    OrphanDetailed,
    OrphanIntermediate,
    TooManyNodes,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Cycle => "Cycle",
            Rule::DuplicateEdge => "DuplicateEdge",
            Rule::EmptyReasoningField => "EmptyReasoningField",
            Rule::EmptyTitle => "EmptyTitle",
            Rule::LevelInversion => "LevelInversion",
            Rule::LevelSkip => "LevelSkip",
            Rule::MalformedId => "MalformedId",
            Rule::NoHighNode => "NoHighNode",
            Rule::OrphanDetailed => "OrphanDetailed",
            Rule::OrphanIntermediate => "OrphanIntermediate",
            Rule::TooManyNodes => "TooManyNodes",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Offending node ids, sorted. Empty for graph-wide rules.
    pub nodes: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nodes.is_empty() {
            write!(f, "{}: {}", self.rule, self.detail)
        } else {
            write!(f, "{} [{}]: {}", self.rule, self.nodes.join(", "), self.detail)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "- {v}")?;
        }
        Ok(())
    }
}

pub fn validate_graph(g: &MlrGraph) -> ValidationReport {
    validate_graph_with(g, &ValidationLimits::default())
}

pub fn validate_graph_with(g: &MlrGraph, limits: &ValidationLimits) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |rule: Rule, nodes: Vec<String>, detail: String| {
        out.push(Violation { rule, nodes, detail });
    };

    if g.len() > limits.max_nodes {
        push(
            Rule::TooManyNodes,
            Vec::new(),
            format!("{} nodes exceed the limit of {}", g.len(), limits.max_nodes),
        );
    }
    if g.level_nodes(Level::High).next().is_none() {
        push(Rule::NoHighNode, Vec::new(), "graph has no high-level node".to_string());
    }

    let mut has_high_parent = vec![false; g.len()];
    let mut has_intermediate_parent = vec![false; g.len()];

    for node in g.nodes() {
        if !is_id_token(&node.id) {
            push(
                Rule::MalformedId,
                vec![node.id.clone()],
                "ids must be non-empty and use only letters, digits, '_', '-' and '.'".to_string(),
            );
        }
        if node.title.trim().is_empty() {
            push(Rule::EmptyTitle, vec![node.id.clone()], "title is empty".to_string());
        }
        for (label, value) in node.reasoning.fields() {
            if value.is_some_and(|v| v.trim().is_empty()) {
                push(
                    Rule::EmptyReasoningField,
                    vec![node.id.clone()],
                    format!("{label} is present but empty"),
                );
            }
        }

        for (i, child_id) in node.children.iter().enumerate() {
            if node.children[..i].contains(child_id) {
                push(
                    Rule::DuplicateEdge,
                    vec![node.id.clone()],
                    format!("child {child_id} listed more than once"),
                );
                continue;
            }
            let Some(pos) = g.position(child_id) else { continue };
            let child = &g.nodes()[pos];
            match node.level.next() {
                Some(expected) if child.level == expected => match node.level {
                    Level::High => has_high_parent[pos] = true,
                    Level::Intermediate => has_intermediate_parent[pos] = true,
                    Level::Detailed => {}
                },
                _ if child.level.depth() > node.level.depth() + 1 => push(
                    Rule::LevelSkip,
                    vec![node.id.clone()],
                    format!(
                        "edge {} -> {} skips from {} to {}",
                        node.id, child_id, node.level, child.level
                    ),
                ),
                _ => push(
                    Rule::LevelInversion,
                    vec![node.id.clone()],
                    format!(
                        "edge {} -> {} goes from {} to {}",
                        node.id, child_id, node.level, child.level
                    ),
                ),
            }
        }
    }

    for (i, node) in g.nodes().iter().enumerate() {
        match node.level {
            Level::Intermediate if !has_high_parent[i] => push(
                Rule::OrphanIntermediate,
                vec![node.id.clone()],
                "no high-level parent".to_string(),
            ),
            Level::Detailed if !has_intermediate_parent[i] => push(
                Rule::OrphanDetailed,
                vec![node.id.clone()],
                "no intermediate-level parent".to_string(),
            ),
            _ => {}
        }
    }

    for mut component in cyclic_components(g) {
        component.sort();
        let detail = format!("cycle through {}", component.join(" -> "));
        push(Rule::Cycle, component, detail);
    }

    out.sort_by(|a, b| {
        let ka = a.nodes.first().map(String::as_str).unwrap_or("");
        let kb = b.nodes.first().map(String::as_str).unwrap_or("");
        ka.cmp(kb).then(a.rule.cmp(&b.rule)).then(a.detail.cmp(&b.detail))
    });
    ValidationReport { violations: out }
}

pub(crate) fn is_id_token(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Strongly connected components that contain a cycle (size > 1, or a
/// self-loop). Iterative Tarjan so deep graphs cannot overflow the stack.
fn cyclic_components(g: &MlrGraph) -> Vec<Vec<String>> {
    let n = g.len();
    let adj: Vec<Vec<usize>> = g
        .nodes()
        .iter()
        .map(|node| node.children.iter().filter_map(|c| g.position(c)).collect())
        .collect();

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut result = Vec::new();

    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        // (node, next edge to explore)
        let mut work = vec![(start, 0usize)];
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut edge)) = work.last_mut() {
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut members = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                let cyclic = members.len() > 1 || adj[v].contains(&v);
                if cyclic {
                    result.push(members.iter().map(|&i| g.nodes()[i].id.clone()).collect());
                }
            }
        }
    }
    result
}
