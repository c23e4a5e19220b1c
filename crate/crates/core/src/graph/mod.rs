//! Multi-level reasoning (MLR) graphs.
//!
//! An MLR graph decomposes a programming task into High, Intermediate and
//! Detailed design nodes. Edges always point one level down; a node may be
//! shared by several parents, so the structure is a DAG rather than a tree.

mod parse;
mod render;
mod validate;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_graph, ParseError};
pub use render::{serialize_for_prompt, to_schema_json, InvalidGraph};
pub use validate::{
    validate_graph, validate_graph_with, Rule, ValidationLimits, ValidationReport, Violation,
};

/// Abstraction level of a node. Ordered from coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Intermediate,
    Detailed,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::High, Level::Intermediate, Level::Detailed];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Intermediate => "intermediate",
            Level::Detailed => "detailed",
        }
    }

    /// Heading used in prompts, e.g. `High-Level`.
    pub fn label(self) -> &'static str {
        match self {
            Level::High => "High-Level",
            Level::Intermediate => "Intermediate-Level",
            Level::Detailed => "Detailed-Level",
        }
    }

    /// Prefix for synthesized node ids.
    pub fn id_prefix(self) -> char {
        match self {
            Level::High => 'H',
            Level::Intermediate => 'M',
            Level::Detailed => 'D',
        }
    }

    pub fn depth(self) -> u8 {
        match self {
            Level::High => 0,
            Level::Intermediate => 1,
            Level::Detailed => 2,
        }
    }

    /// The level a child of this level must have.
    pub fn next(self) -> Option<Level> {
        match self {
            Level::High => Some(Level::Intermediate),
            Level::Intermediate => Some(Level::Detailed),
            Level::Detailed => None,
        }
    }

    /// Accepts `high`, `High-Level`, `intermediate level`, ... (case-insensitive).
    pub fn parse(s: &str) -> Option<Level> {
        let lower = s.trim().to_ascii_lowercase();
        let word = lower
            .trim_end_matches("level")
            .trim_end_matches(['-', '_', ' ']);
        match word {
            "high" => Some(Level::High),
            "intermediate" | "mid" | "middle" => Some(Level::Intermediate),
            "detailed" | "detail" | "low" => Some(Level::Detailed),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The reasoning embedded in a node. Any field may be absent; simple nodes
/// often carry a title only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningBlock {
    pub task_purpose: Option<String>,
    pub decision_rationale: Option<String>,
    pub execution_strategy: Option<String>,
}

impl ReasoningBlock {
    pub fn is_empty(&self) -> bool {
        self.task_purpose.is_none()
            && self.decision_rationale.is_none()
            && self.execution_strategy.is_none()
    }

    /// `(label, value)` pairs in display order.
    pub fn fields(&self) -> [(&'static str, Option<&str>); 3] {
        [
            ("Task Purpose", self.task_purpose.as_deref()),
            ("Decision Rationale", self.decision_rationale.as_deref()),
            ("Execution Strategy", self.execution_strategy.as_deref()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlrNode {
    pub id: String,
    pub level: Level,
    pub title: String,
    #[serde(default)]
    pub reasoning: ReasoningBlock,
    #[serde(default)]
    pub children: Vec<String>,
}

impl MlrNode {
    pub fn new(id: impl Into<String>, level: Level, title: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            level,
            title: title.into(),
            reasoning: ReasoningBlock::default(),
            children: Vec::new(),
        }
    }

    pub fn with_children<I, S>(mut self, children: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.children = children.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_reasoning(mut self, reasoning: ReasoningBlock) -> Self {
        self.reasoning = reasoning;
        self
    }
}

/// Task elements extracted before decomposition: goal, input/output
/// specification and constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskElements {
    pub goal: String,
    pub io_spec: String,
    pub constraints: String,
}

impl TaskElements {
    pub fn new(
        goal: impl Into<String>,
        io_spec: impl Into<String>,
        constraints: impl Into<String>,
    ) -> Self {
        Self {
            goal: goal.into(),
            io_spec: io_spec.into(),
            constraints: constraints.into(),
        }
    }
}

/// An MLR graph. Node ids are unique and every child reference resolves;
/// both are enforced at construction. Level discipline and acyclicity are
/// checked separately by [`validate_graph`] so that violations can be fed
/// back to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MlrNode>", into = "Vec<MlrNode>")]
pub struct MlrGraph {
    nodes: Vec<MlrNode>,
    index: BTreeMap<String, usize>,
}

impl MlrGraph {
    pub fn from_nodes(nodes: Vec<MlrNode>) -> Result<Self, ParseError> {
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(ParseError::DuplicateNodeId { id: node.id.clone() });
            }
        }
        for node in &nodes {
            if let Some(child) = node.children.iter().find(|c| !index.contains_key(*c)) {
                return Err(ParseError::DanglingChild { id: child.clone() });
            }
        }
        Ok(Self { nodes, index })
    }

    /// Nodes in the order they were written.
    pub fn nodes(&self) -> &[MlrNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&MlrNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Ids of the High nodes, in stored order.
    pub fn roots(&self) -> Vec<&str> {
        self.level_nodes(Level::High).map(|n| n.id.as_str()).collect()
    }

    pub fn level_nodes(&self, level: Level) -> impl Iterator<Item = &MlrNode> + '_ {
        self.nodes.iter().filter(move |n| n.level == level)
    }

    /// Nodes grouped High, Intermediate, Detailed; stored order within a level.
    pub fn nodes_by_level(&self) -> impl Iterator<Item = &MlrNode> + '_ {
        Level::ALL.into_iter().flat_map(move |l| self.level_nodes(l))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| n.children.iter().map(move |c| (n.id.as_str(), c.as_str())))
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Equality up to the order of nodes across levels: same nodes, same
    /// per-level order, same children lists.
    pub fn structurally_eq(&self, other: &MlrGraph) -> bool {
        self.len() == other.len() && self.nodes_by_level().eq(other.nodes_by_level())
    }

    /// Ids of nodes listing `id` as a child, in stored order.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.children.iter().any(|c| c == id))
            .map(|n| n.id.as_str())
            .collect()
    }
}

impl TryFrom<Vec<MlrNode>> for MlrGraph {
    type Error = ParseError;

    fn try_from(nodes: Vec<MlrNode>) -> Result<Self, Self::Error> {
        MlrGraph::from_nodes(nodes)
    }
}

impl From<MlrGraph> for Vec<MlrNode> {
    fn from(g: MlrGraph) -> Self {
        g.nodes
    }
}

/// Per-level node counts and edge count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub high: usize,
    pub intermediate: usize,
    pub detailed: usize,
    pub edges: usize,
}

impl GraphStats {
    pub fn total_nodes(&self) -> usize {
        self.high + self.intermediate + self.detailed
    }
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.high, self.intermediate, self.detailed, self.edges
        )
    }
}

pub fn graph_stats(g: &MlrGraph) -> GraphStats {
    let mut stats = GraphStats {
        edges: g.edge_count(),
        ..GraphStats::default()
    };
    for node in g.nodes() {
        match node.level {
            Level::High => stats.high += 1,
            Level::Intermediate => stats.intermediate += 1,
            Level::Detailed => stats.detailed += 1,
        }
    }
    stats
}
