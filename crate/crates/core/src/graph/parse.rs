//! Parsing of model responses into MLR graphs.
//!
//! Two layouts are accepted. The primary one is a JSON object following the
//! schema in the graph prompt, either fenced or embedded in prose. When no
//! usable object is found the parser falls back to a heading layout:
//!
//! ```text
//! Task Analysis:
//!   Goal: ...
//!   Input/Output: ...
//!   Constraints: ...
//!
//! High-Level:
//!   [H1] Compute the sum of each sublist
//!     Task Purpose: ...
//!     Refined by: M1, M2
//! ```
//!
//! The fallback also tolerates markdown decoration (`##`, bullets, bold
//! labels) and inline level prefixes such as `High-Level: <title>`. Lines
//! indented at least four columns deeper than the line that opened a field
//! continue that field.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{Level, MlrGraph, MlrNode, ReasoningBlock, TaskElements};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no structured graph object or recognizable level headings in response")]
    NoStructuredBlock,
    #[error("malformed graph object at byte {position}: {message}")]
    MalformedObject { position: usize, message: String },
    #[error("duplicate node id `{id}`")]
    DuplicateNodeId { id: String },
    #[error("child `{id}` does not refer to any node")]
    DanglingChild { id: String },
}

#[derive(Serialize)]
pub(crate) struct SchemaDoc {
    pub task_analysis: Option<SchemaTask>,
    pub nodes: Vec<SchemaNode>,
}

#[derive(Serialize)]
pub(crate) struct SchemaTask {
    pub goal: Option<String>,
    pub io_spec: Option<String>,
    pub constraints: Option<String>,
}

#[derive(Serialize)]
pub(crate) struct SchemaNode {
    pub id: Option<String>,
    pub level: String,
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<SchemaReasoning>,
    pub children: Vec<String>,
}

#[derive(Serialize)]
pub(crate) struct SchemaReasoning {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
}

/// Parses a phase-1 response. The result is not validated.
pub fn parse_graph(raw: &str) -> Result<(MlrGraph, TaskElements), ParseError> {
    let mut malformed = None;
    for (offset, candidate) in json_candidates(raw) {
        match serde_json::from_str::<Value>(candidate) {
            Ok(Value::Object(map)) if map.contains_key("nodes") => {
                return from_json(&map, offset);
            }
            Ok(_) => {}
            Err(e) => {
                if malformed.is_none() && candidate.contains("\"nodes\"") {
                    malformed = Some(ParseError::MalformedObject {
                        position: offset + byte_offset(candidate, e.line(), e.column()),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    match parse_headings(raw) {
        Ok(parsed) => Ok(parsed),
        Err(e) => Err(malformed.unwrap_or(e)),
    }
}

const MAX_BRACE_CANDIDATES: usize = 32;

/// Byte offsets and text of spans that may hold a JSON object: fenced
/// blocks first, then balanced-brace spans in reading order.
fn json_candidates(raw: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();

    let mut rest = raw;
    let mut base = 0;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let Some(close) = body.find("```") else { break };
        let content = &body[..close];
        let trimmed = content.trim_start();
        if trimmed.starts_with('{') {
            let lead = content.len() - trimmed.len();
            let abs = base + open + 3 + body_start + lead;
            out.push((abs, trimmed.trim_end()));
        }
        let consumed = open + 3 + body_start + close + 3;
        base += consumed;
        rest = &rest[consumed..];
    }

    let mut brace_count = 0;
    for (i, _) in raw.match_indices('{') {
        if brace_count >= MAX_BRACE_CANDIDATES {
            break;
        }
        if !raw[i + 1..].trim_start().starts_with('"') {
            continue;
        }
        brace_count += 1;
        let end = matching_brace(&raw[i..]).map_or(raw.len(), |e| i + e + 1);
        out.push((i, &raw[i..end]));
    }
    out
}

/// Index of the `}` closing the `{` at the start of `s`, skipping strings.
fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn byte_offset(s: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (n, l) in s.split_inclusive('\n').enumerate() {
        if n + 1 == line {
            return (offset + column.saturating_sub(1)).min(s.len());
        }
        offset += l.len();
    }
    s.len()
}

fn malformed(position: usize, message: impl Into<String>) -> ParseError {
    ParseError::MalformedObject {
        position,
        message: message.into(),
    }
}

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.trim().to_string()),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().filter_map(text_of).filter(|s| !s.is_empty()).collect();
            Some(parts.join("\n"))
        }
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Object(_) => Some(v.to_string()),
    }
}

fn field<'a>(map: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| map.get(*n))
}

fn non_empty(v: Option<&Value>) -> Option<String> {
    v.and_then(text_of).filter(|s| !s.is_empty())
}

fn from_json(map: &Map<String, Value>, offset: usize) -> Result<(MlrGraph, TaskElements), ParseError> {
    let task = match field(map, &["task_analysis", "task", "task_elements"]) {
        Some(Value::Object(t)) => TaskElements {
            goal: non_empty(field(t, &["goal", "goal_description"])).unwrap_or_default(),
            io_spec: non_empty(field(t, &["io_spec", "io", "input_output"])).unwrap_or_default(),
            constraints: non_empty(field(t, &["constraints"])).unwrap_or_default(),
        },
        _ => TaskElements::default(),
    };
    if task.goal.is_empty() {
        return Err(malformed(offset, "task_analysis.goal is missing or empty"));
    }

    let Some(Value::Array(raw_nodes)) = map.get("nodes") else {
        return Err(malformed(offset, "`nodes` must be an array"));
    };

    let mut counters = [0usize; 3];
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for (i, raw) in raw_nodes.iter().enumerate() {
        let Value::Object(obj) = raw else {
            return Err(malformed(offset, format!("nodes[{i}] is not an object")));
        };
        let level_text = field(obj, &["level"]).and_then(text_of).unwrap_or_default();
        let Some(level) = Level::parse(&level_text) else {
            return Err(malformed(
                offset,
                format!("nodes[{i}] has unknown level `{level_text}`"),
            ));
        };
        counters[level.depth() as usize] += 1;
        let id = non_empty(field(obj, &["id"]))
            .unwrap_or_else(|| format!("{}{}", level.id_prefix(), counters[level.depth() as usize]));
        let title = field(obj, &["title", "name"]).and_then(text_of).unwrap_or_default();
        let reasoning = match field(obj, &["reasoning"]) {
            Some(Value::Object(r)) => ReasoningBlock {
                task_purpose: non_empty(field(r, &["purpose", "task_purpose"])),
                decision_rationale: non_empty(field(r, &["rationale", "decision_rationale"])),
                execution_strategy: non_empty(field(r, &["strategy", "execution_strategy"])),
            },
            _ => ReasoningBlock::default(),
        };
        let children = match field(obj, &["children"]) {
            Some(Value::Array(cs)) => cs.iter().filter_map(text_of).filter(|c| !c.is_empty()).collect(),
            Some(Value::Null) | None => Vec::new(),
            Some(other) => text_of(other).into_iter().collect(),
        };
        nodes.push(MlrNode { id, level, title, reasoning, children });
    }
    resolve_children_by_title(&mut nodes);
    Ok((MlrGraph::from_nodes(nodes)?, task))
}

/// Rewrites child references that match no id but exactly one title.
fn resolve_children_by_title(nodes: &mut [MlrNode]) {
    let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let titles: Vec<String> = nodes.iter().map(|n| n.title.clone()).collect();
    for node in nodes.iter_mut() {
        for child in node.children.iter_mut() {
            if ids.contains(child) {
                continue;
            }
            let mut matches = titles.iter().enumerate().filter(|(_, t)| *t == child);
            if let (Some((i, _)), None) = (matches.next(), matches.next()) {
                *child = ids[i].clone();
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Task,
    Level(Level),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TaskField {
    Goal,
    Io,
    Constraints,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ReasonField {
    Purpose,
    Rationale,
    Strategy,
}

#[derive(Clone, Copy)]
enum Open {
    Task(TaskField),
    Title,
    Reason(ReasonField),
}

struct PendingNode {
    id: Option<String>,
    level: Level,
    title: String,
    reasoning: ReasoningBlock,
    children: Vec<String>,
}

#[derive(Default)]
struct HeadingParser {
    goal: Option<String>,
    io_spec: Option<String>,
    constraints: Option<String>,
    nodes: Vec<PendingNode>,
    explicit_edges: bool,
}

fn indent_of(line: &str) -> usize {
    let mut n = 0;
    for c in line.chars() {
        match c {
            ' ' => n += 1,
            '\t' => n += 4,
            _ => break,
        }
    }
    n
}

fn append(slot: &mut String, line: &str) {
    if !slot.is_empty() {
        slot.push('\n');
    }
    slot.push_str(line);
}

fn parse_headings(raw: &str) -> Result<(MlrGraph, TaskElements), ParseError> {
    let mut p = HeadingParser::default();
    let mut section = Section::None;
    let mut open: Option<(Open, usize)> = None;
    let mut node_indent: Option<usize> = None;

    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("```") {
            continue;
        }
        let indent = indent_of(line);

        if let Some((field, field_indent)) = open {
            if indent >= field_indent + 4 {
                p.append_to(field, trimmed);
                continue;
            }
        }

        let text = strip_decor(trimmed);
        if text.is_empty() {
            continue;
        }

        if let Some(head) = header(text) {
            section = head;
            open = None;
            node_indent = None;
            continue;
        }

        if let Some((level, id, title)) = inline_node(text) {
            p.push_node(id, level, title);
            section = Section::Level(level);
            node_indent = Some(indent);
            open = Some((Open::Title, indent));
            continue;
        }

        if !p.nodes.is_empty() {
            if let Some((field, value)) = reasoning_label(text) {
                p.set_reason(field, value);
                open = Some((Open::Reason(field), indent));
                continue;
            }
            if let Some(ids) = children_label(text) {
                if let Some(node) = p.nodes.last_mut() {
                    node.children.extend(ids);
                }
                p.explicit_edges = true;
                open = None;
                continue;
            }
        }

        if section == Section::Task || p.nodes.is_empty() {
            if let Some((field, value)) = task_label(text) {
                p.set_task(field, value);
                open = Some((Open::Task(field), indent));
                continue;
            }
        }

        if let Section::Level(level) = section {
            let starts_node = node_indent.is_none_or(|ni| indent <= ni);
            if let Some((id, title)) = bracket_node(text) {
                p.push_node(Some(id), level, title);
            } else if starts_node {
                let (id, title) = id_prefixed(text).unwrap_or((None, text));
                p.push_node(id, level, title);
            } else if let Some((field, _)) = open {
                p.append_to(field, trimmed);
                continue;
            } else {
                continue;
            }
            if node_indent.is_none() {
                node_indent = Some(indent);
            }
            open = Some((Open::Title, indent));
        }
    }

    p.finish()
}

impl HeadingParser {
    fn push_node(&mut self, id: Option<String>, level: Level, title: &str) {
        self.nodes.push(PendingNode {
            id,
            level,
            title: title.trim().to_string(),
            reasoning: ReasoningBlock::default(),
            children: Vec::new(),
        });
    }

    fn set_reason(&mut self, field: ReasonField, value: &str) {
        if let Some(node) = self.nodes.last_mut() {
            let slot = match field {
                ReasonField::Purpose => &mut node.reasoning.task_purpose,
                ReasonField::Rationale => &mut node.reasoning.decision_rationale,
                ReasonField::Strategy => &mut node.reasoning.execution_strategy,
            };
            *slot = Some(value.trim().to_string());
        }
    }

    fn set_task(&mut self, field: TaskField, value: &str) {
        let slot = match field {
            TaskField::Goal => &mut self.goal,
            TaskField::Io => &mut self.io_spec,
            TaskField::Constraints => &mut self.constraints,
        };
        *slot = Some(value.trim().to_string());
    }

    fn append_to(&mut self, field: Open, line: &str) {
        match field {
            Open::Task(f) => {
                let slot = match f {
                    TaskField::Goal => &mut self.goal,
                    TaskField::Io => &mut self.io_spec,
                    TaskField::Constraints => &mut self.constraints,
                };
                append(slot.get_or_insert_with(String::new), line);
            }
            Open::Title => {
                if let Some(node) = self.nodes.last_mut() {
                    append(&mut node.title, line);
                }
            }
            Open::Reason(f) => {
                if let Some(node) = self.nodes.last_mut() {
                    let slot = match f {
                        ReasonField::Purpose => &mut node.reasoning.task_purpose,
                        ReasonField::Rationale => &mut node.reasoning.decision_rationale,
                        ReasonField::Strategy => &mut node.reasoning.execution_strategy,
                    };
                    append(slot.get_or_insert_with(String::new), line);
                }
            }
        }
    }

    fn finish(self) -> Result<(MlrGraph, TaskElements), ParseError> {
        if self.nodes.is_empty() {
            return Err(ParseError::NoStructuredBlock);
        }
        let goal = self.goal.unwrap_or_default();
        if goal.is_empty() {
            return Err(malformed(0, "task goal is missing from the heading layout"));
        }
        let task = TaskElements {
            goal,
            io_spec: self.io_spec.unwrap_or_default(),
            constraints: self.constraints.unwrap_or_default(),
        };

        let mut counters = [0usize; 3];
        let mut nodes: Vec<MlrNode> = self
            .nodes
            .into_iter()
            .map(|n| {
                let d = n.level.depth() as usize;
                counters[d] += 1;
                let empty_to_none = |v: Option<String>| v.filter(|s| !s.trim().is_empty());
                MlrNode {
                    id: n
                        .id
                        .unwrap_or_else(|| format!("{}{}", n.level.id_prefix(), counters[d])),
                    level: n.level,
                    title: n.title,
                    reasoning: ReasoningBlock {
                        task_purpose: empty_to_none(n.reasoning.task_purpose),
                        decision_rationale: empty_to_none(n.reasoning.decision_rationale),
                        execution_strategy: empty_to_none(n.reasoning.execution_strategy),
                    },
                    children: n.children,
                }
            })
            .collect();

        if self.explicit_edges {
            resolve_children_by_title(&mut nodes);
        } else {
            // Each node refines the closest preceding node one level up.
            let mut last_at = [None::<usize>; 3];
            for i in 0..nodes.len() {
                let d = nodes[i].level.depth() as usize;
                if d > 0 {
                    if let Some(parent) = last_at[d - 1] {
                        let id = nodes[i].id.clone();
                        nodes[parent].children.push(id);
                    }
                }
                last_at[d] = Some(i);
            }
        }
        Ok((MlrGraph::from_nodes(nodes)?, task))
    }
}

/// Strips markdown headings, quote markers, bullets, list numbering and
/// leading bold markers.
fn strip_decor(s: &str) -> &str {
    let mut s = s;
    loop {
        let before = s.len();
        s = s.trim_start_matches(['#', '>', '-', '+', '•', '*']).trim_start();
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let rest = &s[digits..];
            if let Some(after) = rest.strip_prefix(['.', ')']) {
                if after.starts_with(char::is_whitespace) {
                    s = after.trim_start();
                }
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

/// Splits a leading level phrase (`High-Level`, `intermediate level`,
/// `Detailed`) off `text`.
fn level_prefix(text: &str) -> Option<(Level, &str)> {
    const WORDS: [(&str, Level); 4] = [
        ("high", Level::High),
        ("intermediate", Level::Intermediate),
        ("detailed", Level::Detailed),
        ("detail", Level::Detailed),
    ];
    for (word, level) in WORDS {
        let Some(head) = text.get(..word.len()) else { continue };
        if !head.eq_ignore_ascii_case(word) {
            continue;
        }
        let rest = &text[word.len()..];
        let rest = rest.strip_prefix(['-', ' ', '_']).unwrap_or(rest);
        let Some(kw) = rest.get(..5) else { continue };
        if kw.eq_ignore_ascii_case("level") {
            let after = &rest[5..];
            if after.chars().next().is_none_or(|c| !c.is_alphanumeric()) {
                return Some((level, after.trim_start_matches('*')));
            }
        }
    }
    None
}

fn is_filler(rest: &str) -> bool {
    let r = rest.trim().trim_matches(['*', ':', '(', ')']).trim().to_ascii_lowercase();
    matches!(
        r.as_str(),
        "" | "nodes" | "node" | "tasks" | "task" | "design" | "designs" | "steps" | "node(s)"
            | "tasks:" | "nodes:"
    )
}

fn header(text: &str) -> Option<Section> {
    if let Some((level, rest)) = level_prefix(text) {
        if is_filler(rest) {
            return Some(Section::Level(level));
        }
        return None;
    }
    let lower = text.to_ascii_lowercase();
    for name in ["task description analysis", "task analysis", "task elements"] {
        if let Some(rest) = lower.strip_prefix(name) {
            if rest.trim().trim_matches(['*', ':']).trim().is_empty() {
                return Some(Section::Task);
            }
        }
    }
    None
}

/// `High-Level: title`, `High-Level Node H1: title`, `Intermediate-level task 2 - title`.
fn inline_node(text: &str) -> Option<(Level, Option<String>, &str)> {
    let (level, rest) = level_prefix(text)?;
    let mut rest = rest.trim_start();
    for word in ["node", "task", "step"] {
        if let Some(head) = rest.get(..word.len()) {
            if head.eq_ignore_ascii_case(word) {
                rest = rest[word.len()..].trim_start();
                break;
            }
        }
    }
    let mut id = None;
    let token_end = rest
        .find(|c: char| c.is_whitespace() || matches!(c, ':' | ')' | ']'))
        .unwrap_or(rest.len());
    let token = rest[..token_end].trim_start_matches(['(', '[']);
    if !token.is_empty() && token.chars().all(|c| c.is_ascii_alphanumeric() || c == '.') {
        id = Some(token.to_string());
        rest = rest[token_end..].trim_start_matches([')', ']']).trim_start();
    }
    let rest = rest.trim_start_matches('*').trim_start();
    let title = rest
        .strip_prefix(':')
        .or_else(|| rest.strip_prefix(" -"))
        .or_else(|| rest.strip_prefix('-'))
        .or_else(|| rest.strip_prefix('–'))?
        .trim_start_matches('*')
        .trim();
    if title.is_empty() {
        return None;
    }
    // A bare number is a position, not an id.
    let id = id.filter(|t| !t.chars().all(|c| c.is_ascii_digit() || c == '.'));
    Some((level, id, title))
}

fn bracket_node(text: &str) -> Option<(String, &str)> {
    let inner = text.strip_prefix('[')?;
    let close = inner.find(']')?;
    let id = inner[..close].trim();
    if id.is_empty() {
        return None;
    }
    Some((id.to_string(), inner[close + 1..].trim()))
}

/// `H1: title` style node lines. The token must contain a digit so that
/// ordinary `Word: text` lines are not mistaken for ids.
fn id_prefixed(text: &str) -> Option<(Option<String>, &str)> {
    let (token, title) = text.split_once(':')?;
    let token = token.trim().trim_matches('*');
    let looks_like_id = !token.is_empty()
        && token.len() <= 12
        && token.starts_with(|c: char| c.is_ascii_alphabetic())
        && token.chars().any(|c| c.is_ascii_digit())
        && token.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    looks_like_id.then(|| (Some(token.to_string()), title.trim()))
}

/// Matches `label:` (optionally bolded) at the start of `text` and returns
/// the value after the colon.
fn labeled<'a>(text: &'a str, labels: &[&str]) -> Option<&'a str> {
    for label in labels {
        let Some(head) = text.get(..label.len()) else { continue };
        if !head.eq_ignore_ascii_case(label) {
            continue;
        }
        let rest = text[label.len()..].trim_start_matches('*').trim_start();
        if let Some(value) = rest.strip_prefix(':') {
            return Some(value.trim_start_matches('*').trim());
        }
    }
    None
}

fn reasoning_label(text: &str) -> Option<(ReasonField, &str)> {
    if let Some(v) = labeled(text, &["task purpose", "purpose"]) {
        return Some((ReasonField::Purpose, v));
    }
    if let Some(v) = labeled(text, &["decision rationale", "rationale"]) {
        return Some((ReasonField::Rationale, v));
    }
    labeled(text, &["execution strategy", "strategy"]).map(|v| (ReasonField::Strategy, v))
}

fn task_label(text: &str) -> Option<(TaskField, &str)> {
    if let Some(v) = labeled(text, &["goal description", "goal"]) {
        return Some((TaskField::Goal, v));
    }
    if let Some(v) = labeled(
        text,
        &[
            "input/output specifications",
            "input/output specification",
            "input and output",
            "input/output",
            "io_spec",
            "i/o",
        ],
    ) {
        return Some((TaskField::Io, v));
    }
    labeled(text, &["constraints"]).map(|v| (TaskField::Constraints, v))
}

fn children_label(text: &str) -> Option<Vec<String>> {
    let value = labeled(text, &["refined by", "children", "child nodes"])?;
    Some(
        value
            .split(',')
            .map(|s| s.trim().trim_matches(['[', ']', '`', '*']).trim())
            .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("none") && *s != "-")
            .map(String::from)
            .collect(),
    )
}
