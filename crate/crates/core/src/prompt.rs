//! Chat prompts and the text templates they are rendered from.
//!
//! Templates live in `templates/*.txt` and use `{{name}}` placeholders.
//! Substitution is a single pass, so values containing `{{` are inserted
//! verbatim.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt has no messages")]
    Empty,
    #[error("prompt must start with a system or user message")]
    LeadingAssistant,
}

/// An ordered conversation. Never empty; never starts with an assistant turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Message>", into = "Vec<Message>")]
pub struct Prompt {
    messages: Vec<Message>,
}

impl Prompt {
    pub fn new(messages: Vec<Message>) -> Result<Self, PromptError> {
        match messages.first() {
            None => Err(PromptError::Empty),
            Some(m) if m.role == Role::Assistant => Err(PromptError::LeadingAssistant),
            Some(_) => Ok(Self { messages }),
        }
    }

    /// The usual two-message prompt: shared system message plus one user turn.
    pub fn with_user(user: impl Into<String>) -> Self {
        Self {
            messages: alloc::vec![Message::system(templates::SYSTEM.trim_end()), Message::user(user)],
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    /// Content of the last user message.
    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

impl TryFrom<Vec<Message>> for Prompt {
    type Error = PromptError;

    fn try_from(messages: Vec<Message>) -> Result<Self, Self::Error> {
        Prompt::new(messages)
    }
}

impl From<Prompt> for Vec<Message> {
    fn from(p: Prompt) -> Self {
        p.messages
    }
}

/// Substitutes `{{name}}` placeholders. Unknown placeholders are left as is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let name = after[..end].trim();
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, value)) => out.push_str(value),
                    None => out.push_str(&rest[start..start + 2 + end + 2]),
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Placeholder names appearing in a template, in order of first use.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        let name = after[..end].trim();
        if !names.contains(&name) {
            names.push(name);
        }
        rest = &after[end + 2..];
    }
    names
}

/// Template assets.
pub mod templates {
    pub const SYSTEM: &str = include_str!("../templates/system.txt");
    pub const GRAPH_SCHEMA: &str = include_str!("../templates/graph_schema.txt");
    pub const MOT_GRAPH: &str = include_str!("../templates/mot_graph.txt");
    pub const MOT_GRAPH_RETRY: &str = include_str!("../templates/mot_graph_retry.txt");
    pub const MOT_CODE: &str = include_str!("../templates/mot_code.txt");
    pub const MOT_CODE_NODE: &str = include_str!("../templates/mot_code_node.txt");
    pub const MOT_CODE_MONOLITHIC: &str = include_str!("../templates/mot_code_monolithic.txt");
    pub const MOT_NO_GRAPH: &str = include_str!("../templates/mot_no_graph.txt");
    pub const ZERO_SHOT: &str = include_str!("../templates/zero_shot.txt");
    pub const FEW_SHOT: &str = include_str!("../templates/few_shot.txt");
    pub const FEW_SHOT_EXAMPLE: &str = include_str!("../templates/few_shot_example.txt");
    pub const COT: &str = include_str!("../templates/cot.txt");
    pub const SELF_PLANNING_PLAN: &str = include_str!("../templates/self_planning_plan.txt");
    pub const SELF_PLANNING_CODE: &str = include_str!("../templates/self_planning_code.txt");
    pub const SCOT_STRUCTURE: &str = include_str!("../templates/scot_structure.txt");
    pub const SCOT_CODE: &str = include_str!("../templates/scot_code.txt");
    pub const CODECOT: &str = include_str!("../templates/codecot.txt");
    pub const CODECOT_REPAIR: &str = include_str!("../templates/codecot_repair.txt");

    /// `(file stem, contents)` for every template.
    pub const ALL: [(&str, &str); 18] = [
        ("system", SYSTEM),
        ("graph_schema", GRAPH_SCHEMA),
        ("mot_graph", MOT_GRAPH),
        ("mot_graph_retry", MOT_GRAPH_RETRY),
        ("mot_code", MOT_CODE),
        ("mot_code_node", MOT_CODE_NODE),
        ("mot_code_monolithic", MOT_CODE_MONOLITHIC),
        ("mot_no_graph", MOT_NO_GRAPH),
        ("zero_shot", ZERO_SHOT),
        ("few_shot", FEW_SHOT),
        ("few_shot_example", FEW_SHOT_EXAMPLE),
        ("cot", COT),
        ("self_planning_plan", SELF_PLANNING_PLAN),
        ("self_planning_code", SELF_PLANNING_CODE),
        ("scot_structure", SCOT_STRUCTURE),
        ("scot_code", SCOT_CODE),
        ("codecot", CODECOT),
        ("codecot_repair", CODECOT_REPAIR),
    ];
}
