//! Pulling candidate code out of a model response.

use alloc::string::String;
use alloc::vec::Vec;

use crate::benchmark::{defines_entry_point, pysrc};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("response contains no candidate code")]
pub struct EmptyCandidate;

/// A fenced block: its info string and its exact contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock<'a> {
    pub info: &'a str,
    pub content: &'a str,
}

/// Fenced code blocks in order of appearance. An unterminated final fence
/// extends to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    let mut blocks = Vec::new();
    let mut offset = 0;
    let mut open: Option<(usize, &str, usize)> = None; // (fence len, info, content start)
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim_start();
        let ticks = trimmed.chars().take_while(|c| *c == '`').count();
        match open {
            None if ticks >= 3 => {
                let info = trimmed[ticks..].trim();
                if !info.contains('`') {
                    open = Some((ticks, info, offset));
                }
            }
            Some((len, info, content_start)) if ticks >= len && trimmed[ticks..].trim().is_empty() => {
                blocks.push(FencedBlock { info, content: &text[content_start..start] });
                open = None;
            }
            _ => {}
        }
    }
    if let Some((_, info, content_start)) = open {
        blocks.push(FencedBlock { info, content: &text[content_start.min(text.len())..] });
    }
    blocks
}

/// Selects the candidate program from a response:
/// the last fenced block defining `entry_point` when one is given, else the
/// last fenced block, else the whole response.
pub fn extract_code(response: &str, entry_point: Option<&str>) -> Result<String, EmptyCandidate> {
    let blocks = fenced_blocks(response);
    let by_entry = entry_point.and_then(|ep| {
        blocks
            .iter()
            .rev()
            .find(|b| defines_entry_point(b.content, ep))
    });
    let selected = match by_entry.or(blocks.last()) {
        Some(block) => block.content,
        None => response,
    };
    if selected.trim().is_empty() {
        return Err(EmptyCandidate);
    }
    Ok(String::from(selected))
}

/// Top-level `assert` statements found in any fenced block of `response`,
/// for self-testing strategies.
pub fn extract_asserts(response: &str) -> Vec<String> {
    let mut asserts = Vec::new();
    for block in fenced_blocks(response) {
        let Ok(stmts) = pysrc::top_level_statements(block.content) else { continue };
        for s in stmts {
            if s.kind() == pysrc::StatementKind::Assert && !asserts.contains(&s.text) {
                asserts.push(s.text);
            }
        }
    }
    asserts
}

/// `code` without its top-level `assert` statements. Returns `code`
/// unchanged if nothing else would remain or it cannot be scanned.
pub fn strip_top_level_asserts(code: &str) -> String {
    let Ok(stmts) = pysrc::top_level_statements(code) else { return String::from(code) };
    if !stmts.iter().any(|s| s.kind() == pysrc::StatementKind::Assert) {
        return String::from(code);
    }
    let mut out = String::new();
    for s in stmts.iter().filter(|s| s.kind() != pysrc::StatementKind::Assert) {
        out.push_str(&s.text);
    }
    if out.trim().is_empty() {
        String::from(code)
    } else {
        out
    }
}
