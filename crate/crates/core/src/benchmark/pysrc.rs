//! Minimal Python source scanning: splitting a block into top-level
//! statements. Tracks brackets, string literals (including triple-quoted),
//! comments, backslash continuations and compound-statement clauses. It
//! does not build a syntax tree.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// Full text of the statement, including continuation lines, with a
    /// trailing newline.
    pub text: String,
}

impl Statement {
    /// First keyword or identifier of the statement.
    pub fn head(&self) -> &str {
        let t = self.text.trim_start();
        let end = t
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(t.len());
        &t[..end]
    }

    pub fn kind(&self) -> StatementKind {
        let t = self.text.trim_start();
        if t.starts_with('@') {
            return StatementKind::Definition;
        }
        match self.head() {
            "assert" => StatementKind::Assert,
            "for" | "while" | "if" | "try" | "with" | "match" | "async" | "return" | "yield"
            | "raise" | "break" | "continue" | "global" | "nonlocal" => StatementKind::ControlFlow,
            "def" | "class" => StatementKind::Definition,
            _ => StatementKind::Simple,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatementKind {
    Assert,
    ControlFlow,
    Definition,
    Simple,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScanError {
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unbalanced brackets")]
    UnbalancedBrackets,
    #[error("unexpected indentation at line {0}")]
    UnexpectedIndent(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Quote {
    Single(char),
    Triple(char),
}

/// Lexical state carried across lines.
#[derive(Default)]
struct LineState {
    depth: i64,
    quote: Option<Quote>,
    backslash: bool,
}

impl LineState {
    /// Advances over one line (without its newline).
    fn feed(&mut self, line: &str) {
        self.backslash = false;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            match self.quote {
                Some(Quote::Single(q)) => {
                    if c == '\\' {
                        i += 1;
                        if i >= chars.len() {
                            // escaped newline keeps the string open
                            return;
                        }
                    } else if c == q {
                        self.quote = None;
                    }
                }
                Some(Quote::Triple(q)) => {
                    if c == '\\' {
                        i += 1;
                    } else if c == q && chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                        self.quote = None;
                        i += 2;
                    }
                }
                None => match c {
                    '#' => break,
                    '\'' | '"' => {
                        if chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c) {
                            self.quote = Some(Quote::Triple(c));
                            i += 2;
                        } else {
                            self.quote = Some(Quote::Single(c));
                        }
                    }
                    '(' | '[' | '{' => self.depth += 1,
                    ')' | ']' | '}' => self.depth -= 1,
                    '\\' if i + 1 == chars.len() => self.backslash = true,
                    _ => {}
                },
            }
            i += 1;
        }
        // A single-quoted string cannot span lines without a backslash.
        if let Some(Quote::Single(_)) = self.quote {
            self.quote = None;
        }
    }

    fn open(&self) -> bool {
        self.depth > 0 || self.quote.is_some() || self.backslash
    }
}

fn indent_width(line: &str) -> usize {
    line.chars()
        .take_while(|c| *c == ' ' || *c == '\t')
        .map(|c| if c == '\t' { 8 } else { 1 })
        .sum()
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

fn is_clause_continuation(line: &str) -> bool {
    let t = line.trim_start();
    ["elif", "else", "except", "finally", "case"]
        .iter()
        .any(|kw| t.starts_with(kw) && t[kw.len()..].starts_with([' ', ':', '(', '\t']))
}

/// Splits `src` into statements at its minimum indentation level.
pub fn top_level_statements(src: &str) -> Result<Vec<Statement>, ScanError> {
    let base = src
        .lines()
        .filter(|l| !is_blank_or_comment(l))
        .map(indent_width)
        .min()
        .unwrap_or(0);

    let mut out: Vec<Statement> = Vec::new();
    let mut current = String::new();
    let mut state = LineState::default();
    let mut pending_decorator = false;

    for (lineno, line) in src.lines().enumerate() {
        let continuing = state.open();
        if !continuing && !is_blank_or_comment(line) {
            let width = indent_width(line);
            if width < base {
                return Err(ScanError::UnexpectedIndent(lineno + 1));
            }
            let starts_new = width == base && !is_clause_continuation(line);
            if starts_new && !pending_decorator && !current.trim().is_empty() {
                out.push(Statement { text: core::mem::take(&mut current) });
            }
            if width == base {
                pending_decorator = line.trim_start().starts_with('@');
            }
        }
        if current.is_empty() && is_blank_or_comment(line) && !continuing {
            continue;
        }
        current.push_str(line);
        current.push('\n');
        state.feed(line);
        if state.depth < 0 {
            return Err(ScanError::UnbalancedBrackets);
        }
    }
    if state.quote.is_some() {
        return Err(ScanError::UnterminatedString);
    }
    if state.depth != 0 {
        return Err(ScanError::UnbalancedBrackets);
    }
    if !current.trim().is_empty() {
        out.push(Statement { text: trim_trailing_blank(current) });
    }
    for s in out.iter_mut() {
        let t = core::mem::take(&mut s.text);
        s.text = trim_trailing_blank(t);
    }
    Ok(out)
}

fn trim_trailing_blank(mut s: String) -> String {
    while s.ends_with("\n\n") || s.ends_with(" \n") || s.ends_with("\t\n") {
        let trimmed_len = s.trim_end().len();
        s.truncate(trimmed_len);
        s.push('\n');
        if !(s.ends_with("\n\n")) {
            break;
        }
    }
    // drop trailing comment-only lines
    loop {
        let body = s.trim_end_matches('\n');
        match body.rfind('\n') {
            Some(pos) if is_blank_or_comment(&body[pos + 1..]) => {
                s.truncate(pos + 1);
            }
            _ => break,
        }
    }
    s
}

/// Removes `width` columns of leading indentation from every line.
pub fn dedent(src: &str) -> String {
    let width = src
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(indent_width)
        .min()
        .unwrap_or(0);
    let mut out = String::with_capacity(src.len());
    for line in src.lines() {
        let mut removed = 0;
        let mut cut = 0;
        for (i, c) in line.char_indices() {
            if removed >= width || !(c == ' ' || c == '\t') {
                cut = i;
                break;
            }
            removed += if c == '\t' { 8 } else { 1 };
            cut = i + 1;
        }
        out.push_str(&line[cut..]);
        out.push('\n');
    }
    out
}

/// Splits a `def` statement into its header (through the colon that opens
/// the body) and its body lines.
pub fn split_def(def: &str) -> Option<(String, String)> {
    let mut state = LineState::default();
    let mut header = String::new();
    let mut lines = def.lines();
    for line in lines.by_ref() {
        header.push_str(line);
        header.push('\n');
        state.feed(line);
        if !state.open() {
            break;
        }
    }
    let header_line = header.trim_end();
    let code = header_line.split('#').next().unwrap_or("").trim_end();
    if !code.ends_with(':') {
        // one-line def such as `def f(x): return x`
        return None;
    }
    let mut body = String::new();
    for line in lines {
        body.push_str(line);
        body.push('\n');
    }
    if body.trim().is_empty() {
        return None;
    }
    Some((header, body))
}

/// Name bound by the first `def` at any indentation, e.g. MBPP entry points.
pub fn first_def_name(src: &str) -> Option<String> {
    src.lines().find_map(|line| {
        let t = line.trim_start();
        let t = t.strip_prefix("async ").unwrap_or(t);
        let rest = t.strip_prefix("def ")?;
        let name: String = rest
            .trim_start()
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .collect();
        (!name.is_empty()).then_some(name)
    })
}

/// Parameter names of a `def` header.
pub fn def_params(header: &str) -> Vec<String> {
    let Some(open) = header.find('(') else { return Vec::new() };
    let Some(close) = header.rfind(')') else { return Vec::new() };
    if close <= open {
        return Vec::new();
    }
    header[open + 1..close]
        .split(',')
        .filter_map(|p| {
            let name: String = p
                .trim()
                .trim_start_matches('*')
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            (!name.is_empty()).then_some(name)
        })
        .collect()
}

/// Whether `src` binds `name` at top level (def, class, assignment or import).
pub fn binds_top_level(src: &str, name: &str) -> bool {
    let is_name_end = |rest: &str| !rest.starts_with(|c: char| c.is_alphanumeric() || c == '_');
    src.lines().any(|line| {
        if line.starts_with([' ', '\t']) {
            return false;
        }
        let t = line.strip_prefix("async ").unwrap_or(line);
        for kw in ["def ", "class "] {
            if let Some(rest) = t.strip_prefix(kw) {
                if let Some(after) = rest.trim_start().strip_prefix(name) {
                    return is_name_end(after);
                }
            }
        }
        if let Some(after) = t.strip_prefix(name) {
            if is_name_end(after) {
                let after = after.trim_start();
                return after.starts_with('=') && !after.starts_with("==")
                    || after.starts_with(':')
                    || after.starts_with(',');
            }
        }
        if t.starts_with("from ") || t.starts_with("import ") {
            return t
                .split(|c: char| c == ',' || c.is_whitespace())
                .any(|tok| tok == name);
        }
        false
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn heads(src: &str) -> Vec<String> {
        top_level_statements(src)
            .unwrap()
            .iter()
            .map(|s| String::from(s.head()))
            .collect()
    }

    #[test]
    fn splits_simple_statements() {
        let src = "x = 1\nassert f(x) == 2\nassert f(\n    3,\n) == 4\n";
        let stmts = top_level_statements(src).unwrap();
        assert_eq!(stmts.len(), 3);
        assert_eq!(stmts[2].text, "assert f(\n    3,\n) == 4\n");
        assert_eq!(stmts[2].kind(), StatementKind::Assert);
    }

    #[test]
    fn compound_statements_keep_their_bodies_and_clauses() {
        let src = "for i in range(3):\n    assert f(i)\nif a:\n    pass\nelse:\n    pass\nassert done\n";
        assert_eq!(heads(src), vec!["for", "if", "assert"]);
    }

    #[test]
    fn strings_and_comments() {
        let src = "s = '''\nnot a statement\n'''\n# comment\nassert s  # trailing\nt = \"#\"\n";
        assert_eq!(heads(src), vec!["s", "assert", "t"]);
        assert_eq!(top_level_statements("x = '''open\n"), Err(ScanError::UnterminatedString));
        assert_eq!(top_level_statements("x = (1,\n"), Err(ScanError::UnbalancedBrackets));
    }

    #[test]
    fn decorators_attach_to_definitions() {
        let src = "@dec\ndef f():\n    return 1\nassert f() == 1\n";
        let stmts = top_level_statements(src).unwrap();
        assert_eq!(stmts.len(), 2);
        assert_eq!(stmts[0].kind(), StatementKind::Definition);
    }

    #[test]
    fn backslash_continuation() {
        let src = "assert f(1) == \\\n    2\nassert g\n";
        assert_eq!(top_level_statements(src).unwrap().len(), 2);
    }

    #[test]
    fn def_helpers() {
        let (header, body) = split_def("def check(candidate):\n    assert candidate(1)\n").unwrap();
        assert_eq!(header, "def check(candidate):\n");
        assert_eq!(body, "    assert candidate(1)\n");
        assert_eq!(def_params(&header), vec!["candidate"]);
        assert!(split_def("def f(x): return x\n").is_none());
        assert_eq!(dedent("    a\n      b\n"), "a\n  b\n");
        assert_eq!(first_def_name("import x\ndef  max_sum(a):\n  pass"), Some("max_sum".into()));
    }

    #[test]
    fn binding_detection() {
        assert!(binds_top_level("def add(a, b):\n    return a + b\n", "add"));
        assert!(!binds_top_level("def adder(a):\n    pass\n", "add"));
        assert!(!binds_top_level("class X:\n    def add(self): pass\n", "add"));
        assert!(binds_top_level("add = lambda a, b: a + b\n", "add"));
        assert!(!binds_top_level("add == 3\n", "add"));
        assert!(binds_top_level("from operator import add\n", "add"));
        assert!(binds_top_level("class add:\n    pass\n", "add"));
    }
}
