//! Generators and brute-force oracles shared by the property suites.

#![allow(dead_code)]

use mot_core::graph::{Level, MlrGraph, MlrNode, ReasoningBlock, TaskElements};
use mot_core::metrics::ProblemOutcome;
use rand::seq::IndexedRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "compute", "the", "sum", "of", "each", "sublist", "divide", "by", "K", "return", "largest",
    "check", "empty", "list", "loop", "over", "elements", "value", "(a, b)", "x+1", "-1", "#3",
    "[edge]", "case:", "50%", "é", "zero", "result", "input", "validate",
];

pub fn words<R: Rng>(rng: &mut R, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Free text: usually one line, sometimes several.
pub fn text<R: Rng>(rng: &mut R) -> String {
    let mut s = words(rng, 1, 8);
    if rng.random_bool(0.15) {
        s.push('\n');
        s.push_str(&words(rng, 1, 5));
    }
    s
}

fn level_of(i: usize, counts: [usize; 3]) -> Level {
    if i < counts[0] {
        Level::High
    } else if i < counts[0] + counts[1] {
        Level::Intermediate
    } else {
        Level::Detailed
    }
}

fn reasoning<R: Rng>(rng: &mut R, defects: bool) -> ReasoningBlock {
    let field = |rng: &mut R| -> Option<String> {
        match rng.random_range(0..10) {
            0..=2 => None,
            3 if defects => Some("  ".into()),
            _ => Some(text(rng)),
        }
    };
    ReasoningBlock {
        task_purpose: field(rng),
        decision_rationale: field(rng),
        execution_strategy: field(rng),
    }
}

/// A random graph. With `defects` false every structural invariant holds by
/// construction; otherwise defects are injected at random, so roughly half
/// of the graphs are invalid.
pub fn random_graph<R: Rng>(rng: &mut R, defects: bool) -> MlrGraph {
    let mut counts = [rng.random_range(if defects { 0 } else { 1 }..=4), rng.random_range(0..=6), rng.random_range(0..=8)];
    if !defects && counts[1] == 0 {
        counts[2] = 0;
    }
    let total: usize = counts.iter().sum();
    let mut ids: Vec<String> = (0..total)
        .map(|i| {
            let level = level_of(i, counts);
            format!("{}{}", level.id_prefix(), i + 1)
        })
        .collect();
    if defects && total > 0 && rng.random_bool(0.05) {
        let i = rng.random_range(0..total);
        ids[i] = format!("bad id{i}");
    }
    let levels: Vec<Level> = (0..total).map(|i| level_of(i, counts)).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); total];

    // every non-High node gets a parent one level up when one exists
    for i in 0..total {
        let want = match levels[i] {
            Level::High => None,
            Level::Intermediate => Some(Level::High),
            Level::Detailed => Some(Level::Intermediate),
        };
        let Some(parent_level) = want else { continue };
        let parents: Vec<usize> = (0..total).filter(|&j| levels[j] == parent_level).collect();
        if parents.is_empty() || (defects && rng.random_bool(0.04)) {
            continue;
        }
        let k = rng.random_range(1..=parents.len().min(2));
        for p in parents.choose_multiple(rng, k) {
            children[*p].push(i);
        }
    }
    if defects && total > 0 {
        for _ in 0..rng.random_range(0..=1) {
            let a = rng.random_range(0..total);
            let b = rng.random_range(0..total);
            if rng.random_bool(0.5) {
                children[a].push(b);
            }
        }
        if rng.random_bool(0.03) {
            let a = rng.random_range(0..total);
            if let Some(&c) = children[a].first() {
                children[a].push(c);
            }
        }
    }

    let mut nodes: Vec<MlrNode> = (0..total)
        .map(|i| {
            let title = if defects && rng.random_bool(0.02) { " ".to_string() } else { text(rng) };
            let bad_reasoning = defects && rng.random_bool(0.1);
            let mut node =
                MlrNode::new(ids[i].clone(), levels[i], title).with_reasoning(reasoning(rng, bad_reasoning));
            node.children = children[i].iter().map(|&c| ids[c].clone()).collect();
            node
        })
        .collect();
    // stored order need not follow levels
    if rng.random_bool(0.3) {
        for i in (1..nodes.len()).rev() {
            let j = rng.random_range(0..=i);
            nodes.swap(i, j);
        }
    }
    MlrGraph::from_nodes(nodes).expect("ids are unique and children resolve")
}

pub fn random_task<R: Rng>(rng: &mut R) -> TaskElements {
    let constraints = if rng.random_bool(0.3) { String::new() } else { text(rng) };
    TaskElements::new(text(rng), text(rng), constraints)
}

fn is_token(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// Checks every graph invariant directly from the definitions, with no
/// shared code: per-edge level arithmetic, reachability by transitive
/// closure, parent lookups by scanning all nodes.
pub fn brute_force_ok(g: &MlrGraph, max_nodes: usize) -> bool {
    let nodes = g.nodes();
    let n = nodes.len();
    if n > max_nodes {
        return false;
    }
    if !nodes.iter().any(|x| x.level == Level::High) {
        return false;
    }
    let rank = |l: Level| match l {
        Level::High => 0,
        Level::Intermediate => 1,
        Level::Detailed => 2,
    };
    let index_of = |id: &str| nodes.iter().position(|x| x.id == id).unwrap();
    for x in nodes {
        if !is_token(&x.id) || x.title.trim().is_empty() {
            return false;
        }
        let r = &x.reasoning;
        for f in [&r.task_purpose, &r.decision_rationale, &r.execution_strategy] {
            if f.as_ref().is_some_and(|s| s.trim().is_empty()) {
                return false;
            }
        }
        for (i, c) in x.children.iter().enumerate() {
            if x.children.iter().skip(i + 1).any(|d| d == c) {
                return false;
            }
            if rank(nodes[index_of(c)].level) != rank(x.level) + 1 {
                return false;
            }
        }
    }
    // transitive closure
    let mut reach = vec![vec![false; n]; n];
    for (i, x) in nodes.iter().enumerate() {
        for c in &x.children {
            reach[i][index_of(c)] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    if (0..n).any(|i| reach[i][i]) {
        return false;
    }
    for (i, x) in nodes.iter().enumerate() {
        let parent_rank = match x.level {
            Level::High => continue,
            Level::Intermediate => 0,
            Level::Detailed => 1,
        };
        let has_parent = nodes
            .iter()
            .any(|p| rank(p.level) == parent_rank && p.children.iter().any(|c| index_of(c) == i));
        if !has_parent {
            return false;
        }
    }
    true
}

/// Topological order by repeatedly removing nodes without incoming edges.
pub fn topological_order(g: &MlrGraph) -> Option<Vec<String>> {
    let mut remaining: Vec<&str> = g.nodes().iter().map(|n| n.id.as_str()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let next = remaining.iter().position(|id| {
            !g.nodes()
                .iter()
                .any(|p| remaining.contains(&p.id.as_str()) && p.children.iter().any(|c| c == id))
        })?;
        order.push(remaining.remove(next).to_string());
    }
    Some(order)
}

/// Random outcome set of the given size with `samples_total = 1`.
pub fn random_outcomes<R: Rng>(rng: &mut R, size: usize) -> Vec<ProblemOutcome> {
    (0..size)
        .map(|i| {
            let total = rng.random_range(1..=20);
            let passed = if rng.random_bool(0.4) { total } else { rng.random_range(0..=total) };
            ProblemOutcome {
                task_id: format!("P{i}"),
                samples_total: 1,
                samples_correct: u32::from(passed == total),
                cases_total: total,
                cases_passed: passed,
            }
        })
        .collect()
}

/// Pass@1 recomputed as a count of fully passing problems.
pub fn oracle_pass_at_1(outcomes: &[ProblemOutcome]) -> f64 {
    let solved = outcomes.iter().filter(|o| o.cases_passed == o.cases_total).count();
    100.0 * solved as f64 / outcomes.len() as f64
}

/// AvgPassRatio recomputed with exact rational accumulation: the sum of
/// fractions over a common denominator, divided once at the end.
pub fn oracle_apr(outcomes: &[ProblemOutcome]) -> f64 {
    // denominators are at most 20, so lcm(1..=20) keeps everything exact
    const L: u128 = 232_792_560;
    let total: u128 = outcomes
        .iter()
        .map(|o| o.cases_passed as u128 * (L / o.cases_total as u128))
        .sum();
    100.0 * (total as f64) / (L as f64 * outcomes.len() as f64)
}
