//! The `report` command: comparison tables across run directories.
//!
//! Two tables are produced. The score table has one row per strategy and,
//! per dataset, a Pass@1 and an APR column, each followed by the relative
//! change against the baseline strategy. The cost table lists average cost,
//! input tokens and output tokens per dataset.

use std::path::{Path, PathBuf};

use mot_core::benchmark::DatasetId;
use mot_core::metrics::{fmt_pct, fmt_sig4, relative_delta};
use mot_core::strategy::StrategyId;
use serde::Serialize;

use crate::run::SUMMARY_FILE;
use crate::summary::{BlockMetrics, Summary};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{0} has no {SUMMARY_FILE}")]
    MissingSummary(PathBuf),
    #[error("{path}: {message}")]
    BadSummary { path: PathBuf, message: String },
    #[error("baseline strategy `{baseline}` has no results for {dataset}")]
    MissingBaseline { baseline: StrategyId, dataset: DatasetId },
    #[error("no run directories given")]
    NoRuns,
}

/// One (dataset, strategy) cell group, averaged over repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: DatasetId,
    pub strategy: StrategyId,
    pub repeats: usize,
    pub problems: usize,
    pub infra_failures: usize,
    pub pass_at_1: f64,
    pub pass_at_1_delta: String,
    pub apr: Option<f64>,
    pub apr_delta: Option<String>,
    pub avg_cost_usd: f64,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub baseline: StrategyId,
    pub datasets: Vec<DatasetId>,
    pub strategies: Vec<StrategyId>,
    pub rows: Vec<ReportRow>,
}

pub fn load_summary(dir: &Path) -> Result<Summary, ReportError> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path).map_err(|_| ReportError::MissingSummary(dir.to_path_buf()))?;
    serde_json::from_str(&text).map_err(|e| ReportError::BadSummary { path, message: e.to_string() })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Value as displayed in the score table: one decimal.
fn shown(v: f64) -> f64 {
    fmt_pct(v).parse().expect("formatted number parses")
}

fn delta(value: f64, reference: f64) -> String {
    relative_delta(shown(value), shown(reference)).unwrap_or_else(|_| "n/a".into())
}

struct Averaged {
    repeats: usize,
    problems: usize,
    infra: usize,
    pass: f64,
    apr: Option<f64>,
    cost: f64,
    tin: f64,
    tout: f64,
}

fn average(summary: &Summary, strategy: StrategyId) -> Option<Averaged> {
    let blocks: Vec<_> = summary.blocks.iter().filter(|b| b.strategy == strategy).collect();
    let metrics: Vec<&BlockMetrics> = blocks.iter().filter_map(|b| b.metrics.as_ref()).collect();
    if metrics.is_empty() {
        return None;
    }
    let apr = if metrics.iter().all(|m| m.apr_pct.is_some()) {
        Some(mean(metrics.iter().filter_map(|m| m.apr_pct)))
    } else {
        None
    };
    Some(Averaged {
        repeats: metrics.len(),
        problems: metrics[0].problems,
        infra: blocks.iter().map(|b| b.infra_failures).sum(),
        pass: mean(metrics.iter().map(|m| m.pass_at_1_pct)),
        apr,
        cost: mean(metrics.iter().map(|m| m.avg_cost_usd)),
        tin: mean(metrics.iter().map(|m| m.avg_in_tokens)),
        tout: mean(metrics.iter().map(|m| m.avg_out_tokens)),
    })
}

/// Builds the comparison from summaries already loaded.
pub fn build_report(summaries: &[Summary], baseline: StrategyId) -> Result<Report, ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::NoRuns);
    }
    let mut datasets: Vec<DatasetId> = Vec::new();
    for s in summaries {
        if !datasets.contains(&s.dataset) {
            datasets.push(s.dataset);
        }
    }
    let mut strategies: Vec<StrategyId> = StrategyId::ALL
        .into_iter()
        .filter(|st| summaries.iter().any(|s| s.blocks.iter().any(|b| b.strategy == *st)))
        .collect();
    strategies.sort_by_key(|s| *s != baseline);

    let mut rows = Vec::new();
    for &dataset in &datasets {
        // later run directories override earlier ones for the same pair
        let find = |strategy: StrategyId| {
            summaries.iter().rev().filter(|s| s.dataset == dataset).find_map(|s| average(s, strategy))
        };
        let base = find(baseline).ok_or(ReportError::MissingBaseline { baseline, dataset })?;
        for &strategy in &strategies {
            let Some(a) = find(strategy) else { continue };
            rows.push(ReportRow {
                dataset,
                strategy,
                repeats: a.repeats,
                problems: a.problems,
                infra_failures: a.infra,
                pass_at_1: a.pass,
                pass_at_1_delta: delta(a.pass, base.pass),
                apr: a.apr,
                apr_delta: a.apr.zip(base.apr).map(|(v, r)| delta(v, r)),
                avg_cost_usd: a.cost,
                avg_in_tokens: a.tin,
                avg_out_tokens: a.tout,
            });
        }
    }
    Ok(Report { baseline, datasets, strategies, rows })
}

pub fn cmd_report(run_dirs: &[PathBuf], baseline: StrategyId) -> Result<Report, ReportError> {
    let summaries = run_dirs.iter().map(|d| load_summary(d)).collect::<Result<Vec<_>, _>>()?;
    build_report(&summaries, baseline)
}

fn render_grid(grid: &[Vec<String>]) -> String {
    let cols = grid.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| grid.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let cells: Vec<String> =
            row.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

impl Report {
    fn row(&self, dataset: DatasetId, strategy: StrategyId) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.strategy == strategy)
    }

    /// Pass@1 and APR per dataset, with deltas against the baseline.
    pub fn score_table(&self) -> String {
        let mut header = vec!["Strategy".to_string()];
        for d in &self.datasets {
            header.push(format!("{} Pass@1", d.display_name()));
            header.push(format!("{} APR", d.display_name()));
        }
        let mut grid = vec![header];
        for &s in &self.strategies {
            let mut line = vec![s.display_name().to_string()];
            for &d in &self.datasets {
                match self.row(d, s) {
                    Some(r) => {
                        line.push(format!("{} ({})", fmt_pct(r.pass_at_1), r.pass_at_1_delta));
                        line.push(match (r.apr, &r.apr_delta) {
                            (Some(v), Some(dl)) => format!("{} ({dl})", fmt_pct(v)),
                            (Some(v), None) => fmt_pct(v),
                            (None, _) => "n/a".into(),
                        });
                    }
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            grid.push(line);
        }
        render_grid(&grid)
    }

    /// Average cost and token counts per problem.
    pub fn cost_table(&self) -> String {
        let mut header = vec!["Strategy".to_string()];
        for d in &self.datasets {
            let n = d.display_name();
            header.extend([format!("{n} Cost ($)"), format!("{n} In-token"), format!("{n} Out-Token")]);
        }
        let mut grid = vec![header];
        for &s in &self.strategies {
            let mut line = vec![s.display_name().to_string()];
            for &d in &self.datasets {
                match self.row(d, s) {
                    Some(r) => line.extend([
                        fmt_sig4(r.avg_cost_usd),
                        format!("{:.1}", r.avg_in_tokens),
                        format!("{:.1}", r.avg_out_tokens),
                    ]),
                    None => line.extend(["-".to_string(), "-".to_string(), "-".to_string()]),
                }
            }
            grid.push(line);
        }
        render_grid(&grid)
    }

    pub fn human(&self) -> String {
        let mut out = format!("Pass@1 and AvgPassRatio (baseline: {})\n\n", self.baseline.display_name());
        out.push_str(&self.score_table());
        out.push_str("\nCost and tokens per problem\n\n");
        out.push_str(&self.cost_table());
        let infra: usize = self.rows.iter().map(|r| r.infra_failures).sum();
        if infra > 0 {
            out.push_str(&format!(
                "\nWARNING: {infra} problem runs hit infrastructure failures and are excluded from the figures above\n"
            ));
        }
        out
    }

    /// One row per (dataset, strategy), values formatted as in the tables.
    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "strategy",
            "repeats",
            "problems",
            "infra_failures",
            "pass_at_1",
            "pass_at_1_delta",
            "apr",
            "apr_delta",
            "avg_cost_usd",
            "avg_in_tokens",
            "avg_out_tokens",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.dataset.as_str().to_string(),
                r.strategy.as_str().to_string(),
                r.repeats.to_string(),
                r.problems.to_string(),
                r.infra_failures.to_string(),
                fmt_pct(r.pass_at_1),
                r.pass_at_1_delta.clone(),
                r.apr.map(fmt_pct).unwrap_or_else(|| "n/a".into()),
                r.apr_delta.clone().unwrap_or_else(|| "n/a".into()),
                fmt_sig4(r.avg_cost_usd),
                format!("{:.1}", r.avg_in_tokens),
                format!("{:.1}", r.avg_out_tokens),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}
