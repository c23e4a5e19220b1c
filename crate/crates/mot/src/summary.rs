//! Aggregation of run log entries into per-strategy metric blocks.
//!
//! Everything here is computed from the log alone, after sorting by task id,
//! so the summary does not depend on the order in which jobs finished.

use std::collections::BTreeMap;

use mot_core::benchmark::DatasetId;
use mot_core::metrics::{avg_pass_ratio, cost_summary, pass_at_1, MetricsError, Pricing, ProblemOutcome};
use mot_core::strategy::{GenerationRecord, StrategyId};
use serde::{Deserialize, Serialize};

use crate::runlog::{EntryStatus, RunLogEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMetrics {
    pub problems: usize,
    pub solved: usize,
    pub pass_at_1_pct: f64,
    /// Absent for datasets whose AvgPassRatio is not reported.
    pub apr_pct: Option<f64>,
    pub avg_cost_usd: f64,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyId,
    pub repeat: u32,
    /// None when every problem hit an infrastructure failure.
    pub metrics: Option<BlockMetrics>,
    pub generation_failures: usize,
    pub infra_failures: usize,
    /// Problems where MoT fell back from the graph pipeline.
    pub graph_fallbacks: usize,
}

/// The deterministic part of a run's results; no timing information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: DatasetId,
    pub model: String,
    pub pricing: Pricing,
    pub blocks: Vec<StrategySummary>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTiming {
    pub strategy: StrategyId,
    pub repeat: u32,
    pub avg_wall_time_ms: f64,
}

/// Latest entry per (task, strategy, repeat), restricted to `tasks` when
/// given, sorted by key.
pub fn latest_entries<'a>(
    entries: &'a [RunLogEntry],
    tasks: Option<&[String]>,
) -> BTreeMap<(String, StrategyId, u32), &'a RunLogEntry> {
    let mut latest = BTreeMap::new();
    for e in entries {
        if tasks.is_some_and(|t| !t.contains(&e.task_id)) {
            continue;
        }
        latest.insert(e.key(), e);
    }
    latest
}

fn block<'a>(
    entries: impl Iterator<Item = &'a RunLogEntry>,
    dataset: DatasetId,
    pricing: &Pricing,
) -> Result<(Option<BlockMetrics>, usize, usize, usize), MetricsError> {
    let mut outcomes: Vec<ProblemOutcome> = Vec::new();
    let mut records: Vec<GenerationRecord> = Vec::new();
    let (mut gen_failures, mut infra, mut fallbacks) = (0, 0, 0);
    for e in entries {
        match e.status {
            EntryStatus::InfraFailure => {
                infra += 1;
                continue;
            }
            EntryStatus::GenerationFailed => gen_failures += 1,
            EntryStatus::Evaluated => {}
        }
        let outcome = e
            .outcome
            .clone()
            .ok_or_else(|| MetricsError::InvalidOutcome(format!("{} has no outcome", e.task_id)))?;
        outcomes.push(outcome);
        if let Some(r) = &e.record {
            if r.fallback_used {
                fallbacks += 1;
            }
            records.push(r.clone());
        }
    }
    if outcomes.is_empty() {
        return Ok((None, gen_failures, infra, fallbacks));
    }
    let apr = match avg_pass_ratio(&outcomes, dataset) {
        Ok(v) => Some(v),
        Err(MetricsError::AprUnsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let cost = match cost_summary(&records, pricing) {
        Ok(c) => c,
        Err(MetricsError::EmptyRun) => Default::default(),
        Err(e) => return Err(e),
    };
    let metrics = BlockMetrics {
        problems: outcomes.len(),
        solved: outcomes.iter().filter(|o| o.samples_correct == o.samples_total).count(),
        pass_at_1_pct: pass_at_1(&outcomes)?,
        apr_pct: apr,
        avg_cost_usd: cost.avg_cost_usd,
        avg_in_tokens: cost.avg_in_tokens,
        avg_out_tokens: cost.avg_out_tokens,
    };
    Ok((Some(metrics), gen_failures, infra, fallbacks))
}

/// Builds one block per (strategy, repeat) in the given order.
pub fn summarize(
    dataset: DatasetId,
    model: &str,
    pricing: Pricing,
    entries: &[RunLogEntry],
    tasks: Option<&[String]>,
    strategies: &[StrategyId],
    repeats: u32,
) -> Result<Summary, MetricsError> {
    let latest = latest_entries(entries, tasks);
    let mut blocks = Vec::new();
    for &strategy in strategies {
        for repeat in 0..repeats {
            let selected = latest.values().copied().filter(|e| e.strategy == strategy && e.repeat == repeat);
            let (metrics, generation_failures, infra_failures, graph_fallbacks) =
                block(selected, dataset, &pricing)?;
            blocks.push(StrategySummary { strategy, repeat, metrics, generation_failures, infra_failures, graph_fallbacks });
        }
    }
    Ok(Summary { dataset, model: model.to_string(), pricing, blocks })
}

pub fn timings(
    entries: &[RunLogEntry],
    tasks: Option<&[String]>,
    strategies: &[StrategyId],
    repeats: u32,
) -> Vec<BlockTiming> {
    let latest = latest_entries(entries, tasks);
    let mut out = Vec::new();
    for &strategy in strategies {
        for repeat in 0..repeats {
            let walls: Vec<f64> = latest
                .values()
                .filter(|e| e.strategy == strategy && e.repeat == repeat)
                .filter_map(|e| e.record.as_ref())
                .map(|r| r.wall_time_ms as f64)
                .collect();
            let avg = if walls.is_empty() { 0.0 } else { walls.iter().sum::<f64>() / walls.len() as f64 };
            out.push(BlockTiming { strategy, repeat, avg_wall_time_ms: avg });
        }
    }
    out
}
