//! Pass@1, AvgPassRatio, cost and token accounting, and relative deltas.
//!
//! All values are kept at full precision; the `fmt_*` helpers apply the
//! display rounding used in reports.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::benchmark::DatasetId;
use crate::exec::{self, ExecReport};
use crate::llm::Usage;
use crate::strategy::GenerationRecord;

/// Evaluation result of one problem under one strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub task_id: String,
    /// Generated samples (always 1 here).
    pub samples_total: u32,
    /// Samples that passed every case.
    pub samples_correct: u32,
    pub cases_total: usize,
    pub cases_passed: usize,
}

impl ProblemOutcome {
    pub fn from_report(task_id: impl Into<String>, report: &ExecReport) -> Self {
        Self {
            task_id: task_id.into(),
            samples_total: 1,
            samples_correct: u32::from(exec::solved(report)),
            cases_total: report.cases_total,
            cases_passed: report.cases_passed,
        }
    }

    /// A problem whose candidate could not be produced or run at all.
    pub fn unsolved(task_id: impl Into<String>, cases_total: usize) -> Self {
        Self {
            task_id: task_id.into(),
            samples_total: 1,
            samples_correct: 0,
            cases_total,
            cases_passed: 0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.samples_total >= 1
            && self.samples_correct <= self.samples_total
            && self.cases_passed <= self.cases_total
            && (self.samples_total != 1
                || (self.samples_correct == 1) == (self.cases_total > 0 && self.cases_passed == self.cases_total))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pricing {
    pub usd_per_input_token: f64,
    pub usd_per_output_token: f64,
}

impl Pricing {
    pub fn new(usd_per_input_token: f64, usd_per_output_token: f64) -> Option<Self> {
        let ok = |p: f64| p.is_finite() && p >= 0.0;
        (ok(usd_per_input_token) && ok(usd_per_output_token)).then_some(Self {
            usd_per_input_token,
            usd_per_output_token,
        })
    }

    pub fn cost(&self, usage: Usage) -> f64 {
        usage.in_tokens as f64 * self.usd_per_input_token + usage.out_tokens as f64 * self.usd_per_output_token
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            usd_per_input_token: self.usd_per_input_token * factor,
            usd_per_output_token: self.usd_per_output_token * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no outcomes to aggregate")]
    EmptyRun,
    #[error("AvgPassRatio is not reported for {0}")]
    AprUnsupported(DatasetId),
    #[error("outcome for `{0}` violates count invariants")]
    InvalidOutcome(String),
    #[error("reference value must be positive")]
    ZeroReference,
}

fn check(outcomes: &[ProblemOutcome]) -> Result<(), MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    match outcomes.iter().find(|o| !o.is_valid()) {
        Some(o) => Err(MetricsError::InvalidOutcome(o.task_id.clone())),
        None => Ok(()),
    }
}

/// Mean over problems of `1 - (n - c) / n`, as a percentage.
pub fn pass_at_1(outcomes: &[ProblemOutcome]) -> Result<f64, MetricsError> {
    check(outcomes)?;
    let sum: f64 = outcomes
        .iter()
        .map(|o| {
            let n = f64::from(o.samples_total);
            let c = f64::from(o.samples_correct);
            1.0 - (n - c) / n
        })
        .sum();
    Ok(100.0 * sum / outcomes.len() as f64)
}

/// Mean over problems of `cases_passed / cases_total`, as a percentage.
pub fn avg_pass_ratio(outcomes: &[ProblemOutcome], dataset: DatasetId) -> Result<f64, MetricsError> {
    if !dataset.apr_supported() {
        return Err(MetricsError::AprUnsupported(dataset));
    }
    check(outcomes)?;
    if let Some(o) = outcomes.iter().find(|o| o.cases_total == 0) {
        return Err(MetricsError::InvalidOutcome(o.task_id.clone()));
    }
    let sum: f64 = outcomes
        .iter()
        .map(|o| o.cases_passed as f64 / o.cases_total as f64)
        .sum();
    Ok(100.0 * sum / outcomes.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub avg_cost_usd: f64,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
}

/// Cost of one record: the sum over its calls.
pub fn record_cost(record: &GenerationRecord, pricing: &Pricing) -> f64 {
    record.calls.iter().map(|c| pricing.cost(c.usage)).sum()
}

pub fn cost_summary(records: &[GenerationRecord], pricing: &Pricing) -> Result<CostSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let n = records.len() as f64;
    let mut cost = 0.0;
    let mut tokens = Usage::default();
    for r in records {
        cost += record_cost(r, pricing);
        tokens += r.usage_total();
    }
    Ok(CostSummary {
        avg_cost_usd: cost / n,
        avg_in_tokens: tokens.in_tokens as f64 / n,
        avg_out_tokens: tokens.out_tokens as f64 / n,
    })
}

/// Aggregate metrics for one (dataset, strategy) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub pass_at_1_pct: f64,
    pub apr_pct: Option<f64>,
    pub avg_cost_usd: f64,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
    pub avg_wall_time_ms: f64,
    /// Problems counted in the denominators.
    pub problems: usize,
    pub solved: usize,
    /// Problems excluded because the executor was unavailable.
    pub infra_failures: usize,
}

impl RunMetrics {
    /// `outcomes` and `records` cover the same, infra-failure-free problems.
    pub fn compute(
        dataset: DatasetId,
        outcomes: &[ProblemOutcome],
        records: &[GenerationRecord],
        pricing: &Pricing,
        infra_failures: usize,
    ) -> Result<Self, MetricsError> {
        let pass = pass_at_1(outcomes)?;
        let apr = match avg_pass_ratio(outcomes, dataset) {
            Ok(v) => Some(v),
            Err(MetricsError::AprUnsupported(_)) => None,
            Err(e) => return Err(e),
        };
        let cost = cost_summary(records, pricing)?;
        let wall: f64 = records.iter().map(|r| r.wall_time_ms as f64).sum::<f64>() / records.len() as f64;
        Ok(Self {
            pass_at_1_pct: pass,
            apr_pct: apr,
            avg_cost_usd: cost.avg_cost_usd,
            avg_in_tokens: cost.avg_in_tokens,
            avg_out_tokens: cost.avg_out_tokens,
            avg_wall_time_ms: wall,
            problems: outcomes.len(),
            solved: outcomes.iter().filter(|o| o.samples_correct == o.samples_total).count(),
            infra_failures,
        })
    }
}

/// `100 * (value - reference) / reference`.
pub fn relative_delta_pct(value: f64, reference: f64) -> Result<f64, MetricsError> {
    if !(reference > 0.0) {
        return Err(MetricsError::ZeroReference);
    }
    Ok(100.0 * (value - reference) / reference)
}

/// Signed two-decimal percentage such as `-4.02%` or `+0.00%`.
pub fn relative_delta(value: f64, reference: f64) -> Result<String, MetricsError> {
    let pct = relative_delta_pct(value, reference)?;
    let s = format!("{pct:+.2}%");
    Ok(if s == "-0.00%" { String::from("+0.00%") } else { s })
}

/// One decimal, as in the score tables.
pub fn fmt_pct(value: f64) -> String {
    format!("{value:.1}")
}

/// Four significant figures in positional notation.
pub fn fmt_sig4(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let sci = format!("{value:.3e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            for _ in digits.len()..int_len {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn outcome(passed: usize, total: usize) -> ProblemOutcome {
        ProblemOutcome {
            task_id: format!("t{passed}/{total}"),
            samples_total: 1,
            samples_correct: u32::from(passed == total),
            cases_total: total,
            cases_passed: passed,
        }
    }

    fn solved_run(solved: usize, total: usize) -> Vec<ProblemOutcome> {
        (0..total).map(|i| outcome(usize::from(i < solved), 1)).collect()
    }

    #[test]
    fn pass_at_1_anchors() {
        assert_eq!(fmt_pct(pass_at_1(&solved_run(151, 164)).unwrap()), "92.1");
        assert_eq!(fmt_pct(pass_at_1(&solved_run(164, 164)).unwrap()), "100.0");
        let flags = [outcome(1, 1), outcome(0, 1), outcome(1, 1), outcome(1, 1)];
        assert_eq!(pass_at_1(&flags).unwrap(), 75.0);
        assert_eq!(pass_at_1(&[]), Err(MetricsError::EmptyRun));
    }

    #[test]
    fn apr_examples() {
        let o = [outcome(2, 2), outcome(1, 2), outcome(0, 2)];
        assert_eq!(avg_pass_ratio(&o, DatasetId::HumanEval).unwrap(), 50.0);
        assert_eq!(fmt_pct(avg_pass_ratio(&[outcome(2, 3)], DatasetId::Mbpp).unwrap()), "66.7");
        assert_eq!(
            avg_pass_ratio(&o, DatasetId::MbppPlus),
            Err(MetricsError::AprUnsupported(DatasetId::MbppPlus))
        );
    }

    #[test]
    fn invalid_outcomes_are_rejected() {
        let mut o = outcome(1, 2);
        o.samples_correct = 1;
        assert!(matches!(pass_at_1(&[o]), Err(MetricsError::InvalidOutcome(_))));
    }

    #[test]
    fn deltas() {
        assert_eq!(relative_delta(88.4, 92.1).unwrap(), "-4.02%");
        assert_eq!(relative_delta(85.4, 92.1).unwrap(), "-7.27%");
        assert_eq!(relative_delta(92.1, 92.1).unwrap(), "+0.00%");
        assert_eq!(relative_delta(95.0, 92.1).unwrap(), "+3.15%");
        assert_eq!(relative_delta(1.0, 0.0), Err(MetricsError::ZeroReference));
    }

    #[test]
    fn significant_figures() {
        assert_eq!(fmt_sig4(2.0e-4), "0.0002000");
        assert_eq!(fmt_sig4(0.123456), "0.1235");
        assert_eq!(fmt_sig4(501.25), "501.2");
        assert_eq!(fmt_sig4(12346.0), "12350");
        assert_eq!(fmt_sig4(1.0), "1.000");
        assert_eq!(fmt_sig4(0.0), "0");
        assert_eq!(fmt_sig4(-0.004215), "-0.004215");
    }

    #[test]
    fn pricing_must_be_non_negative() {
        assert!(Pricing::new(-1.0, 0.0).is_none());
        assert!(Pricing::new(f64::NAN, 0.0).is_none());
        let p = Pricing::new(1e-6, 2e-6).unwrap();
        assert!((p.cost(Usage::new(100, 50)) - 2.0e-4).abs() < 1e-18);
    }
}
