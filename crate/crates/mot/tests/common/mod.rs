#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mot::config::{ExecutorConfig, Mode, ProviderConfig, RunConfig};
use mot::mot_core::benchmark::DatasetId;
use mot::mot_core::metrics::Pricing;
use mot::mot_core::strategy::StrategyId;

pub const BUNDLE_STRATEGIES: [StrategyId; 5] = [
    StrategyId::Mot,
    StrategyId::ZeroShot,
    StrategyId::Cot,
    StrategyId::MotNoGraph,
    StrategyId::MotNoModularization,
];

pub fn bundle() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/bundle")
}

pub fn worker_script() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/exec_worker.py")
}

pub fn manifest() -> serde_json::Value {
    let text = std::fs::read_to_string(bundle().join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn bundle_provider() -> ProviderConfig {
    ProviderConfig { pricing: Pricing { usd_per_input_token: 1e-6, usd_per_output_token: 2e-6 }, ..ProviderConfig::default() }
}

/// Replay configuration over the committed bundle, writing into `out`.
pub fn replay_config(out: &Path, strategies: &[StrategyId]) -> RunConfig {
    let b = bundle();
    RunConfig {
        dataset: DatasetId::HumanEval,
        data: b.join("problems.jsonl"),
        strategies: strategies.to_vec(),
        provider: bundle_provider(),
        mode: Mode::Replay,
        fixtures: Some(b.join("llm")),
        overwrite_fixtures: false,
        parallelism: 4,
        timeout_ms: 3_000,
        out: out.to_path_buf(),
        only: None,
        resume: false,
        per_node_phase2: false,
        repeats: 1,
        executor: Some(ExecutorConfig::Recorded(b.join("exec.json"))),
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}
