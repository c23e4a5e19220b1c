//! Core of the Modularization-of-Thought (MoT) code generation harness.
//!
//! Everything in this crate is pure: graph parsing and validation, prompt
//! construction, strategy control flow, benchmark test-suite splitting and
//! metrics. Network access, process execution and file IO are reached only
//! through the [`llm::CompletionService`] and [`exec::ExecutionBackend`]
//! traits, which the `mot` crate implements.

#![no_std]

extern crate alloc;

pub mod benchmark;
pub mod exec;
pub mod graph;
pub mod llm;
pub mod metrics;
pub mod prompt;
pub mod strategy;

pub use benchmark::{DatasetId, Problem, TestSuite};
pub use exec::{CaseResult, CaseStatus, ExecReport, ExecRequest, ExecutionBackend};
pub use graph::{Level, MlrGraph, MlrNode, ReasoningBlock, TaskElements};
pub use llm::{ChatRequest, ChatResponse, CompletionService, Usage};
pub use metrics::{ProblemOutcome, RunMetrics};
pub use prompt::{Message, Prompt, Role};
pub use strategy::{GenerationRecord, StrategyId};
