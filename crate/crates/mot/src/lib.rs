//! Evaluation harness around [`mot_core`]: a chat-completion client with
//! record/replay fixtures, a subprocess execution backend, run logs,
//! summaries and reports. The `mot` binary exposes the `run`, `report` and
//! `graph` commands.

pub mod client;
pub mod config;
pub mod data;
pub mod fixtures;
pub mod graph_cmd;
pub mod report;
pub mod run;
pub mod runlog;
pub mod summary;
pub mod worker;

pub use config::{ExecutorConfig, Mode, PartialRunConfig, ProviderConfig, RunConfig};
pub use mot_core;
pub use run::{cmd_run, run_with, RunOutput};
