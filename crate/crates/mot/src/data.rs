use std::path::{Path, PathBuf};

use mot_core::benchmark::{parse_dataset, DatasetError, DatasetId, Problem};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Dataset {
        path: PathBuf,
        #[source]
        source: DatasetError,
    },
    #[error("task ids not found in the dataset: {}", .0.join(", "))]
    UnknownTasks(Vec<String>),
}

/// Reads a JSONL dataset file, optionally keeping only the listed tasks.
/// Problems keep file order.
pub fn load_problems(dataset: DatasetId, path: &Path, only: Option<&[String]>) -> Result<Vec<Problem>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let problems =
        parse_dataset(dataset, &text).map_err(|source| DataError::Dataset { path: path.to_path_buf(), source })?;
    match only {
        None => Ok(problems),
        Some(ids) => {
            let unknown: Vec<String> =
                ids.iter().filter(|id| !problems.iter().any(|p| &&p.task_id == id)).cloned().collect();
            if !unknown.is_empty() {
                return Err(DataError::UnknownTasks(unknown));
            }
            Ok(problems.into_iter().filter(|p| ids.contains(&p.task_id)).collect())
        }
    }
}
