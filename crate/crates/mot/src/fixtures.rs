//! Recorded provider responses, one JSON file per request key.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mot_core::llm::{fixture_key, ChatRequest, ChatResponse, CompletionService, FixtureEntry, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("fixture {key} already exists; pass the overwrite flag to replace it")]
    Conflict { key: String },
    #[error("fixture store IO error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture {path} is not valid: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// A directory of fixtures; the file name is the request key.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    /// Opens `dir`, creating it if needed.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        Ok(Self { dir })
    }

    /// Opens an existing directory without creating anything.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(StoreError::Io {
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
                path: dir,
            });
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn get(&self, key: &str) -> Result<Option<FixtureEntry>, StoreError> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(StoreError::Io { path, source: e }),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| StoreError::Corrupt { path, message: e.to_string() })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.path_for(key).is_file()
    }

    /// Persists `resp` under the key of `req`. Existing entries are only
    /// replaced when `overwrite` is set.
    pub fn record(&self, req: &ChatRequest, resp: &ChatResponse, overwrite: bool) -> Result<String, StoreError> {
        let key = fixture_key(req);
        let path = self.path_for(&key);
        if !overwrite && path.exists() {
            return Err(StoreError::Conflict { key });
        }
        let mut text = serde_json::to_string_pretty(&FixtureEntry::from(resp)).expect("fixture entries serialize");
        text.push('\n');
        let tmp = self.dir.join(format!(".{key}.tmp"));
        let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
        f.write_all(text.as_bytes()).map_err(io(&tmp))?;
        f.sync_all().map_err(io(&tmp))?;
        fs::rename(&tmp, &path).map_err(io(&path))?;
        Ok(key)
    }

    /// Keys of all stored entries, sorted.
    pub fn keys(&self) -> Result<Vec<String>, StoreError> {
        let mut keys = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io(&self.dir))? {
            let entry = entry.map_err(io(&self.dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') && entry.path().is_file() {
                keys.push(name);
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn len(&self) -> Result<usize, StoreError> {
        Ok(self.keys()?.len())
    }
}

/// Serves stored responses and nothing else.
#[derive(Debug, Clone)]
pub struct ReplayClient {
    store: FixtureStore,
}

impl ReplayClient {
    pub fn new(store: FixtureStore) -> Self {
        Self { store }
    }
}

impl CompletionService for ReplayClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = fixture_key(req);
        match self.store.get(&key) {
            Ok(Some(entry)) => Ok(entry.into_response()),
            Ok(None) => Err(ProviderError::FixtureMissing { key }),
            Err(e) => Err(ProviderError::Protocol(e.to_string())),
        }
    }
}

/// Forwards to an inner client and stores every response. Requests that
/// already have a fixture are served from the store unless `overwrite` is
/// set, so re-running a recording fills gaps without re-spending tokens.
pub struct RecordingClient<C> {
    inner: C,
    store: FixtureStore,
    overwrite: bool,
}

impl<C> RecordingClient<C> {
    pub fn new(inner: C, store: FixtureStore, overwrite: bool) -> Self {
        Self { inner, store, overwrite }
    }
}

impl<C: CompletionService> CompletionService for RecordingClient<C> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        if !self.overwrite {
            if let Ok(Some(entry)) = self.store.get(&fixture_key(req)) {
                return Ok(entry.into_response());
            }
        }
        let resp = self.inner.complete(req)?;
        self.store
            .record(req, &resp, self.overwrite)
            .map_err(|e| ProviderError::Protocol(format!("could not record fixture: {e}")))?;
        Ok(resp)
    }
}
