//! Replay cache: one JSON file per response, named `<key>.json`, where the
//! key is the hex SHA-256 of `model_id`, a zero byte, and the prompt bytes.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::{ClientError, CompletionRequest, ModelClient};

pub fn cache_key(model_id: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_id: String,
    /// Unix seconds at capture time.
    pub created_at: u64,
    pub response: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct ReplayCache {
    dir: PathBuf,
}

impl ReplayCache {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayCache {
        ReplayCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, model_id: &str, prompt: &str) -> Result<Option<CacheRecord>, CacheError> {
        let key = cache_key(model_id, prompt);
        let path = self.path_for(&key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(CacheError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        let corrupt = |message: String| CacheError::Corrupt {
            path: path.display().to_string(),
            message,
        };
        let record: CacheRecord = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if record.key != key || record.model_id != model_id {
            return Err(corrupt("key or model id does not match file name".into()));
        }
        Ok(Some(record))
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial record.
    pub fn put(&self, model_id: &str, prompt: &str, response: &str) -> Result<CacheRecord, CacheError> {
        let io = |path: &Path, source| CacheError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let key = cache_key(model_id, prompt);
        let record = CacheRecord {
            key: key.clone(),
            model_id: model_id.to_string(),
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            response: response.to_string(),
        };
        let path = self.path_for(&key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let mut body = serde_json::to_string_pretty(&record).expect("record serializes");
        body.push('\n');
        std::fs::write(&tmp, body).map_err(|e| io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io(&path, e))?;
        Ok(record)
    }
}

fn cache_failure(e: CacheError) -> ClientError {
    ClientError::Config(e.to_string())
}

/// Serves only cached responses; a miss is an error.
pub struct ReplayClient {
    cache: ReplayCache,
}

impl ReplayClient {
    pub fn new(cache: ReplayCache) -> ReplayClient {
        ReplayClient { cache }
    }
}

impl ModelClient for ReplayClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ClientError> {
        match self.cache.get(request.model_id, request.prompt).map_err(cache_failure)? {
            Some(r) => Ok(r.response),
            None => Err(ClientError::CacheMiss {
                key: cache_key(request.model_id, request.prompt),
            }),
        }
    }
}

/// Answers from the cache when possible, otherwise asks `inner` and stores
/// the answer.
pub struct RecordingClient<C> {
    inner: C,
    cache: ReplayCache,
    write_lock: Mutex<()>,
}

impl<C: ModelClient> RecordingClient<C> {
    pub fn new(inner: C, cache: ReplayCache) -> RecordingClient<C> {
        RecordingClient {
            inner,
            cache,
            write_lock: Mutex::new(()),
        }
    }
}

impl<C: ModelClient> ModelClient for RecordingClient<C> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ClientError> {
        if let Some(r) = self.cache.get(request.model_id, request.prompt).map_err(cache_failure)? {
            return Ok(r.response);
        }
        let response = self.inner.complete(request)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        self.cache
            .put(request.model_id, request.prompt, &response)
            .map_err(cache_failure)?;
        Ok(response)
    }
}
