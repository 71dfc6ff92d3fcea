use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{wire_body, ChatClient, ChatEndpoint, ChatRequest, LlmError};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Serialize, Deserialize)]
struct Entry {
    key_material: serde_json::Value,
    response: String,
}

/// Content-addressed response cache: one file per
/// sha256(endpoint identity, request body, draw). Writes go through a
/// temporary file and an atomic rename, so concurrent readers never see a
/// partial entry. Errors are never cached.
pub struct CachedClient {
    inner: Arc<dyn ChatClient>,
    dir: PathBuf,
}

impl CachedClient {
    pub fn new(inner: Arc<dyn ChatClient>, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CachedClient { inner, dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key_material(&self, req: &ChatRequest) -> serde_json::Value {
        json!({
            "endpoint": self.inner.endpoint().identity(),
            "body": wire_body(self.inner.endpoint(), req),
            "draw": req.draw,
        })
    }

    pub fn cache_key(&self, req: &ChatRequest) -> String {
        let material = serde_json::to_vec(&self.key_material(req)).expect("json");
        hex::encode(Sha256::digest(material))
    }
}

impl ChatClient for CachedClient {
    fn endpoint(&self) -> &ChatEndpoint {
        self.inner.endpoint()
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let path = self.dir.join(format!("{}.json", self.cache_key(req)));
        match fs::read(&path) {
            Ok(bytes) => {
                let entry: Entry = serde_json::from_slice(&bytes)
                    .map_err(|e| LlmError::Cache(format!("corrupt entry {}: {e}", path.display())))?;
                return Ok(entry.response);
            }
            Err(e) if e.kind() == ErrorKind::NotFound => {}
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        }
        let response = self.inner.complete(req)?;
        let entry = Entry {
            key_material: self.key_material(req),
            response,
        };
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let write = fs::write(&tmp, serde_json::to_vec(&entry).expect("json")).and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = write {
            let _ = fs::remove_file(&tmp);
            return Err(LlmError::Cache(format!("{}: {e}", path.display())));
        }
        Ok(entry.response)
    }
}
