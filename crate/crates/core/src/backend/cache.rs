//! Persistent content-addressed response cache.
//!
//! Entries live one-per-file under the cache directory, named by the request
//! digest. Writes go to a temp file in the same directory and are renamed
//! into place, so concurrent writers of the same key both succeed and leave
//! exactly one durable entry. Corrupt entries are treated as misses.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{cache_key, BackendRequest, ModelBackend};
use crate::error::Result;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CachedResponse {
    Text { text: String },
    Logprobs { logprobs: Vec<f64> },
}

/// Wraps any backend with a read-through disk cache.
pub struct CachingBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: ModelBackend> CachingBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(CachingBackend { inner, dir })
    }

    fn entry_path(&self, request: &BackendRequest) -> PathBuf {
        self.dir
            .join(format!("{}.json", cache_key(request, &self.inner.model_id())))
    }

    fn load(&self, request: &BackendRequest) -> Option<CachedResponse> {
        let path = self.entry_path(request);
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(entry) => Some(entry),
            Err(e) => {
                eprintln!(
                    "warning: corrupt cache entry {} treated as miss: {e}",
                    path.display()
                );
                None
            }
        }
    }

    fn store(&self, request: &BackendRequest, response: &CachedResponse) {
        let path = self.entry_path(request);
        let write = || -> Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            serde_json::to_writer(&mut tmp, response)?;
            tmp.persist(&path).map_err(|e| e.error)?;
            Ok(())
        };
        if let Err(e) = write() {
            eprintln!("warning: cache write failed for {}: {e}", path.display());
        }
    }
}

impl<B: ModelBackend> ModelBackend for CachingBackend<B> {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        if let Some(CachedResponse::Text { text }) = self.load(request) {
            return Ok(text);
        }
        let text = self.inner.generate(request)?;
        self.store(request, &CachedResponse::Text { text: text.clone() });
        Ok(text)
    }

    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        if let Some(CachedResponse::Logprobs { logprobs }) = self.load(request) {
            return Ok(logprobs);
        }
        let logprobs = self.inner.logprobs(request)?;
        self.store(
            request,
            &CachedResponse::Logprobs {
                logprobs: logprobs.clone(),
            },
        );
        Ok(logprobs)
    }

    fn judge(&self, request: &BackendRequest) -> Result<String> {
        if let Some(CachedResponse::Text { text }) = self.load(request) {
            return Ok(text);
        }
        let text = self.inner.judge(request)?;
        self.store(request, &CachedResponse::Text { text: text.clone() });
        Ok(text)
    }

    fn model_id(&self) -> String {
        self.inner.model_id()
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{CountingBackend, GenParams, MockBackend, MockScript};

    #[test]
    fn second_call_hits_cache_without_inner_call() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockBackend::new(MockScript {
            generate_queue: vec!["only once".into()],
            ..MockScript::default()
        })
        .unwrap();
        let counter = CountingBackend::new(&mock);
        let cached = CachingBackend::new(&counter, dir.path()).unwrap();
        let req = BackendRequest::generate("prompt", GenParams::default());

        assert_eq!(cached.generate(&req).unwrap(), "only once");
        assert_eq!(cached.generate(&req).unwrap(), "only once");
        assert_eq!(counter.counts().generate, 1);
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockBackend::new(MockScript::default()).unwrap();
        let cached = CachingBackend::new(&mock, dir.path()).unwrap();
        let req = BackendRequest::generate("p", GenParams::default());
        cached.generate(&req).unwrap();
        // clobber the entry
        let entry = std::fs::read_dir(dir.path())
            .unwrap()
            .next()
            .unwrap()
            .unwrap()
            .path();
        std::fs::write(&entry, b"{ not json").unwrap();
        assert_eq!(cached.generate(&req).unwrap(), "");
    }
}
