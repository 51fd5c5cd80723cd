use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, ProviderError};

/// One JSON line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub digest: String,
    pub request: ChatRequest,
    pub response_text: String,
    pub latency_seconds: f64,
}

impl FixtureRecord {
    pub fn new(request: &ChatRequest, response: &ChatResponse) -> Self {
        Self {
            digest: request.digest(),
            request: request.clone(),
            response_text: response.text.clone(),
            latency_seconds: response.latency_seconds,
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> ProviderError {
    ProviderError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Appends fixture records; writes from concurrent callers are serialized.
#[derive(Debug)]
pub struct FixtureWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl FixtureWriter {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_error(&path, e))?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &FixtureRecord) -> Result<(), ProviderError> {
        let mut line = serde_json::to_vec(record).expect("fixture record serializes");
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line).map_err(|e| io_error(&self.path, e))?;
        file.flush().map_err(|e| io_error(&self.path, e))
    }
}

/// Appends one record to `fixture_path`.
pub fn record_fixture(
    request: &ChatRequest,
    response: &ChatResponse,
    fixture_path: &Path,
) -> Result<(), ProviderError> {
    static LOCK: Mutex<()> = Mutex::new(());
    let _guard = LOCK.lock().unwrap_or_else(|p| p.into_inner());
    FixtureWriter::open(fixture_path)?.append(&FixtureRecord::new(request, response))
}

/// Replays recorded responses by request digest.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    entries: HashMap<String, (String, f64)>,
    collisions: Vec<String>,
}

impl ScriptedBackend {
    /// Reads a fixture file. A digest seen twice keeps the later record.
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        let mut backend = Self::default();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_error(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: FixtureRecord = serde_json::from_str(&line).map_err(|e| ProviderError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            backend.insert(rec);
        }
        Ok(backend)
    }

    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut backend = Self::default();
        for r in records {
            backend.insert(r);
        }
        backend
    }

    fn insert(&mut self, rec: FixtureRecord) {
        if self
            .entries
            .insert(rec.digest.clone(), (rec.response_text, rec.latency_seconds))
            .is_some()
        {
            tracing::warn!(digest = %rec.digest, "duplicate fixture digest; keeping the later record");
            self.collisions.push(rec.digest);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Digests that were overwritten by a later record, in file order.
    pub fn collisions(&self) -> &[String] {
        &self.collisions
    }

    pub fn lookup(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let digest = request.digest();
        let (text, latency) = self
            .entries
            .get(&digest)
            .ok_or(ProviderError::FixtureMiss { digest })?;
        Ok(ChatResponse {
            text: text.clone(),
            latency_seconds: *latency,
            provider_meta: [("backend".to_string(), "scripted".into())].into(),
        })
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.lookup(request)
    }
}

/// Forwards to an inner backend and appends every successful exchange to a
/// fixture file.
pub struct RecordingBackend<B> {
    inner: B,
    writer: FixtureWriter,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, writer: FixtureWriter) -> Self {
        Self { inner, writer }
    }
}

#[async_trait]
impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let response = self.inner.complete(request).await?;
        self.writer.append(&FixtureRecord::new(request, &response))?;
        Ok(response)
    }
}
