//! Helpers shared by the harness integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use harness::synth::synth_fixtures;
use harness::{run_experiment, RunConfig, RunSummary};
use kidscaffold::provider::{BackendConfig, ChatBackend, ChatRequest, ChatResponse, ProviderError, ScriptedBackend};

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/gold_corpus.csv")
}

/// Scripted config writing into `dir`, with synthesized fixtures.
pub fn scripted_config(dir: &Path) -> RunConfig {
    let fixtures = dir.join("fixtures.jsonl");
    let mut config = RunConfig::new(BackendConfig::scripted(&fixtures), corpus_path(), dir.join("out"));
    config.parallelism = 8;
    if !fixtures.exists() {
        synth_fixtures(&config, &fixtures).expect("fixtures synthesize");
    }
    config
}

/// Wraps a backend, counting calls and failing the requests `fail` selects.
pub struct Counting<B> {
    pub inner: B,
    pub calls: AtomicUsize,
    pub fail: fn(&ChatRequest) -> bool,
}

impl<B> Counting<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            fail: |_| false,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl<B: ChatBackend> ChatBackend for Counting<B> {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if (self.fail)(request) {
            return Err(ProviderError::Transport("injected failure".into()));
        }
        self.inner.complete(request).await
    }
}

pub fn scripted_backend(config: &RunConfig) -> Arc<Counting<ScriptedBackend>> {
    let path = config.backend.fixture_path.as_ref().expect("scripted config");
    Arc::new(Counting::new(ScriptedBackend::load(path).expect("fixtures load")))
}

pub async fn scripted_run(config: &RunConfig) -> (RunSummary, usize) {
    let backend = scripted_backend(config);
    let summary = run_experiment(config, backend.clone()).await.expect("run succeeds");
    (summary, backend.calls())
}
