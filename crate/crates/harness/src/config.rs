use std::path::{Path, PathBuf};

use kidscaffold::grid::{Configuration, DEFAULT_TEMPERATURES};
use kidscaffold::provider::BackendConfig;
use serde::{Deserialize, Serialize};

use crate::{io_err, HarnessError};

fn default_temperatures() -> Vec<f64> {
    DEFAULT_TEMPERATURES.to_vec()
}

fn default_configurations() -> Vec<Configuration> {
    Configuration::ALL.to_vec()
}

fn default_parallelism() -> usize {
    4
}

fn default_model() -> String {
    "gpt-4o-mini".into()
}

fn default_max_tokens() -> u32 {
    512
}

fn default_corpus() -> PathBuf {
    "data/gold_corpus.csv".into()
}

fn default_output() -> PathBuf {
    "runs/latest".into()
}

/// Everything a run needs. Relative paths in a config file resolve against
/// the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendConfig,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_configurations")]
    pub configurations: Vec<Configuration>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_corpus")]
    pub corpus_path: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Free text copied into the run summary.
    #[serde(default)]
    pub seed_note: String,
}

impl RunConfig {
    pub fn new(backend: BackendConfig, corpus_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            backend,
            model_id: default_model(),
            max_output_tokens: default_max_tokens(),
            temperatures: default_temperatures(),
            configurations: default_configurations(),
            parallelism: default_parallelism(),
            corpus_path: corpus_path.into(),
            output_dir: output_dir.into(),
            seed_note: String::new(),
        }
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        rebase(&mut config.corpus_path);
        rebase(&mut config.output_dir);
        if let Some(p) = config.backend.fixture_path.as_mut() {
            rebase(p);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.temperatures.len() != 3 {
            return bad(format!("expected 3 temperatures, got {}", self.temperatures.len()));
        }
        if self.configurations.is_empty() {
            return bad("configurations must not be empty".into());
        }
        if self.model_id.trim().is_empty() {
            return bad("model_id must not be empty".into());
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive".into());
        }
        self.backend.validate()?;
        Ok(())
    }

    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join("results.jsonl")
    }

    pub fn results_csv_path(&self) -> PathBuf {
        self.output_dir.join("results.csv")
    }

    pub fn requests_path(&self) -> PathBuf {
        self.output_dir.join("requests.jsonl")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.output_dir.join("summary.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.output_dir.join("report")
    }
}
