//! Experiment orchestration for the kidscaffold recipe: grid execution
//! against a chat backend, the H1-H4 statistical report, and the HTTP
//! service behind the chat client.

pub mod analysis;
pub mod config;
pub mod report;
pub mod runner;
pub mod serve;
pub mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use analysis::{analyze, analyze_file, load_results, AnalysisOptions, StatReport};
pub use config::RunConfig;
pub use runner::{run_experiment, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Results {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Grid(#[from] kidscaffold::grid::GridError),
    #[error(transparent)]
    Provider(#[from] kidscaffold::provider::ProviderError),
    #[error(transparent)]
    Recipe(#[from] kidscaffold::recipe::RecipeError),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
