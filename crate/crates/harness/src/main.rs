use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use harness::analysis::{analyze_file, AnalysisOptions};
use harness::serve::{serve, AppState, ServeOptions};
use harness::{run_experiment, RunConfig};
use kidscaffold::grid::{build_grid, load_gold_corpus, summarize};
use kidscaffold::provider::{connect, BackendKind, FixtureWriter, LiveBackend, RecordingBackend};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "kidscaffold", version, about = "Run and analyze the recipe-vs-vanilla evaluation")]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, default_value = "configs/scripted.toml")]
    config: PathBuf,

    /// Override the backend kind from the config
    #[arg(long, global = true)]
    backend: Option<Backend>,

    /// Override the output directory from the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the number of cases in flight
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Live,
    Scripted,
}

#[derive(Subcommand)]
enum Command {
    /// Print case counts for the configured grid
    Grid,
    /// Execute every pending grid case and write results.jsonl
    Run,
    /// Compute the H1-H4 report from a results file
    Analyze {
        /// Results file (defaults to <out>/results.jsonl)
        #[arg(long)]
        results: Option<PathBuf>,
        /// Group H1 over both configurations
        #[arg(long)]
        h1_both_configs: bool,
    },
    /// Serve the live-session HTTP API
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Sampling temperature for live sessions
        #[arg(long, default_value_t = 0.7)]
        temperature: f64,
        /// Minutes of inactivity before a session expires
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
    /// Run the grid against the live backend, recording every exchange
    Record {
        /// Fixture file to append to (defaults to the config's fixture_path)
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Write hand-authored scripted fixtures for the grid
    SynthFixtures {
        /// Fixture file to write (defaults to the config's fixture_path)
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = RunConfig::load(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(b) = cli.backend {
        config.backend.kind = match b {
            Backend::Live => BackendKind::Live,
            Backend::Scripted => BackendKind::Scripted,
        };
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(p) = cli.parallelism {
        config.parallelism = p;
    }
    config.validate()?;
    Ok(config)
}

fn fixture_path(config: &RunConfig, flag: &Option<PathBuf>) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.backend.fixture_path.clone())
        .context("no fixture path: pass --fixtures or set backend.fixture_path")
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config = load_config(&cli)?;

    match &cli.command {
        Command::Grid => {
            let corpus = load_gold_corpus(&config.corpus_path)?;
            let cases = build_grid(&corpus, &config.temperatures, &config.configurations)?;
            for ((c, m), n) in summarize(&cases) {
                println!("{:<8} {:<14} {n}", c.to_string(), m.to_string());
            }
            println!("total            {}", cases.len());
            println!("corpus digest    {}", corpus.digest);
        }
        Command::Run => {
            let backend = connect(&config.backend)?;
            let summary = run_experiment(&config, backend).await?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if summary.degraded {
                eprintln!("warning: run degraded ({} of {} cases failed)", summary.failed, summary.total_cases);
            }
        }
        Command::Analyze {
            results,
            h1_both_configs,
        } => {
            let results = results.clone().unwrap_or_else(|| config.results_path());
            let options = AnalysisOptions {
                h1_both_configs: *h1_both_configs,
                ..Default::default()
            };
            let (_, files) = analyze_file(&results, &config.report_dir(), &options)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Serve {
            port,
            temperature,
            idle_minutes,
        } => {
            let backend = connect(&config.backend)?;
            let options = ServeOptions {
                model_id: config.model_id.clone(),
                temperature: *temperature,
                max_output_tokens: config.max_output_tokens,
                idle_timeout: Duration::from_secs(idle_minutes * 60),
            };
            let listener = tokio::net::TcpListener::bind(("0.0.0.0", *port))
                .await
                .with_context(|| format!("binding port {port}"))?;
            serve(listener, AppState::new(backend, options)).await?;
        }
        Command::Record { fixtures } => {
            if config.backend.kind != BackendKind::Live {
                bail!("record needs the live backend (set backend.kind or pass --backend live)");
            }
            let path = fixture_path(&config, fixtures)?;
            let live = LiveBackend::new(&config.backend)?;
            let backend = Arc::new(RecordingBackend::new(live, FixtureWriter::open(&path)?));
            let summary = run_experiment(&config, backend).await?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::SynthFixtures { fixtures } => {
            let path = fixture_path(&config, fixtures)?;
            let n = harness::synth::synth_fixtures(&config, &path)?;
            println!("wrote {n} fixtures to {}", path.display());
        }
    }
    Ok(())
}
