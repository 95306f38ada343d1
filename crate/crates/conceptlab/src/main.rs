use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use conceptlab::bundle::ModelBundle;
use conceptlab::config::{PipelineConfig, DEFAULT_TOML};
use conceptlab::pipeline::{Pipeline, Stage};
use conceptlab::{service, Error, Result};

/// Concept discovery from image/attribute pairs: pipeline stages and HTTP service.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Pipeline config (TOML). The embedded default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory, overriding the config's `artifact_dir`.
    #[arg(long, global = true)]
    artifacts: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the planted corpus, or ingest a dataset directory.
    Generate {
        #[arg(long)]
        ingest: Option<PathBuf>,
    },
    TrainWord2vec,
    TrainEmbedding,
    ComputeAams,
    Cluster,
    TrainSubspaces,
    /// Write clustering, retrieval and diagnostic reports.
    Evaluate,
    /// Every stage in order.
    RunAll,
    /// Serve a finished artifact directory over HTTP.
    Serve {
        /// Defaults to the artifact directory.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
    /// Print the default config.
    PrintConfig,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default_config(),
    };
    let dir = cli.artifacts.clone().unwrap_or_else(|| cfg.artifact_dir.clone());
    let pipeline = Pipeline::new(cfg, dir);
    let stage = match cli.command {
        Command::PrintConfig => {
            print!("{DEFAULT_TOML}");
            return Ok(());
        }
        Command::RunAll => return pipeline.run_all(),
        Command::Serve { bundle, port, bind } => {
            let dir = bundle.unwrap_or_else(|| pipeline.dir.clone());
            let bundle = Arc::new(ModelBundle::load(&dir)?);
            log::info!("bundle {} loaded from {}", bundle.hash, dir.display());
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Serve(e.to_string()))?;
            return rt.block_on(service::serve(bundle, SocketAddr::new(bind, port)));
        }
        Command::Generate { ingest } => Stage::Generate { ingest },
        Command::TrainWord2vec => Stage::TrainWord2vec,
        Command::TrainEmbedding => Stage::TrainEmbedding,
        Command::ComputeAams => Stage::ComputeAams,
        Command::Cluster => Stage::Cluster,
        Command::TrainSubspaces => Stage::TrainSubspaces,
        Command::Evaluate => Stage::Evaluate,
    };
    pipeline.run(&stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config-error status
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
