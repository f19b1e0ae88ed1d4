use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use kinvis_api::commands::{self, ExtractArgs};
use kinvis_api::error::{CliError, EXIT_OK};
use kinvis_api::server::{router, AppState, ServeOptions};
use kinvis_core::evaluation::DEFAULT_TOLERANCE_S;
use kinvis_core::extraction::DEFAULT_THRESHOLD_DEG;
use kinvis_core::session_store::{DocumentKind, Registry};

#[derive(Parser)]
#[command(name = "kinvis", version, about = "Head movement and emotion events from pose/AU frame streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Direction,
    Emotion,
}

#[derive(Subcommand)]
enum Command {
    /// Extract events from a replay file into a session registry.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        user: String,
        /// yyyy-mm-dd or D/Mon/YY
        #[arg(long)]
        date: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_DEG)]
        threshold: f64,
        /// Use the uncorrected DOWN/RIGHT and surprise comparisons.
        #[arg(long)]
        literal_rules: bool,
        /// Emit an emotion event for every classified frame instead of on change.
        #[arg(long)]
        per_frame: bool,
        #[arg(long)]
        overwrite: bool,
    },
    /// Generate a replay file and ground truth from a script.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Score a session document against ground truth.
    Evaluate {
        #[arg(long)]
        extracted: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE_S)]
        tol: f64,
    },
    /// Print time buckets over every session in a registry.
    Aggregate {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 2.0)]
        width: f64,
        /// Comma-separated emotions to count (emotion kind only).
        #[arg(long)]
        filter: Option<String>,
    },
    /// Serve the registry over HTTP.
    Serve {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, env = "KINVIS_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Directory of built dashboard assets.
        #[arg(long)]
        assets: Option<PathBuf>,
        /// Allowed CORS origin; repeatable. Any origin when omitted.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
        /// Seconds between registry change checks; 0 disables reloading.
        #[arg(long, default_value_t = 2)]
        watch_interval: u64,
    },
}

fn serve(
    registry: PathBuf,
    addr: SocketAddr,
    options: ServeOptions,
    watch_interval: u64,
) -> Result<String, CliError> {
    let registry = Registry::open(registry)?;
    let state = AppState::load(registry)?;
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::io)?;
    runtime.block_on(async move {
        if watch_interval > 0 {
            tokio::spawn(state.clone().watch(Duration::from_secs(watch_interval)));
        }
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| CliError::io(format!("{addr}: {e}")))?;
        log::info!("serving on http://{addr}");
        axum::serve(listener, router(state, &options))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::io)?;
        Ok(String::new())
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Extract { input, out_dir, user, date, threshold, literal_rules, per_frame, overwrite } => {
            commands::extract(&ExtractArgs { input, out_dir, user, date, threshold, literal_rules, per_frame, overwrite })
        }
        Command::Synth { script, out, truth } => commands::synth(&script, &out, &truth),
        Command::Evaluate { extracted, truth, tol } => commands::evaluate(&extracted, &truth, tol),
        Command::Aggregate { registry, kind, width, filter } => {
            let kind = match kind {
                Kind::Direction => DocumentKind::Movement,
                Kind::Emotion => DocumentKind::Emotion,
            };
            commands::aggregate(&registry, kind, width, filter.as_deref())
        }
        Command::Serve { registry, port, bind, assets, cors_origins, watch_interval } => {
            let options = ServeOptions { assets, cors_origins: (!cors_origins.is_empty()).then_some(cors_origins) };
            serve(registry, SocketAddr::new(bind, port), options, watch_interval)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::from(EXIT_OK)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
