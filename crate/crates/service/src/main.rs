use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use digestweaver::{FetchMode, PipelineConfig, ProfileStore};
use digestweaver_service::{router, AppState, FixtureProvider};

/// Serve the digest pipeline over HTTP.
#[derive(Debug, Parser)]
#[command(name = "digestweaver-service", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory of result lists keyed by query.
    #[arg(long)]
    fixtures: PathBuf,
    #[arg(long, default_value = "profiles.json")]
    profile_store: PathBuf,
    /// Built web UI to serve under `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Fetch result URLs instead of their local html_path files.
    #[arg(long)]
    online: bool,
    #[arg(long)]
    template: Option<PathBuf>,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    let mut defaults = PipelineConfig {
        template_path: args.template,
        ..PipelineConfig::default()
    };
    if !args.online {
        defaults.fetch.mode = FetchMode::Offline;
    }
    if let Err(e) = defaults.template() {
        eprintln!("digestweaver-service: {e}");
        std::process::exit(1);
    }
    let state = AppState::new(
        Arc::new(FixtureProvider::new(args.fixtures)),
        ProfileStore::new(args.profile_store),
        defaults,
    );
    let app = router(state, args.static_dir.as_deref());
    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("digestweaver-service: cannot bind {}: {e}", args.addr);
            std::process::exit(2);
        }
    };
    eprintln!("listening on http://{}", args.addr);
    if let Err(e) = axum::serve(listener, app).await {
        eprintln!("digestweaver-service: {e}");
        std::process::exit(2);
    }
}
