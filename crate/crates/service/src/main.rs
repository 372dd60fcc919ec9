use std::net::{Ipv4Addr, SocketAddr};
use std::time::Duration;

use clap::Parser;
use dmpcorr_service::store::StoreConfig;
use dmpcorr_service::{router, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "dmpcorr-service",
    version,
    about = "HTTP service for DMP fitting and correction"
)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Listen on all interfaces instead of loopback only.
    #[arg(long)]
    public: bool,
    /// Idle session lifetime in seconds.
    #[arg(long, default_value_t = 3600)]
    session_ttl: u64,
    #[arg(long, default_value_t = 64)]
    max_sessions: usize,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let host = if args.public {
        Ipv4Addr::UNSPECIFIED
    } else {
        Ipv4Addr::LOCALHOST
    };
    let addr = SocketAddr::from((host, args.port));
    let state = AppState::new(StoreConfig {
        ttl: Duration::from_secs(args.session_ttl),
        capacity: args.max_sessions,
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
