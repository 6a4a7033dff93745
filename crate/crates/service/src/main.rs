use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use grouphoto::dataset::DatasetConfig;
use grouphoto_service::{Service, ServiceConfig};

/// Serve the photo rating API and, optionally, the browser UI.
#[derive(Parser)]
#[command(name = "grouphoto-serve", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Records file (JSON lines), created if missing.
    #[arg(long, default_value = "records.jsonl")]
    store: PathBuf,
    #[arg(long, default_value = "images")]
    images: PathBuf,
    /// Directory with the built UI.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    min_raters: usize,
    #[arg(long, default_value_t = 20)]
    max_raters: usize,
    #[arg(long, default_value_t = 6.0)]
    good_threshold: f64,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let dataset = DatasetConfig {
        min_raters: args.min_raters,
        max_raters: args.max_raters,
        good_threshold: args.good_threshold,
    };
    if let Err(e) = dataset.validate() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    let service = match Service::start(ServiceConfig {
        store: args.store,
        image_dir: args.images,
        static_dir: args.static_dir,
        dataset,
        seed: None,
    }) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    };
    let listener = match tokio::net::TcpListener::bind(args.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {}: {e}", args.bind);
            std::process::exit(3);
        }
    };
    log::info!("listening on {}", args.bind);
    let served = axum::serve(listener, service.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    service.shutdown();
    if let Err(e) = served {
        eprintln!("error: {e}");
        std::process::exit(3);
    }
}
