use std::future::Future;

use tokio::net::TcpListener;

use vaxledger_core::engine::SharedEngine;

use crate::api::{router, AppState};
use crate::config::{ConfigError, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: std::net::SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
    #[error("final flush failed: {0}")]
    Flush(String),
}

/// Serve on `listener` until `shutdown` resolves, then mine whatever is
/// still pending. Returns the number of blocks added by that final flush.
pub async fn serve_until(
    listener: TcpListener,
    engine: SharedEngine,
    test_routes: bool,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<usize, ServeError> {
    let app = router(AppState { engine: engine.clone(), test_routes });
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    let flushed = tokio::task::spawn_blocking(move || engine.write().flush())
        .await
        .map_err(|e| ServeError::Flush(e.to_string()))?
        .map_err(|e| ServeError::Flush(e.to_string()))?;
    tracing::info!(blocks = flushed, "pending pool flushed");
    Ok(flushed)
}

/// Build the engine from `config`, bind, and serve until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let engine = config.build_engine()?.into_shared();
    let listener = TcpListener::bind(config.listen_address)
        .await
        .map_err(|source| ServeError::Bind { addr: config.listen_address, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve_until(listener, engine, config.deterministic_seed.is_some(), shutdown).await?;
    Ok(())
}
