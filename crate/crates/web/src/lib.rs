//! Live view: static client, websocket stream and recordings listing.
//!
//! Frames from the engine bus are batched every 400 ms and fanned out to
//! all clients. Client requests go through the engine's control channel,
//! the same path the control pipe uses, so every client observes the same
//! interval and layout.

pub mod batcher;
pub mod hub;
pub mod protocol;

use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex};

use axum::extract::ws::{close_code, CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use ccscope_core::{ControlRequest, EngineEvent, IntervalMs, Layout};
use futures_util::{SinkExt, StreamExt};
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::broadcast;

pub use hub::Hub;
pub use protocol::{ClientMessage, Hello, ServerMessage, SUBPROTOCOL};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

const INDEX_HTML: &str = include_str!("../assets/index.html");

#[derive(Clone)]
struct AppState {
    hub: Hub,
    control: Arc<Mutex<Sender<ControlRequest>>>,
    recordings: Arc<PathBuf>,
}

pub struct WebConfig {
    pub recordings_dir: PathBuf,
}

/// A bound live-view server. Call [`serve`](LiveServer::serve) to run it.
pub struct LiveServer {
    listener: TcpListener,
    router: Router,
    hub: Hub,
    events: broadcast::Receiver<EngineEvent>,
}

impl LiveServer {
    /// Binds `addr`. `layout` and `interval` seed the initial `hello`;
    /// `events` must be subscribed before the engine starts emitting so no
    /// frames are missed.
    pub async fn bind(
        addr: &str,
        layout: &Layout,
        interval: IntervalMs,
        events: broadcast::Receiver<EngineEvent>,
        control: Sender<ControlRequest>,
        config: WebConfig,
    ) -> io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let hub = Hub::new(layout, interval);
        let router = router(AppState {
            hub: hub.clone(),
            control: Arc::new(Mutex::new(control)),
            recordings: Arc::new(config.recordings_dir),
        });
        Ok(LiveServer {
            listener,
            router,
            hub,
            events,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn hub(&self) -> Hub {
        self.hub.clone()
    }

    /// Serves until `shutdown` resolves or the engine bus closes.
    pub async fn serve(self, shutdown: impl Future<Output = ()> + Send + 'static) -> io::Result<()> {
        let batcher = tokio::spawn(batcher::run(self.hub.clone(), self.events));
        let stop = async move {
            tokio::select! {
                _ = shutdown => {}
                _ = batcher => {}
            }
        };
        axum::serve(self.listener, self.router)
            .with_graceful_shutdown(stop)
            .await
    }
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(|| async { Html(INDEX_HTML) }))
        .route("/ws", get(websocket))
        .route("/recordings/", get(list_recordings))
        .route("/recordings/{name}", get(fetch_recording))
        .with_state(state)
}

async fn websocket(upgrade: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    upgrade
        .protocols([SUBPROTOCOL])
        .on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (id, mut outbox) = state.hub.join();
    let (mut sink, mut stream) = socket.split();
    let (close_tx, mut close_rx) = tokio::sync::oneshot::channel::<CloseFrame>();
    let writer = tokio::spawn(async move {
        let frame = loop {
            tokio::select! {
                text = outbox.recv() => match text {
                    Some(text) => {
                        if sink.send(Message::Text(text)).await.is_err() {
                            return;
                        }
                    }
                    // The hub dropped us for falling behind.
                    None => break CloseFrame { code: close_code::POLICY, reason: "client too slow".into() },
                },
                frame = &mut close_rx => match frame {
                    Ok(frame) => break frame,
                    Err(_) => return,
                },
            }
        };
        let _ = sink.send(Message::Close(Some(frame))).await;
    });
    let mut protocol_error = None;
    while let Some(Ok(message)) = stream.next().await {
        match message {
            Message::Text(text) => {
                let request = ClientMessage::parse(&text)
                    .map_err(|e| format!("bad message: {e}"))
                    .and_then(|m| {
                        m.into_request(&state.recordings)
                            .ok_or_else(|| "recording name must be a plain file name".to_owned())
                    });
                match request {
                    Ok(request) => {
                        let sent = state.control.lock().map(|c| c.send(request).is_ok()).unwrap_or(false);
                        if !sent {
                            log::warn!("engine stopped; dropping client request");
                        }
                    }
                    Err(reason) => {
                        protocol_error = Some(reason);
                        break;
                    }
                }
            }
            Message::Binary(_) => {
                protocol_error = Some("binary frames are not part of the protocol".to_owned());
                break;
            }
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    state.hub.leave(id);
    match protocol_error {
        Some(reason) => {
            log::info!("closing client {id}: {reason}");
            let mut reason = reason;
            // Close reasons are limited to 123 bytes.
            while reason.len() > 120 {
                reason.pop();
            }
            let _ = close_tx.send(CloseFrame {
                code: close_code::PROTOCOL,
                reason: reason.into(),
            });
            let _ = writer.await;
        }
        None => writer.abort(),
    }
}

#[derive(Serialize)]
struct RecordingEntry {
    name: String,
    size: u64,
}

fn is_recording(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("json" | "jsonl"))
}

async fn list_recordings(State(state): State<AppState>) -> Response {
    let mut entries = Vec::new();
    let mut dir = match tokio::fs::read_dir(state.recordings.as_path()).await {
        Ok(d) => d,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Json(entries).into_response(),
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    while let Ok(Some(entry)) = dir.next_entry().await {
        let path = entry.path();
        let Ok(meta) = entry.metadata().await else { continue };
        if meta.is_file() && is_recording(&path) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                entries.push(RecordingEntry {
                    name: name.to_owned(),
                    size: meta.len(),
                });
            }
        }
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Json(entries).into_response()
}

async fn fetch_recording(UrlPath(name): UrlPath<String>, State(state): State<AppState>) -> Response {
    let path = state.recordings.join(&name);
    if !protocol::is_plain_file_name(&name) || !is_recording(&path) {
        return StatusCode::NOT_FOUND.into_response();
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
