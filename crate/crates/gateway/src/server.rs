//! WebSocket transport for the driver: one JSON line per text frame on `/chat`.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use crate::connection::{drive, Gateway};

const INBOUND_BUFFER: usize = 64;
const OUTBOUND_BUFFER: usize = 1024;

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new().route("/chat", get(chat)).with_state(gateway)
}

async fn chat(ws: WebSocketUpgrade, State(gateway): State<Arc<Gateway>>) -> Response {
    ws.on_upgrade(move |socket| run_socket(gateway, socket))
}

async fn run_socket(gateway: Arc<Gateway>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (in_tx, in_rx) = mpsc::channel::<String>(INBOUND_BUFFER);
    let (out_tx, mut out_rx) = mpsc::channel::<String>(OUTBOUND_BUFFER);

    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(text) => {
                    for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                        if in_tx.send(line.to_owned()).await.is_err() {
                            return;
                        }
                    }
                }
                Message::Close(_) => return,
                _ => {}
            }
        }
    });
    let writer = tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if sink.send(Message::Text(line.into())).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    });

    drive(gateway, in_rx, out_tx).await;
    reader.abort();
    let _ = writer.await;
}

/// Serves `/chat` on an already bound listener until the task is dropped.
pub async fn serve(gateway: Arc<Gateway>, listener: TcpListener) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "gateway listening");
    axum::serve(listener, router(gateway)).await
}
