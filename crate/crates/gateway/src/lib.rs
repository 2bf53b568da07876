//! Network chat service streaming typing traces to clients.

pub mod config;
pub mod connection;
pub mod logsink;
pub mod protocol;
pub mod server;

pub use config::{GatewayConfig, GatewayConfigError};
pub use connection::{drive, waiting_room_delay, Gateway, TokioClock};
pub use logsink::{FailingLogSink, FileLogSink, LogSink, MemoryLogSink};
pub use protocol::{ClientMessage, NoticeKind, ServerMessage};
pub use server::{router, serve};
