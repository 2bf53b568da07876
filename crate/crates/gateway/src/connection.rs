//! Per-connection session driver.
//!
//! The driver speaks JSON lines over a pair of channels and is independent of
//! the transport. Wall-clock pacing happens here: each event is released at
//! `message start + event.t` on the tokio clock, so tests run it under paused
//! time.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tokio::sync::mpsc;
use tokio::time::{sleep, sleep_until, Instant};
use typesim_core::lexicon::{Lexicon, LexiconError};
use typesim_core::runtime::{Clock, Preset, RuntimeError, Session};
use typesim_core::seed::{derive_seed, stream};
use typesim_core::trace_file::Record;
use typesim_core::transcript::{LogRecord, MessageRecord, MessageStatus};

use crate::config::GatewayConfig;
use crate::logsink::{FileLogSink, LogSink};
use crate::protocol::{text_record, ClientMessage, NoticeKind, ServerMessage};

/// Slack when comparing elapsed wall time against event timestamps, ms.
const DUE_EPSILON_MS: f64 = 1e-3;

/// Unix ms derived from the tokio clock, so paused-time tests see consistent
/// log timestamps.
pub struct TokioClock {
    origin: Instant,
    origin_ms: u64,
}

impl TokioClock {
    pub fn new(origin_ms: u64) -> Self {
        TokioClock {
            origin: Instant::now(),
            origin_ms,
        }
    }

    pub fn from_system_time() -> Self {
        Self::new(typesim_core::runtime::SystemClock.now_ms())
    }
}

impl Clock for TokioClock {
    fn now_ms(&self) -> u64 {
        self.origin_ms + self.origin.elapsed().as_millis() as u64
    }
}

/// State shared by every connection.
pub struct Gateway {
    pub config: GatewayConfig,
    pub lexicon: Arc<Lexicon>,
    pub sink: Arc<dyn LogSink>,
    pub clock: Arc<dyn Clock>,
    connections: AtomicU64,
}

impl Gateway {
    pub fn new(config: GatewayConfig, lexicon: Arc<Lexicon>, sink: Arc<dyn LogSink>, clock: Arc<dyn Clock>) -> Arc<Self> {
        Arc::new(Gateway {
            config,
            lexicon,
            sink,
            clock,
            connections: AtomicU64::new(0),
        })
    }

    /// File logging under `config.logDir` and the configured lexicon. Call
    /// from inside a tokio runtime.
    pub fn from_config(config: GatewayConfig) -> Result<Arc<Self>, LexiconError> {
        let lexicon = Arc::new(Lexicon::from_config(&config.lexicon)?);
        let sink = Arc::new(FileLogSink::new(config.log_dir.clone()));
        Ok(Self::new(config, lexicon, sink, Arc::new(TokioClock::from_system_time())))
    }

    fn connection_rng(&self) -> ChaCha8Rng {
        let index = self.connections.fetch_add(1, Ordering::SeqCst);
        match self.config.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::SESSION, index)),
            None => ChaCha8Rng::from_rng(&mut rand::rng()),
        }
    }
}

/// Uniform integer delay in the inclusive range.
pub fn waiting_room_delay<R: Rng + ?Sized>(range: [u64; 2], rng: &mut R) -> u64 {
    rng.random_range(range[0]..=range[1])
}

struct Disconnected;

struct InFlight {
    message_id: u64,
    start: Instant,
    visible: bool,
}

struct Connection {
    gw: Arc<Gateway>,
    out: mpsc::Sender<String>,
    rng: ChaCha8Rng,
    session: Option<Session>,
    visible: bool,
    queue: VecDeque<String>,
    inflight: Option<InFlight>,
}

/// Runs one connection until the inbound channel closes or the client stops
/// reading. An in-flight message is then logged as interrupted.
pub async fn drive(gw: Arc<Gateway>, mut inbound: mpsc::Receiver<String>, out: mpsc::Sender<String>) {
    let rng = gw.connection_rng();
    let mut conn = Connection {
        gw,
        out,
        rng,
        session: None,
        visible: true,
        queue: VecDeque::new(),
        inflight: None,
    };
    if conn.open_phase(&mut inbound).await.is_ok() {
        let _ = conn.chat_phase(&mut inbound).await;
    }
    conn.close().await;
}

fn parse(line: &str) -> Result<ClientMessage, String> {
    serde_json::from_str(line).map_err(|e| format!("unreadable message: {e}"))
}

impl Connection {
    async fn send(&self, msg: ServerMessage) -> Result<(), Disconnected> {
        self.out.send(msg.to_line()).await.map_err(|_| Disconnected)
    }

    async fn notice(&self, kind: NoticeKind, text: impl Into<String>) -> Result<(), Disconnected> {
        self.send(ServerMessage::Notice { kind, text: text.into() }).await
    }

    async fn persist(&self, record: LogRecord) -> Result<(), Disconnected> {
        let at = self.gw.clock.now_ms();
        if let Err(e) = self.gw.sink.append(&record, at) {
            tracing::warn!(error = %e, "log write failed");
            self.notice(NoticeKind::PersistenceError, e.to_string()).await?;
        }
        Ok(())
    }

    async fn persist_message(&self, record: Option<MessageRecord>) -> Result<(), Disconnected> {
        match record {
            Some(r) => self.persist(LogRecord::Message(r)).await,
            None => Ok(()),
        }
    }

    async fn open_phase(&mut self, inbound: &mut mpsc::Receiver<String>) -> Result<(), Disconnected> {
        loop {
            let line = inbound.recv().await.ok_or(Disconnected)?;
            match parse(&line) {
                Ok(ClientMessage::OpenSession { preset, config, seed }) => {
                    if self.open(preset, config, seed).await? {
                        return Ok(());
                    }
                }
                Ok(ClientMessage::SetVisibility { show_typing }) => self.visible = show_typing,
                Ok(_) => self.notice(NoticeKind::ProtocolError, "open a session first").await?,
                Err(e) => self.notice(NoticeKind::ProtocolError, e).await?,
            }
        }
    }

    async fn open(&mut self, preset: Option<Preset>, config: Option<Value>, seed: Option<u64>) -> Result<bool, Disconnected> {
        let agent = match self.gw.config.resolve_agent(preset, config.as_ref()) {
            Ok(a) => a,
            Err(e) => {
                self.notice(NoticeKind::ValidationError, e.to_string()).await?;
                return Ok(false);
            }
        };
        let delay = waiting_room_delay(self.gw.config.waiting_room_ms, &mut self.rng);
        let session_id = format!("s-{:016x}", self.rng.random::<u64>());
        let session_seed = seed.unwrap_or_else(|| self.rng.random());
        let session = match Session::open(
            session_id.clone(),
            agent,
            session_seed,
            Arc::clone(&self.gw.lexicon),
            Arc::clone(&self.gw.clock),
        ) {
            Ok(s) => s,
            Err(e) => {
                self.notice(NoticeKind::ValidationError, e.to_string()).await?;
                return Ok(false);
            }
        };
        self.send(ServerMessage::WaitingRoom { delay_ms: delay }).await?;
        sleep(Duration::from_millis(delay)).await;
        self.session = Some(session);
        self.send(ServerMessage::SessionReady { session_id }).await?;
        Ok(true)
    }

    async fn chat_phase(&mut self, inbound: &mut mpsc::Receiver<String>) -> Result<(), Disconnected> {
        loop {
            if self.inflight.is_none() {
                if let Some(text) = self.queue.pop_front() {
                    self.start_message(text).await?;
                    continue;
                }
            }
            let deadline = self.next_deadline();
            tokio::select! {
                biased;
                line = inbound.recv() => match line {
                    Some(line) => self.handle(&line).await?,
                    None => return Err(Disconnected),
                },
                _ = async { sleep_until(deadline.expect("guarded")).await }, if deadline.is_some() => {
                    self.emit_due().await?;
                }
            }
        }
    }

    fn session(&mut self) -> &mut Session {
        self.session.as_mut().expect("chat phase has a session")
    }

    async fn handle(&mut self, line: &str) -> Result<(), Disconnected> {
        match parse(line) {
            Ok(ClientMessage::UserMessage { text }) => {
                if text.trim().is_empty() {
                    self.notice(NoticeKind::ValidationError, "message is empty").await?;
                } else {
                    self.queue.push_back(text);
                }
            }
            Ok(ClientMessage::UpdateParams { patch }) => match self.session().update_params(&patch) {
                Ok(applied) => {
                    let text = serde_json::to_string(&applied).expect("params serialize");
                    self.notice(NoticeKind::ParamsApplied, text).await?;
                }
                Err(e) => self.notice(NoticeKind::ValidationError, e.to_string()).await?,
            },
            Ok(ClientMessage::SetVisibility { show_typing }) => self.visible = show_typing,
            Ok(ClientMessage::OpenSession { .. }) => {
                self.notice(NoticeKind::ProtocolError, "session already open").await?;
            }
            Err(e) => self.notice(NoticeKind::ProtocolError, e).await?,
        }
        Ok(())
    }

    async fn start_message(&mut self, text: String) -> Result<(), Disconnected> {
        let (turn, user_record) = match self.session().begin(&text) {
            Ok(t) => t,
            Err(e) => return self.notice(NoticeKind::ProtocolError, e.to_string()).await,
        };
        self.persist(LogRecord::Message(user_record)).await?;
        let backend = self.session().backend();
        let response = if backend.is_remote() {
            let (prompt, user, index) = (turn.prompt.clone(), turn.user_message.clone(), turn.message_id);
            tokio::task::spawn_blocking(move || backend.complete(&prompt, &user, index))
                .await
                .unwrap_or_else(|e| Err(typesim_core::runtime::BackendError::Unavailable(e.to_string())))
        } else {
            backend.complete(&turn.prompt, &turn.user_message, turn.message_id)
        };
        let message_id = turn.message_id;
        match self.session().complete_turn(turn, response) {
            Ok(trace) => {
                self.inflight = Some(InFlight {
                    message_id,
                    start: Instant::now(),
                    visible: self.visible,
                });
                if trace.events.is_empty() {
                    self.finish_message().await?;
                }
                Ok(())
            }
            Err(e) => {
                let kind = match e {
                    RuntimeError::Backend(_) => NoticeKind::BackendUnavailable,
                    _ => NoticeKind::ValidationError,
                };
                let failed = self.session().log().records().last().cloned();
                self.notice(kind, e.to_string()).await?;
                self.persist_message(failed.filter(|r| r.message_id == message_id && r.status == MessageStatus::Failed))
                    .await
            }
        }
    }

    fn next_deadline(&self) -> Option<Instant> {
        let flight = self.inflight.as_ref()?;
        let pending = self.session.as_ref()?.pending()?;
        let t = if flight.visible {
            pending.remaining().first()?.t
        } else {
            pending.trace().duration()
        };
        Some(flight.start + Duration::from_secs_f64(t / 1000.0))
    }

    async fn emit_due(&mut self) -> Result<(), Disconnected> {
        let Some(flight) = &self.inflight else { return Ok(()) };
        let (message_id, start, visible) = (flight.message_id, flight.start, flight.visible);
        let elapsed = start.elapsed().as_secs_f64() * 1000.0;
        let session = self.session.as_mut().expect("session open");
        let Some(pending) = session.pending() else { return Ok(()) };
        let lines: Vec<ServerMessage> = if visible {
            pending
                .remaining()
                .iter()
                .take_while(|e| e.t <= elapsed + DUE_EPSILON_MS)
                .map(|e| ServerMessage::Event {
                    message_id,
                    event: Record::from_event(e),
                })
                .collect()
        } else {
            let trace = pending.trace();
            vec![ServerMessage::Event {
                message_id,
                event: text_record(trace.duration(), trace.final_text()),
            }]
        };
        let count = if visible { lines.len() } else { pending.remaining().len() };
        session.mark_emitted(count);
        for line in lines {
            self.send(line).await?;
        }
        if self.session.as_ref().and_then(Session::pending).is_some_and(|p| p.is_exhausted()) {
            self.finish_message().await?;
        }
        Ok(())
    }

    async fn finish_message(&mut self) -> Result<(), Disconnected> {
        let Some(flight) = self.inflight.take() else { return Ok(()) };
        let record = self.session().finish(MessageStatus::Complete);
        self.send(ServerMessage::TraceDone {
            message_id: flight.message_id,
        })
        .await?;
        self.persist_message(record).await
    }

    async fn close(&mut self) {
        let Some(session) = self.session.as_mut() else { return };
        let (interrupted, summary) = session.close();
        self.inflight = None;
        let _ = self.persist_message(interrupted).await;
        let _ = self.persist(LogRecord::Session(summary)).await;
    }
}
