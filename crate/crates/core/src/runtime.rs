//! Agent runtime: presets, configuration, prompt construction, response
//! backends and per-session state.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::planner::{validate_params, CharacterRates, EditingParameters, LevelRates, ValidationError};
use crate::scheduler::{
    validate_temporal, EventTrace, KeystrokeEvent, Pace, ScheduleError, ScheduledTrace,
    TemporalParameters,
};
use crate::seed::{derive_seed, stream};
use crate::transcript::{ConversationLog, MessageRecord, MessageStatus, Sender, SessionSummary};

const BUNDLED_RESPONSES: &str = include_str!("../data/responses.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Blue,
    Green,
    Red,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Blue => "blue",
            Preset::Green => "green",
            Preset::Red => "red",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blue" => Ok(Preset::Blue),
            "green" => Ok(Preset::Green),
            "red" => Ok(Preset::Red),
            "custom" => Ok(Preset::Custom),
            other => Err(format!("unknown preset {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PromptConstraints {
    pub max_sentences: u32,
    pub max_words: u32,
    /// Appended after the word limit; empty to omit.
    pub language_restriction: String,
}

impl Default for PromptConstraints {
    fn default() -> Self {
        PromptConstraints {
            max_sentences: 2,
            max_words: 25,
            language_restriction: "Use English only please.".into(),
        }
    }
}

pub fn validate_constraints(c: &PromptConstraints) -> Result<(), ValidationError> {
    if c.max_sentences < 1 {
        return Err(ValidationError::Invalid("maxSentences must be at least 1".into()));
    }
    if c.max_words < c.max_sentences {
        return Err(ValidationError::Invalid(format!(
            "maxWords {} is below maxSentences {}",
            c.max_words, c.max_sentences
        )));
    }
    Ok(())
}

pub fn build_prompt(user_message: &str, c: &PromptConstraints) -> String {
    let language = if c.language_restriction.is_empty() {
        String::new()
    } else {
        format!(" {}", c.language_restriction)
    };
    format!(
        "{user_message}\n(Please provide a reply with no more than {} sentences, and less than {} words in total.{language})",
        c.max_sentences, c.max_words
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum BackendKind {
    /// Responses cycled by message index; `table` answers exact user messages first.
    #[serde(rename_all = "camelCase")]
    Scripted {
        responses: Vec<String>,
        #[serde(default)]
        table: BTreeMap<String, String>,
    },
    Echo,
    /// OpenAI-style completion endpoint.
    #[serde(rename_all = "camelCase")]
    Remote {
        endpoint: String,
        model: String,
        /// Environment variable holding a bearer token.
        #[serde(default)]
        auth_env: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BackendBinding {
    pub kind: BackendKind,
    #[serde(default = "default_backend_timeout")]
    pub timeout_ms: u64,
}

fn default_backend_timeout() -> u64 {
    20_000
}

impl Default for BackendBinding {
    fn default() -> Self {
        BackendBinding {
            kind: BackendKind::Scripted {
                responses: BUNDLED_RESPONSES.lines().map(str::to_owned).collect(),
                table: BTreeMap::new(),
            },
            timeout_ms: default_backend_timeout(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AgentConfig {
    pub preset: Preset,
    pub temporal: TemporalParameters,
    #[serde(default)]
    pub editing: EditingParameters,
    #[serde(default)]
    pub constraints: PromptConstraints,
    #[serde(default)]
    pub backend: BackendBinding,
}

const HUMAN_PACE: TemporalParameters = TemporalParameters {
    character_typing_pace: Pace::new(80.0, 25.0),
    space_lag_pace: Pace::new(120.0, 40.0),
    character_deletion_pace: Pace::new(60.0, 15.0),
    cursor_move_speed: Pace::new(30.0, 8.0),
    pause_rate: 0.15,
    thinking_time: Pace::new(1.5, 0.5),
};

/// Default configuration for a preset. `Custom` starts from Blue's values.
pub fn preset(color: Preset) -> AgentConfig {
    let (temporal, editing) = match color {
        Preset::Blue | Preset::Custom => (
            TemporalParameters {
                character_typing_pace: Pace::new(15.0, 3.0),
                space_lag_pace: Pace::new(20.0, 5.0),
                character_deletion_pace: Pace::new(15.0, 3.0),
                cursor_move_speed: Pace::new(5.0, 1.0),
                pause_rate: 0.0,
                thinking_time: Pace::new(1.5, 0.5),
            },
            EditingParameters::default(),
        ),
        Preset::Green => (HUMAN_PACE, EditingParameters::default()),
        Preset::Red => (
            HUMAN_PACE,
            EditingParameters {
                word: LevelRates::new(0.05, 0.0, 0.08),
                character: CharacterRates { typo: 0.03 },
                ..EditingParameters::default()
            },
        ),
    };
    AgentConfig {
        preset: color,
        temporal,
        editing,
        constraints: PromptConstraints::default(),
        backend: BackendBinding::default(),
    }
}

fn check_preset(c: &AgentConfig) -> Result<(), ValidationError> {
    let pauses = c.temporal.pause_rate > 0.0;
    let edits = !c.editing.is_zero();
    let ok = match c.preset {
        Preset::Blue => !pauses && !edits,
        Preset::Green => pauses && !edits,
        Preset::Red => pauses && edits,
        Preset::Custom => true,
    };
    if ok {
        Ok(())
    } else {
        Err(ValidationError::Invalid(format!(
            "preset {} requires {}",
            c.preset.name(),
            match c.preset {
                Preset::Blue => "pauseRate 0 and no editing",
                Preset::Green => "pauseRate > 0 and no editing",
                _ => "pauseRate > 0 and some editing",
            }
        )))
    }
}

pub fn validate_config(c: &AgentConfig) -> Result<(), ValidationError> {
    validate_temporal(&c.temporal)?;
    validate_params(&c.editing)?;
    validate_constraints(&c.constraints)?;
    if let BackendKind::Scripted { responses, .. } = &c.backend.kind {
        if responses.is_empty() {
            return Err(ValidationError::Invalid("scripted backend needs at least one response".into()));
        }
    }
    check_preset(c)
}

/// RFC 7396 merge of `patch` into `target`.
pub fn merge_json(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge_json(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

impl AgentConfig {
    /// Reads a config document: the named preset's defaults overlaid with any
    /// fields present. A missing preset means `custom`.
    pub fn from_value(v: &Value) -> Result<AgentConfig, ConfigError> {
        if !v.is_object() {
            return Err(ConfigError::Parse("config must be a JSON object".into()));
        }
        let color: Preset = match v.get("preset") {
            None => Preset::Custom,
            Some(p) => serde_json::from_value(p.clone()).map_err(|e| ConfigError::Parse(e.to_string()))?,
        };
        let mut merged = serde_json::to_value(preset(color)).expect("config serializes");
        // A backend kind replaces the default one; merging variants mixes fields.
        if v.pointer("/backend/kind").is_some() {
            merged["backend"]["kind"] = Value::Null;
        }
        merge_json(&mut merged, v);
        let config: AgentConfig =
            serde_json::from_value(merged).map_err(|e| ConfigError::Parse(e.to_string()))?;
        validate_config(&config)?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<AgentConfig, ConfigError> {
        let v: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_value(&v)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str, user_message: &str, index: u64) -> Result<String, BackendError>;

    /// Whether `complete` may block on the network.
    fn is_remote(&self) -> bool {
        false
    }
}

pub struct ScriptedBackend {
    responses: Vec<String>,
    table: BTreeMap<String, String>,
}

impl ScriptedBackend {
    pub fn new(responses: Vec<String>, table: BTreeMap<String, String>) -> Self {
        ScriptedBackend { responses, table }
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, _prompt: &str, user_message: &str, index: u64) -> Result<String, BackendError> {
        if let Some(r) = self.table.get(user_message) {
            return Ok(r.clone());
        }
        if self.responses.is_empty() {
            return Err(BackendError::Unavailable("no scripted responses".into()));
        }
        Ok(self.responses[(index % self.responses.len() as u64) as usize].clone())
    }
}

pub struct EchoBackend;

impl Backend for EchoBackend {
    fn complete(&self, _prompt: &str, user_message: &str, _index: u64) -> Result<String, BackendError> {
        Ok(user_message.to_owned())
    }
}

pub struct RemoteBackend {
    endpoint: String,
    model: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(endpoint: &str, model: &str, token: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteBackend {
            endpoint: endpoint.to_owned(),
            model: model.to_owned(),
            token,
            agent,
        }
    }
}

/// Text of the first choice in a chat or plain completion response.
pub fn completion_text(body: &Value) -> Option<String> {
    let choice = body.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(|s| s.trim().to_owned())
}

impl Backend for RemoteBackend {
    fn complete(&self, prompt: &str, _user_message: &str, _index: u64) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        completion_text(&value).ok_or_else(|| BackendError::Unavailable("response has no completion text".into()))
    }

    fn is_remote(&self) -> bool {
        true
    }
}

pub fn build_backend(binding: &BackendBinding) -> Arc<dyn Backend> {
    match &binding.kind {
        BackendKind::Scripted { responses, table } => {
            Arc::new(ScriptedBackend::new(responses.clone(), table.clone()))
        }
        BackendKind::Echo => Arc::new(EchoBackend),
        BackendKind::Remote {
            endpoint,
            model,
            auth_env,
        } => {
            let token = auth_env.as_deref().and_then(|name| std::env::var(name).ok());
            Arc::new(RemoteBackend::new(
                endpoint,
                model,
                token,
                Duration::from_millis(binding.timeout_ms),
            ))
        }
    }
}

/// Unix milliseconds.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// Clock that only moves when told to.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("malformed patch: {0}")]
    Patch(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("message {0} is still being typed")]
    Busy(u64),
}

/// A user message whose reply has not been produced yet.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub message_id: u64,
    pub user_message: String,
    pub prompt: String,
    pub sent_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingTrace {
    pub message_id: u64,
    pub scheduled: ScheduledTrace,
    /// Events already handed to the client.
    pub emitted: usize,
    pub sent_at_ms: u64,
}

impl PendingTrace {
    pub fn trace(&self) -> &EventTrace {
        &self.scheduled.trace
    }

    pub fn remaining(&self) -> &[KeystrokeEvent] {
        &self.scheduled.trace.events[self.emitted..]
    }

    pub fn is_exhausted(&self) -> bool {
        self.emitted >= self.scheduled.trace.events.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AppliedParams {
    pub temporal: TemporalParameters,
    pub editing: EditingParameters,
}

pub struct Session {
    id: String,
    config: AgentConfig,
    seed: u64,
    backend: Arc<dyn Backend>,
    lexicon: Arc<Lexicon>,
    clock: Arc<dyn Clock>,
    next_message: u64,
    pending: Option<PendingTrace>,
    log: ConversationLog,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("preset", &self.config.preset)
            .field("seed", &self.seed)
            .field("next_message", &self.next_message)
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn open(
        id: impl Into<String>,
        config: AgentConfig,
        seed: u64,
        lexicon: Arc<Lexicon>,
        clock: Arc<dyn Clock>,
    ) -> Result<Session, ValidationError> {
        validate_config(&config)?;
        let id = id.into();
        let backend = build_backend(&config.backend);
        let log = ConversationLog::new(id.clone(), config.preset.name());
        Ok(Session {
            id,
            config,
            seed,
            backend,
            lexicon,
            clock,
            next_message: 0,
            pending: None,
            log,
        })
    }

    pub fn with_backend(mut self, backend: Arc<dyn Backend>) -> Self {
        self.backend = backend;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backend(&self) -> Arc<dyn Backend> {
        Arc::clone(&self.backend)
    }

    pub fn log(&self) -> &ConversationLog {
        &self.log
    }

    pub fn pending(&self) -> Option<&PendingTrace> {
        self.pending.as_ref()
    }

    /// Records the user message and prepares the backend prompt.
    pub fn begin(&mut self, user_message: &str) -> Result<(Turn, MessageRecord), RuntimeError> {
        if let Some(p) = &self.pending {
            return Err(RuntimeError::Busy(p.message_id));
        }
        let now = self.clock.now_ms();
        let turn = Turn {
            message_id: self.next_message,
            user_message: user_message.to_owned(),
            prompt: build_prompt(user_message, &self.config.constraints),
            sent_at_ms: now,
        };
        self.next_message += 1;
        let record = self.record(turn.message_id, Sender::User, user_message, now, now, MessageStatus::Complete);
        Ok((turn, record))
    }

    /// Plans and schedules the reply, or records the failure.
    pub fn complete_turn(
        &mut self,
        turn: Turn,
        response: Result<String, BackendError>,
    ) -> Result<EventTrace, RuntimeError> {
        let text = match response {
            Ok(text) => text,
            Err(e) => {
                let now = self.clock.now_ms();
                self.record(turn.message_id, Sender::Agent, "", turn.sent_at_ms, now, MessageStatus::Failed);
                return Err(e.into());
            }
        };
        let seed = derive_seed(self.seed, stream::MESSAGE, turn.message_id);
        let scheduled = crate::simulate(&text, &self.config.temporal, &self.config.editing, &self.lexicon, seed)?;
        let trace = scheduled.trace.clone();
        self.pending = Some(PendingTrace {
            message_id: turn.message_id,
            scheduled,
            emitted: 0,
            sent_at_ms: turn.sent_at_ms,
        });
        Ok(trace)
    }

    /// Synchronous begin, backend call and scheduling.
    pub fn respond(&mut self, user_message: &str) -> Result<EventTrace, RuntimeError> {
        let (turn, _) = self.begin(user_message)?;
        let response = self.backend.complete(&turn.prompt, &turn.user_message, turn.message_id);
        self.complete_turn(turn, response)
    }

    /// Marks the next `n` pending events as emitted.
    pub fn mark_emitted(&mut self, n: usize) {
        if let Some(p) = &mut self.pending {
            p.emitted = (p.emitted + n).min(p.scheduled.trace.events.len());
        }
    }

    /// Closes the in-flight message and returns its agent record.
    pub fn finish(&mut self, status: MessageStatus) -> Option<MessageRecord> {
        let p = self.pending.take()?;
        let now = self.clock.now_ms();
        let text = p.scheduled.trace.plan.final_text.clone();
        Some(self.record(p.message_id, Sender::Agent, &text, p.sent_at_ms, now, status))
    }

    /// Applies a JSON merge patch over `{"temporal": .., "editing": ..}`.
    /// Temporal changes retime the unemitted part of the in-flight trace;
    /// editing changes take effect from the next message. On error nothing
    /// changes.
    pub fn update_params(&mut self, patch: &Value) -> Result<AppliedParams, RuntimeError> {
        let Some(fields) = patch.as_object() else {
            return Err(RuntimeError::Patch("patch must be an object".into()));
        };
        if let Some(k) = fields.keys().find(|k| *k != "temporal" && *k != "editing") {
            return Err(RuntimeError::Patch(format!("unknown field {k:?}")));
        }
        let mut current = serde_json::to_value(AppliedParams {
            temporal: self.config.temporal,
            editing: self.config.editing,
        })
        .expect("params serialize");
        merge_json(&mut current, patch);
        let temporal: TemporalParameters = serde_json::from_value(current["temporal"].clone())
            .map_err(|e| RuntimeError::Patch(e.to_string()))?;
        let editing: EditingParameters = serde_json::from_value(current["editing"].clone())
            .map_err(|e| RuntimeError::Patch(e.to_string()))?;
        let mut candidate = self.config.clone();
        candidate.temporal = temporal;
        candidate.editing = editing;
        validate_config(&candidate)?;

        if temporal != self.config.temporal {
            if let Some(p) = &mut self.pending {
                p.scheduled.retime_from(p.emitted, &temporal);
            }
        }
        self.config = candidate;
        Ok(AppliedParams { temporal, editing })
    }

    /// Interrupts any in-flight message and summarises the session.
    pub fn close(&mut self) -> (Option<MessageRecord>, SessionSummary) {
        let interrupted = self.finish(MessageStatus::Interrupted);
        (interrupted, self.log.summary())
    }

    fn record(
        &mut self,
        message_id: u64,
        sender: Sender,
        text: &str,
        sent_at_ms: u64,
        completed_at_ms: u64,
        status: MessageStatus,
    ) -> MessageRecord {
        let r = MessageRecord::new(
            &self.id,
            self.config.preset.name(),
            message_id,
            sender,
            text,
            sent_at_ms,
            completed_at_ms,
            status,
        );
        self.log.push(r.clone());
        r
    }
}
