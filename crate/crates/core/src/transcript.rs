//! Conversation log records, shared by the runtime, the gateway's log sink
//! and the analyzer.

use serde::{Deserialize, Serialize};

use crate::segmenter::counts;

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sender {
    User,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageStatus {
    Complete,
    /// Trace abandoned before its last event, e.g. on disconnect.
    Interrupted,
    /// The backend produced no response.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MessageRecord {
    pub schema_version: u32,
    pub session_id: String,
    pub preset: String,
    pub message_id: u64,
    pub sender: Sender,
    pub text: String,
    pub word_count: usize,
    pub sentence_count: usize,
    /// Unix ms.
    pub sent_at_ms: u64,
    pub completed_at_ms: u64,
    pub status: MessageStatus,
}

impl MessageRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        session_id: &str,
        preset: &str,
        message_id: u64,
        sender: Sender,
        text: &str,
        sent_at_ms: u64,
        completed_at_ms: u64,
        status: MessageStatus,
    ) -> Self {
        let (word_count, sentence_count) = counts(text);
        MessageRecord {
            schema_version: LOG_SCHEMA_VERSION,
            session_id: session_id.to_owned(),
            preset: preset.to_owned(),
            message_id,
            sender,
            text: text.to_owned(),
            word_count,
            sentence_count,
            sent_at_ms,
            completed_at_ms,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SessionSummary {
    pub schema_version: u32,
    pub session_id: String,
    pub preset: String,
    pub messages: usize,
    pub user_words: usize,
    pub user_sentences: usize,
    pub agent_words: usize,
    pub agent_sentences: usize,
    pub duration_seconds: f64,
}

/// One line of a log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LogRecord {
    Message(MessageRecord),
    Session(SessionSummary),
}

impl LogRecord {
    pub fn session_id(&self) -> &str {
        match self {
            LogRecord::Message(m) => &m.session_id,
            LogRecord::Session(s) => &s.session_id,
        }
    }
}

/// Append-only record list for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationLog {
    pub session_id: String,
    pub preset: String,
    records: Vec<MessageRecord>,
}

impl ConversationLog {
    pub fn new(session_id: impl Into<String>, preset: impl Into<String>) -> Self {
        ConversationLog {
            session_id: session_id.into(),
            preset: preset.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: MessageRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[MessageRecord] {
        &self.records
    }

    /// Seconds from the first user message to the last agent completion.
    pub fn duration_seconds(&self) -> f64 {
        let start = self
            .records
            .iter()
            .filter(|r| r.sender == Sender::User)
            .map(|r| r.sent_at_ms)
            .min();
        let end = self
            .records
            .iter()
            .filter(|r| r.sender == Sender::Agent)
            .map(|r| r.completed_at_ms)
            .max();
        match (start, end) {
            (Some(s), Some(e)) if e > s => (e - s) as f64 / 1000.0,
            _ => 0.0,
        }
    }

    pub fn summary(&self) -> SessionSummary {
        let side = |s: Sender| {
            self.records
                .iter()
                .filter(|r| r.sender == s)
                .fold((0, 0), |(w, n), r| (w + r.word_count, n + r.sentence_count))
        };
        let (user_words, user_sentences) = side(Sender::User);
        let (agent_words, agent_sentences) = side(Sender::Agent);
        SessionSummary {
            schema_version: LOG_SCHEMA_VERSION,
            session_id: self.session_id.clone(),
            preset: self.preset.clone(),
            messages: self.records.len(),
            user_words,
            user_sentences,
            agent_words,
            agent_sentences,
            duration_seconds: self.duration_seconds(),
        }
    }

    /// Rebuilds per-session logs from a stream of log records, keeping first
    /// appearance order. Summary records are ignored; they are recomputable.
    pub fn group(records: impl IntoIterator<Item = LogRecord>) -> Vec<ConversationLog> {
        let mut logs: Vec<ConversationLog> = Vec::new();
        for record in records {
            if let LogRecord::Message(m) = record {
                match logs.iter_mut().find(|l| l.session_id == m.session_id) {
                    Some(log) => log.push(m),
                    None => {
                        let mut log = ConversationLog::new(m.session_id.clone(), m.preset.clone());
                        log.push(m);
                        logs.push(log);
                    }
                }
            }
        }
        logs
    }
}
