//! Newline-delimited JSON trace files.
//!
//! The first line is a `header` record carrying the seed, configuration and
//! plan; every following line is one keystroke event:
//!
//! ```text
//! {"t":0.0,"kind":"header","payload":{...},"caret":0}
//! {"t":83.1,"kind":"type","payload":"H","caret":1}
//! {"t":140.2,"kind":"delete","payload":null,"caret":0}
//! {"t":190.0,"kind":"move","payload":12,"caret":12}
//! {"t":190.0,"kind":"pause","payload":1432.7,"caret":12}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::planner::{EditAction, EditPlan, EditingParameters};
use crate::scheduler::{EventKind, EventTrace, KeystrokeEvent, TemporalParameters};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub kind: String,
    pub payload: Value,
    pub caret: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceHeader {
    pub version: u32,
    pub seed: u64,
    pub temporal: TemporalParameters,
    pub editing: EditingParameters,
    pub initial_text: String,
    pub final_text: String,
    pub actions: Vec<EditAction>,
}

#[derive(Debug, Error)]
pub enum TraceFormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("trace has no header record")]
    MissingHeader,
    #[error("unsupported trace version {0}")]
    Version(u32),
}

fn line_err(line: usize, message: impl Into<String>) -> TraceFormatError {
    TraceFormatError::Line {
        line,
        message: message.into(),
    }
}

impl Record {
    pub fn from_event(e: &KeystrokeEvent) -> Self {
        let payload = match e.kind {
            EventKind::TypeChar(c) => Value::String(c.to_string()),
            EventKind::DeleteBackward => Value::Null,
            EventKind::MoveCursorTo(o) => Value::from(o),
            EventKind::Pause(ms) => Value::from(ms),
        };
        Record {
            t: e.t,
            kind: e.kind.label().to_owned(),
            payload,
            caret: e.caret,
        }
    }

    pub fn to_event(&self) -> Result<KeystrokeEvent, String> {
        let kind = match (self.kind.as_str(), &self.payload) {
            ("type", Value::String(s)) => {
                let mut it = s.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => EventKind::TypeChar(c),
                    _ => return Err(format!("type payload {s:?} is not one character")),
                }
            }
            ("delete", Value::Null) => EventKind::DeleteBackward,
            ("move", v) => EventKind::MoveCursorTo(
                v.as_u64()
                    .ok_or_else(|| format!("move payload {v} is not an offset"))? as usize,
            ),
            ("pause", v) => EventKind::Pause(
                v.as_f64()
                    .filter(|d| *d >= 0.0)
                    .ok_or_else(|| format!("pause payload {v} is not a duration"))?,
            ),
            (k, v) => return Err(format!("unexpected {k:?} record with payload {v}")),
        };
        if !self.t.is_finite() {
            return Err("timestamp is not finite".into());
        }
        Ok(KeystrokeEvent {
            t: self.t,
            kind,
            caret: self.caret,
        })
    }
}

impl EventTrace {
    pub fn header(&self) -> TraceHeader {
        TraceHeader {
            version: TRACE_FORMAT_VERSION,
            seed: self.seed,
            temporal: self.temporal,
            editing: self.editing,
            initial_text: self.plan.initial_text.clone(),
            final_text: self.plan.final_text.clone(),
            actions: self.plan.actions.clone(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let header = Record {
            t: 0.0,
            kind: "header".into(),
            payload: serde_json::to_value(self.header()).expect("header serializes"),
            caret: 0,
        };
        let mut out = String::new();
        for r in std::iter::once(header).chain(self.events.iter().map(Record::from_event)) {
            out.push_str(&serde_json::to_string(&r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a trace file. Event lines are checked for shape only; use
    /// [`crate::scheduler::apply_trace`] to check that they replay.
    pub fn from_jsonl(text: &str) -> Result<EventTrace, TraceFormatError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (n, first) = lines.next().ok_or(TraceFormatError::MissingHeader)?;
        let record: Record = serde_json::from_str(first).map_err(|e| line_err(n, e.to_string()))?;
        if record.kind != "header" {
            return Err(TraceFormatError::MissingHeader);
        }
        let header: TraceHeader =
            serde_json::from_value(record.payload).map_err(|e| line_err(n, e.to_string()))?;
        if header.version != TRACE_FORMAT_VERSION {
            return Err(TraceFormatError::Version(header.version));
        }
        let mut events = Vec::new();
        for (n, line) in lines {
            let record: Record = serde_json::from_str(line).map_err(|e| line_err(n, e.to_string()))?;
            events.push(record.to_event().map_err(|m| line_err(n, m))?);
        }
        Ok(EventTrace {
            seed: header.seed,
            temporal: header.temporal,
            editing: header.editing,
            plan: EditPlan {
                initial_text: header.initial_text,
                actions: header.actions,
                final_text: header.final_text,
            },
            events,
        })
    }
}
