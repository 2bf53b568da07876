//! Wire messages. Each frame is one JSON object tagged by `type`.
//!
//! ```text
//! > {"type":"openSession","preset":"red","seed":7}
//! < {"type":"waitingRoom","delayMs":8123}
//! < {"type":"sessionReady","sessionId":"s-5f0c..."}
//! > {"type":"userMessage","text":"Hi! Do you like tennis?"}
//! < {"type":"event","messageId":0,"event":{"t":91.2,"kind":"type","payload":"I","caret":1}}
//! < ...
//! < {"type":"traceDone","messageId":0}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;
use typesim_core::runtime::Preset;
use typesim_core::trace_file::Record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum ClientMessage {
    OpenSession {
        #[serde(default)]
        preset: Option<Preset>,
        /// Agent document overriding the preset.
        #[serde(default)]
        config: Option<Value>,
        #[serde(default)]
        seed: Option<u64>,
    },
    UserMessage {
        text: String,
    },
    UpdateParams {
        patch: Value,
    },
    SetVisibility {
        show_typing: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoticeKind {
    ValidationError,
    BackendUnavailable,
    PersistenceError,
    ProtocolError,
    ParamsApplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum ServerMessage {
    WaitingRoom { delay_ms: u64 },
    SessionReady { session_id: String },
    /// A keystroke record, or with typing hidden a `text` record holding the
    /// whole reply.
    Event { message_id: u64, event: Record },
    TraceDone { message_id: u64 },
    Notice { kind: NoticeKind, text: String },
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Record carrying a complete reply when typing is hidden.
pub fn text_record(t: f64, text: &str) -> Record {
    Record {
        t,
        kind: "text".into(),
        payload: Value::String(text.to_owned()),
        caret: text.chars().count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn client_shapes() {
        let open: ClientMessage = serde_json::from_value(json!({"type": "openSession", "preset": "red"})).unwrap();
        assert_eq!(
            open,
            ClientMessage::OpenSession {
                preset: Some(Preset::Red),
                config: None,
                seed: None
            }
        );
        let vis: ClientMessage = serde_json::from_str(r#"{"type":"setVisibility","showTyping":false}"#).unwrap();
        assert_eq!(vis, ClientMessage::SetVisibility { show_typing: false });
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"userMessage"}"#).is_err());
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"shout","text":"x"}"#).is_err());
    }

    #[test]
    fn server_shapes() {
        assert_eq!(
            ServerMessage::WaitingRoom { delay_ms: 5000 }.to_line(),
            r#"{"type":"waitingRoom","delayMs":5000}"#
        );
        assert_eq!(
            ServerMessage::TraceDone { message_id: 3 }.to_line(),
            r#"{"type":"traceDone","messageId":3}"#
        );
        let notice = ServerMessage::Notice {
            kind: NoticeKind::BackendUnavailable,
            text: "down".into(),
        };
        assert_eq!(notice.to_line(), r#"{"type":"notice","kind":"backend-unavailable","text":"down"}"#);
        let ev = ServerMessage::Event {
            message_id: 0,
            event: text_record(12.5, "héllo"),
        };
        let back: ServerMessage = serde_json::from_str(&ev.to_line()).unwrap();
        assert_eq!(back, ev);
        assert!(ev.to_line().contains(r#""caret":5"#));
    }
}
