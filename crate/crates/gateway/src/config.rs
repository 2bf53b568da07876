//! Gateway configuration: file plus `TYPESIM_*` environment overrides.
//!
//! The same file drives the CLI, so it also carries the agent document used
//! for offline trace generation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;
use typesim_core::lexicon::LexiconConfig;
use typesim_core::runtime::{AgentConfig, ConfigError, Preset};

#[derive(Debug, Error)]
pub enum GatewayConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Agent(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub listen: String,
    /// Inclusive waiting-room delay range, ms.
    pub waiting_room_ms: [u64; 2],
    pub default_preset: Preset,
    /// Agent document (see [`AgentConfig::from_value`]); its `backend` also
    /// applies to sessions opened by preset name.
    pub agent: Option<Value>,
    pub lexicon: LexiconConfig,
    pub log_dir: PathBuf,
    /// Seeds waiting rooms, session ids and session seeds.
    pub seed: Option<u64>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            listen: "127.0.0.1:8080".into(),
            waiting_room_ms: [5_000, 15_000],
            default_preset: Preset::Blue,
            agent: None,
            lexicon: LexiconConfig::default(),
            log_dir: PathBuf::from("logs"),
            seed: None,
        }
    }
}

impl GatewayConfig {
    pub fn from_json(text: &str) -> Result<Self, GatewayConfigError> {
        let config: GatewayConfig =
            serde_json::from_str(text).map_err(|e| GatewayConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Defaults when `path` is `None`, then environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, GatewayConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| GatewayConfigError::Io {
                    path: p.to_owned(),
                    source,
                })?;
                Self::from_json(&text)?
            }
            None => GatewayConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    /// Applies `TYPESIM_LISTEN`, `TYPESIM_WAITING_ROOM_MS` (`min,max`),
    /// `TYPESIM_DEFAULT_PRESET`, `TYPESIM_LOG_DIR` and `TYPESIM_SEED`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), GatewayConfigError> {
        let bad = |k: &str, v: &str| GatewayConfigError::Invalid(format!("{k}={v:?}"));
        if let Some(v) = var("TYPESIM_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = var("TYPESIM_WAITING_ROOM_MS") {
            let parts: Vec<Result<u64, _>> = v.split(',').map(|p| p.trim().parse()).collect();
            match parts.as_slice() {
                [Ok(a), Ok(b)] => self.waiting_room_ms = [*a, *b],
                _ => return Err(bad("TYPESIM_WAITING_ROOM_MS", &v)),
            }
        }
        if let Some(v) = var("TYPESIM_DEFAULT_PRESET") {
            self.default_preset = v.parse().map_err(|_| bad("TYPESIM_DEFAULT_PRESET", &v))?;
        }
        if let Some(v) = var("TYPESIM_LOG_DIR") {
            self.log_dir = PathBuf::from(v);
        }
        if let Some(v) = var("TYPESIM_SEED") {
            self.seed = Some(v.parse().map_err(|_| bad("TYPESIM_SEED", &v))?);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), GatewayConfigError> {
        let [lo, hi] = self.waiting_room_ms;
        if lo > hi {
            return Err(GatewayConfigError::Invalid(format!(
                "waitingRoomMs [{lo}, {hi}] is not an ordered range"
            )));
        }
        if let Some(agent) = &self.agent {
            AgentConfig::from_value(agent)?;
        }
        Ok(())
    }

    /// Resolves the agent for a session or trace run. An explicit document
    /// wins, then a preset name, then the configured agent, then the default
    /// preset. The configured backend fills in when none is given.
    pub fn resolve_agent(&self, preset: Option<Preset>, doc: Option<&Value>) -> Result<AgentConfig, ConfigError> {
        let mut doc: Map<String, Value> = match (doc, preset, &self.agent) {
            (Some(Value::Object(d)), _, _) => d.clone(),
            (Some(_), _, _) => return Err(ConfigError::Parse("config must be a JSON object".into())),
            (None, Some(_), _) => Map::new(),
            (None, None, Some(Value::Object(a))) => a.clone(),
            _ => Map::new(),
        };
        if let Some(p) = preset {
            doc.entry("preset").or_insert(Value::from(p.name()));
        }
        doc.entry("preset")
            .or_insert(Value::from(self.default_preset.name()));
        if let Some(backend) = self.agent.as_ref().and_then(|a| a.get("backend")) {
            doc.entry("backend").or_insert(backend.clone());
        }
        AgentConfig::from_value(&Value::Object(doc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::collections::HashMap;

    #[test]
    fn defaults() {
        let c = GatewayConfig::default();
        assert_eq!(c.waiting_room_ms, [5_000, 15_000]);
        c.validate().unwrap();
        assert_eq!(GatewayConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn malformed_and_invalid_files() {
        assert!(matches!(GatewayConfig::from_json("{"), Err(GatewayConfigError::Parse(_))));
        assert!(matches!(
            GatewayConfig::from_json(r#"{"listne":"x"}"#),
            Err(GatewayConfigError::Parse(_))
        ));
        assert!(matches!(
            GatewayConfig::from_json(r#"{"waitingRoomMs":[10,5]}"#),
            Err(GatewayConfigError::Invalid(_))
        ));
        assert!(matches!(
            GatewayConfig::from_json(r#"{"agent":{"preset":"blue","temporal":{"pauseRate":0.5}}}"#),
            Err(GatewayConfigError::Agent(_))
        ));
    }

    #[test]
    fn environment_overrides() {
        let vars: HashMap<&str, &str> = [
            ("TYPESIM_LISTEN", "0.0.0.0:9000"),
            ("TYPESIM_WAITING_ROOM_MS", "0, 0"),
            ("TYPESIM_DEFAULT_PRESET", "Red"),
            ("TYPESIM_SEED", "7"),
        ]
        .into();
        let mut c = GatewayConfig::default();
        c.apply_env(|k| vars.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.listen, "0.0.0.0:9000");
        assert_eq!(c.waiting_room_ms, [0, 0]);
        assert_eq!(c.default_preset, Preset::Red);
        assert_eq!(c.seed, Some(7));
        let mut c = GatewayConfig::default();
        assert!(c
            .apply_env(|k| (k == "TYPESIM_WAITING_ROOM_MS").then(|| "5".to_string()))
            .is_err());
    }

    #[test]
    fn agent_resolution_order() {
        let c = GatewayConfig {
            agent: Some(json!({"preset": "green", "backend": {"kind": {"type": "echo"}}})),
            ..Default::default()
        };
        assert_eq!(c.resolve_agent(None, None).unwrap().preset, Preset::Green);
        let red = c.resolve_agent(Some(Preset::Red), None).unwrap();
        assert_eq!(red.preset, Preset::Red);
        assert_eq!(red.backend.kind, typesim_core::runtime::BackendKind::Echo);
        let doc = json!({"editing": {"character": {"typoRate": 0.5}}});
        let custom = c.resolve_agent(Some(Preset::Red), Some(&doc)).unwrap();
        assert_eq!(custom.editing.character.typo, 0.5);
        assert_eq!(GatewayConfig::default().resolve_agent(None, None).unwrap().preset, Preset::Blue);
        assert!(c.resolve_agent(None, Some(&json!(3))).is_err());
    }
}
