//! Offline entry points behind the `typesim` binary.

pub mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use typesim_core::lexicon::{Lexicon, LexiconError};
use typesim_core::runtime::{AgentConfig, Preset};
use typesim_core::scheduler::{apply_trace, EventTrace};
use typesim_core::seed::{derive_seed, stream};
use typesim_core::simulate;
use typesim_gateway::{GatewayConfig, GatewayConfigError};

/// Kinds reported by `replay`, in print order.
pub const EVENT_KINDS: [&str; 4] = ["type", "delete", "move", "pause"];

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 1.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GatewayConfigError> for CliError {
    fn from(e: GatewayConfigError) -> Self {
        match e {
            GatewayConfigError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Configuration shared by the offline subcommands.
pub struct Setup {
    pub gateway: GatewayConfig,
    pub agent: AgentConfig,
    pub lexicon: Lexicon,
}

impl Setup {
    /// Loads the gateway config file (or defaults) and resolves the agent.
    pub fn load(config: Option<&Path>, preset: Option<Preset>) -> Result<Self, CliError> {
        let gateway = GatewayConfig::load(config)?;
        let agent = gateway
            .resolve_agent(preset, None)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let lexicon = Lexicon::from_config(&gateway.lexicon)?;
        Ok(Setup { gateway, agent, lexicon })
    }

    /// `--seed`, then the config's seed, then OS entropy.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.gateway.seed).unwrap_or_else(rand::random)
    }

    pub fn trace(&self, text: &str, seed: u64) -> Result<EventTrace, CliError> {
        simulate(text, &self.agent.temporal, &self.agent.editing, &self.lexicon, seed)
            .map(|s| s.trace)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// One trace per corpus line. Blank lines are skipped but keep their
    /// number, so line `n` always maps to the same seed and file name.
    pub fn trace_corpus(&self, corpus: &str, seed: u64) -> Result<Vec<(usize, EventTrace)>, CliError> {
        corpus
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let n = i + 1;
                self.trace(line, derive_seed(seed, stream::MESSAGE, n as u64)).map(|t| (n, t))
            })
            .collect()
    }
}

pub fn corpus_file_name(line: usize) -> String {
    format!("trace-{line:05}.jsonl")
}

pub fn read_trace(path: &Path) -> Result<EventTrace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    EventTrace::from_jsonl(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Trace files named by `paths`; directories contribute their `*.jsonl`
/// files in name order.
pub fn read_traces(paths: &[PathBuf]) -> Result<Vec<(String, EventTrace)>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| read_trace(f).map(|t| (f.display().to_string(), t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub text: String,
    pub duration_ms: f64,
    pub events: usize,
    pub counts: BTreeMap<&'static str, usize>,
}

impl fmt::Display for ReplaySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.text)?;
        writeln!(f, "---")?;
        writeln!(f, "duration_ms {}", self.duration_ms)?;
        write!(f, "events {}", self.events)?;
        for kind in EVENT_KINDS {
            write!(f, "\n{kind} {}", self.counts[kind])?;
        }
        Ok(())
    }
}

/// Replays `trace` from an empty buffer and checks the result against the
/// header's final text.
pub fn replay(trace: &EventTrace) -> Result<ReplaySummary, CliError> {
    let text = apply_trace(&trace.events).map_err(|e| CliError::Data(format!("event {}: {e}", e.index())))?;
    if text != trace.final_text() {
        return Err(CliError::Data("replayed text differs from the header's final text".into()));
    }
    Ok(ReplaySummary {
        text,
        duration_ms: trace.duration(),
        events: trace.events.len(),
        counts: EVENT_KINDS.iter().map(|k| (*k, trace.count(k))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use typesim_core::scheduler::EventKind;

    fn blue() -> Setup {
        Setup::load(None, Some(Preset::Blue)).unwrap()
    }

    #[test]
    fn replay_round_trip() {
        let s = blue();
        let summary = replay(&s.trace("hi", 1).unwrap()).unwrap();
        assert_eq!(summary.text, "hi");
        assert_eq!(summary.counts["type"], 2);
        assert_eq!(summary.counts["pause"], 0);
    }

    #[test]
    fn tampered_trace_names_the_event() {
        let s = blue();
        let mut trace = s.trace("hi", 1).unwrap();
        trace.events[0].kind = EventKind::DeleteBackward;
        let err = replay(&trace).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("event 0"), "{err}");
    }

    #[test]
    fn corpus_skips_blank_lines_but_keeps_numbers() {
        let s = blue();
        let traces = s.trace_corpus("One.\n\nThree.\n", 5).unwrap();
        let lines: Vec<usize> = traces.iter().map(|(n, _)| *n).collect();
        assert_eq!(lines, [1, 3]);
        assert_eq!(traces[1].1.final_text(), "Three.");
        assert_eq!(corpus_file_name(3), "trace-00003.jsonl");
    }

    #[test]
    fn seed_precedence() {
        let mut s = blue();
        s.gateway.seed = Some(9);
        assert_eq!(s.seed(Some(4)), 4);
        assert_eq!(s.seed(None), 9);
    }
}
