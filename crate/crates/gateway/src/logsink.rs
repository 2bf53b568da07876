//! Append-only conversation log storage.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use typesim_core::transcript::LogRecord;

pub trait LogSink: Send + Sync {
    /// Appends one record. `at_ms` is the Unix time used to pick the file.
    fn append(&self, record: &LogRecord, at_ms: u64) -> std::io::Result<()>;
}

/// `<dir>/<YYYY-MM-DD>/sessions.jsonl`, one JSON record per line.
pub struct FileLogSink {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl FileLogSink {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileLogSink {
            dir: dir.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path_for(&self, at_ms: u64) -> PathBuf {
        let day = DateTime::<Utc>::from_timestamp_millis(at_ms as i64)
            .unwrap_or_default()
            .format("%Y-%m-%d")
            .to_string();
        self.dir.join(day).join("sessions.jsonl")
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl LogSink for FileLogSink {
    fn append(&self, record: &LogRecord, at_ms: u64) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(record).map_err(std::io::Error::other)?;
        line.push(b'\n');
        let path = self.path_for(at_ms);
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        // One write per line keeps lines whole even across processes.
        file.write_all(&line)
    }
}

#[derive(Default)]
pub struct MemoryLogSink {
    records: Mutex<Vec<LogRecord>>,
}

impl MemoryLogSink {
    pub fn records(&self) -> Vec<LogRecord> {
        self.records.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl LogSink for MemoryLogSink {
    fn append(&self, record: &LogRecord, _at_ms: u64) -> std::io::Result<()> {
        self.records
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(record.clone());
        Ok(())
    }
}

/// Rejects every write.
pub struct FailingLogSink;

impl LogSink for FailingLogSink {
    fn append(&self, _record: &LogRecord, _at_ms: u64) -> std::io::Result<()> {
        Err(std::io::Error::other("log storage unavailable"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use typesim_core::analyzer::load_logs;
    use typesim_core::transcript::{ConversationLog, MessageRecord, MessageStatus, Sender};

    #[test]
    fn day_directories() {
        let sink = FileLogSink::new("/logs");
        assert_eq!(sink.path_for(0), PathBuf::from("/logs/1970-01-01/sessions.jsonl"));
        assert_eq!(
            sink.path_for(1_767_312_000_000),
            PathBuf::from("/logs/2026-01-02/sessions.jsonl")
        );
    }

    #[test]
    fn five_message_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sink = FileLogSink::new(dir.path());
        let texts = ["Hi there.", "Hello! How are you?", "Good. You?", "Great, thanks.", "Bye now."];
        let mut written = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            let sender = if i % 2 == 0 { Sender::User } else { Sender::Agent };
            let r = MessageRecord::new("s1", "red", (i / 2) as u64, sender, t, 1000 * i as u64, 1000 * i as u64 + 500, MessageStatus::Complete);
            sink.append(&LogRecord::Message(r.clone()), 0).unwrap();
            written.push(r);
        }
        let logs = load_logs(dir.path()).unwrap();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].records(), written.as_slice());
        let mut expected = ConversationLog::new("s1", "red");
        written.into_iter().for_each(|r| expected.push(r));
        assert_eq!(logs[0], expected);
    }
}
