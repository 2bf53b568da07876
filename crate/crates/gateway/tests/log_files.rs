//! File log sink under concurrent writers.

use std::sync::Arc;

use typesim_core::analyzer::load_logs;
use typesim_core::transcript::{LogRecord, MessageRecord, MessageStatus, Sender};
use typesim_gateway::{FileLogSink, LogSink};

#[test]
fn concurrent_sessions_interleave_whole_lines() {
    let dir = tempfile::tempdir().unwrap();
    let sink = Arc::new(FileLogSink::new(dir.path()));
    let sessions = 16;
    let per_session = 200;
    let threads: Vec<_> = (0..sessions)
        .map(|s| {
            let sink = Arc::clone(&sink);
            std::thread::spawn(move || {
                let id = format!("s{s}");
                for i in 0..per_session {
                    let text = "word ".repeat(1 + (i * 7 + s) % 40) + "end.";
                    let sender = if i % 2 == 0 { Sender::User } else { Sender::Agent };
                    let r = MessageRecord::new(&id, "red", i as u64 / 2, sender, &text, i as u64, i as u64, MessageStatus::Complete);
                    sink.append(&LogRecord::Message(r), 0).unwrap();
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }

    let logs = load_logs(dir.path()).unwrap();
    assert_eq!(logs.len(), sessions);
    for log in &logs {
        assert_eq!(log.records().len(), per_session);
        for (i, r) in log.records().iter().enumerate() {
            assert_eq!(r.sent_at_ms, i as u64, "per-session order preserved");
            let (w, n) = typesim_core::segmenter::counts(&r.text);
            assert_eq!((r.word_count, r.sentence_count), (w, n));
        }
    }
}
