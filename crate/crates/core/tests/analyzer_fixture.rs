//! Analyzer means on a synthetic corpus built to known totals.

use typesim_core::analyzer::{conversation_stats, fit_regression};
use typesim_core::transcript::{ConversationLog, MessageRecord, MessageStatus, Sender};

const WORDS: [usize; 11] = [20, 150, 45, 62, 88, 31, 70, 59, 40, 75, 45];
const SENTENCES: [usize; 11] = [3, 30, 8, 10, 12, 4, 11, 9, 6, 12, 8];
const DURATION_MS: [u64; 11] = [200_000, 900_000, 150_500, 238_730, 300_000, 60_000, 210_000, 180_000, 120_270, 200_000, 66_530];

/// `sentences` sentences holding `words` words in total.
fn user_text(words: usize, sentences: usize) -> String {
    let per = words / sentences;
    let extra = words % sentences;
    (0..sentences)
        .map(|s| {
            let n = per + usize::from(s < extra);
            let mut w = vec!["word"; n];
            w[0] = "Well";
            format!("{}.", w.join(" "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[test]
fn red_fixture_means() {
    assert_eq!(WORDS.iter().sum::<usize>(), 685);
    let start = 1_700_000_000_000u64;
    let logs: Vec<ConversationLog> = (0..11)
        .map(|i| {
            let id = format!("s{i}");
            let text = user_text(WORDS[i], SENTENCES[i]);
            let (first, second) = text.split_at(text.find(". ").map_or(text.len(), |p| p + 1));
            let mut log = ConversationLog::new(&id, "red");
            let mut push = |m: u64, sender, text: &str, sent: u64, done: u64| {
                log.push(MessageRecord::new(&id, "red", m, sender, text.trim(), sent, done, MessageStatus::Complete));
            };
            push(0, Sender::User, first, start, start);
            push(0, Sender::Agent, "Sure thing.", start + 1_000, start + 5_000);
            if !second.trim().is_empty() {
                push(1, Sender::User, second, start + 6_000, start + 6_000);
            }
            push(1, Sender::Agent, "Sounds good to me.", start + 7_000, start + DURATION_MS[i]);
            log
        })
        .collect();

    let red = &conversation_stats(&logs)["red"];
    assert_eq!(red.sessions, 11);
    assert_eq!(red.user_words.total, 685.0);
    assert_eq!(round2(red.user_words.mean), 62.27);
    assert_eq!(red.user_sentences.total, 113.0);
    assert_eq!(round2(red.user_sentences.mean), 10.27);
    assert!((red.duration_seconds.mean - 238.73).abs() < 1e-9, "{}", red.duration_seconds.mean);
    assert_eq!(red.agent_words.total, 11.0 * 6.0);
}

#[test]
fn perfect_line_fits_exactly() {
    let pts: Vec<(f64, f64)> = (0..50).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
    let fit = fit_regression(&pts).unwrap();
    assert_eq!((fit.slope, fit.intercept, fit.r_squared), (2.0, 1.0, 1.0));
}
