//! Interaction metrics over conversation logs and the user/agent word-count
//! regression.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmenter::counts;
use crate::transcript::{ConversationLog, LogRecord, Sender};

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegressionError {
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("all x values are identical")]
    DegenerateX,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Mean and sample standard deviation (n - 1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub total: f64,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary::default();
        }
        let total: f64 = values.iter().sum();
        let mean = total / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { n, total, mean, std }
    }
}

/// Counts for one session, recomputed from message text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionStats {
    pub session_id: String,
    pub preset: String,
    pub user_words: usize,
    pub user_sentences: usize,
    pub agent_words: usize,
    pub agent_sentences: usize,
    pub duration_seconds: f64,
}

pub fn session_stats(log: &ConversationLog) -> SessionStats {
    let mut s = SessionStats {
        session_id: log.session_id.clone(),
        preset: log.preset.clone(),
        user_words: 0,
        user_sentences: 0,
        agent_words: 0,
        agent_sentences: 0,
        duration_seconds: log.duration_seconds(),
    };
    for r in log.records() {
        let (w, n) = counts(&r.text);
        match r.sender {
            Sender::User => {
                s.user_words += w;
                s.user_sentences += n;
            }
            Sender::Agent => {
                s.agent_words += w;
                s.agent_sentences += n;
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionStats {
    pub sessions: usize,
    pub user_words: Summary,
    pub user_sentences: Summary,
    pub agent_words: Summary,
    pub agent_sentences: Summary,
    pub duration_seconds: Summary,
}

fn aggregate(sessions: &[&SessionStats]) -> InteractionStats {
    let col = |f: fn(&SessionStats) -> f64| Summary::of(&sessions.iter().map(|s| f(s)).collect::<Vec<_>>());
    InteractionStats {
        sessions: sessions.len(),
        user_words: col(|s| s.user_words as f64),
        user_sentences: col(|s| s.user_sentences as f64),
        agent_words: col(|s| s.agent_words as f64),
        agent_sentences: col(|s| s.agent_sentences as f64),
        duration_seconds: col(|s| s.duration_seconds),
    }
}

/// Per-preset mean and standard deviation over sessions.
pub fn conversation_stats(logs: &[ConversationLog]) -> BTreeMap<String, InteractionStats> {
    let per_session: Vec<SessionStats> = logs.iter().map(session_stats).collect();
    let mut by_preset: BTreeMap<String, Vec<&SessionStats>> = BTreeMap::new();
    for s in &per_session {
        by_preset.entry(s.preset.clone()).or_default().push(s);
    }
    by_preset.into_iter().map(|(k, v)| (k, aggregate(&v))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares of y on x.
pub fn fit_regression(points: &[(f64, f64)]) -> Result<RegressionFit, RegressionError> {
    let n = points.len();
    if n < 2 {
        return Err(RegressionError::TooFewPoints(n));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    if points.iter().all(|p| p.0 == points[0].0) {
        return Err(RegressionError::DegenerateX);
    }
    let nf = n as f64;
    if points.iter().all(|p| p.1 == points[0].1) {
        return Ok(RegressionFit {
            slope: 0.0,
            intercept: points[0].1,
            r_squared: 0.0,
            n,
        });
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (ss_res, ss_tot) = points.iter().fold((0.0, 0.0), |(res, tot), (x, y)| {
        let e = y - (intercept + slope * x);
        (res + e * e, tot + (y - my) * (y - my))
    });
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared: (1.0 - ss_res / ss_tot).clamp(0.0, 1.0),
        n,
    })
}

/// `(agent words, user words)` per session: X and Y of the word-count fit.
pub fn word_count_points(logs: &[ConversationLog]) -> Vec<(f64, f64)> {
    logs.iter()
        .map(session_stats)
        .map(|s| (s.agent_words as f64, s.user_words as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsReport {
    pub sessions: usize,
    pub presets: BTreeMap<String, InteractionStats>,
    /// Absent with fewer than two sessions or identical agent word counts.
    pub regression: Option<RegressionFit>,
}

pub fn report(logs: &[ConversationLog]) -> StatsReport {
    StatsReport {
        sessions: logs.len(),
        presets: conversation_stats(logs),
        regression: fit_regression(&word_count_points(logs)).ok(),
    }
}

/// Parses JSON-lines log text. Blank lines are skipped.
pub fn parse_log(text: &str, path: &Path) -> Result<Vec<LogRecord>, AnalyzerError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AnalyzerError::Record {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads a log file, or every `*.jsonl` below a directory in path order.
pub fn load_logs(path: &Path) -> Result<Vec<ConversationLog>, AnalyzerError> {
    let io = |p: &Path, source| AnalyzerError::Io {
        path: p.to_owned(),
        source,
    };
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files = Vec::new();
        for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
            let entry = entry.map_err(|e| io(path, e.into()))?;
            if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "jsonl") {
                files.push(entry.into_path());
            }
        }
        files
    } else {
        vec![path.to_owned()]
    };
    let mut records = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| io(&f, e))?;
        records.extend(parse_log(&text, &f)?);
    }
    Ok(ConversationLog::group(records))
}

/// One CSV row per session.
pub fn write_sessions_csv<W: Write>(logs: &[ConversationLog], out: W) -> Result<(), AnalyzerError> {
    let mut w = csv::Writer::from_writer(out);
    for log in logs {
        w.serialize(session_stats(log))?;
    }
    w.flush().map_err(|e| AnalyzerError::Io {
        path: PathBuf::from("<csv>"),
        source: e,
    })?;
    Ok(())
}

/// Mean and standard deviation of every numeric column in a CSV table, e.g.
/// questionnaire scores. Empty cells are skipped; columns holding any
/// non-numeric cell are left out.
pub fn column_summary<R: Read>(input: R) -> Result<BTreeMap<String, Summary>, AnalyzerError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let mut columns: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); headers.len()];
    for row in reader.records() {
        let row = row?;
        for (i, cell) in row.iter().enumerate().take(headers.len()) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            match (cell.parse::<f64>(), &mut columns[i]) {
                (Ok(v), Some(col)) => col.push(v),
                (Err(_), slot) => *slot = None,
                _ => {}
            }
        }
    }
    Ok(headers
        .iter()
        .zip(columns)
        .filter_map(|(h, c)| c.map(|c| (h.to_owned(), Summary::of(&c))))
        .collect())
}
