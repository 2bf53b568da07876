//! Statistical validation of trace files against a configuration.
//!
//! Every inter-event gap is labelled by re-deriving the choreography from the
//! trace's plan, so each delay can be compared against the pace it was drawn
//! from. Delay moments are checked against the truncated normal; edit and
//! pause counts against binomial bands over the opportunities the planner and
//! scheduler actually had.

use std::fmt;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use typesim_core::lexicon::Lexicon;
use typesim_core::planner::{EditKind, EditLevel, EditingParameters};
use typesim_core::scheduler::{apply_trace, choreograph, EventKind, EventTrace, GapShape, Pace, TemporalParameters};
use typesim_core::segmenter::segment;
use typesim_core::typo::typo_applicable;

/// Binomial and moment bands are this many standard errors wide.
pub const RATE_SIGMAS: f64 = 3.0;
pub const MEAN_SIGMAS: f64 = 4.0;
pub const STD_SIGMAS: f64 = 5.0;
/// Samples needed before a standard deviation is checked.
pub const MIN_STD_SAMPLES: usize = 30;
/// Float slack for zero-variance paces and recovered gaps.
pub const EXACT_TOLERANCE_MS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub traces: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "traces {}", self.traces)?;
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "OK" } else { "FAILED" })
    }
}

/// Mean and standard deviation of Normal(mean, std) truncated below at zero.
pub fn truncated_moments(pace: &Pace) -> (f64, f64) {
    if pace.std == 0.0 {
        return (pace.mean, 0.0);
    }
    let unit = Normal::new(0.0, 1.0).expect("standard normal");
    let alpha = -pace.mean / pace.std;
    let tail = 1.0 - unit.cdf(alpha);
    let lambda = unit.pdf(alpha) / tail;
    let mean = pace.mean + pace.std * lambda;
    let var = pace.std * pace.std * (1.0 + alpha * lambda - lambda * lambda);
    (mean, var.max(0.0).sqrt())
}

/// Delay samples grouped by the pace that produced them. Cursor samples are
/// per character; thinking samples are in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelaySamples {
    pub character: Vec<f64>,
    /// Space lag plus character pace.
    pub word_start: Vec<f64>,
    pub deletion: Vec<f64>,
    pub cursor: Vec<f64>,
    pub thinking: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    hits: u64,
}

impl Tally {
    fn add(&mut self, other: Tally) {
        self.trials += other.trials;
        self.hits += other.hits;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct EditTallies {
    sentence_delete: Tally,
    sentence_insert: Tally,
    sentence_modify: Tally,
    word_delete: Tally,
    word_insert: Tally,
    word_modify: Tally,
    typo: Tally,
    initial_word_actions: u64,
}

impl EditTallies {
    fn add(&mut self, o: &EditTallies) {
        self.sentence_delete.add(o.sentence_delete);
        self.sentence_insert.add(o.sentence_insert);
        self.sentence_modify.add(o.sentence_modify);
        self.word_delete.add(o.word_delete);
        self.word_insert.add(o.word_insert);
        self.word_modify.add(o.word_modify);
        self.typo.add(o.typo);
        self.initial_word_actions += o.initial_word_actions;
    }
}

/// Labels every gap of `trace`. Fails when the events do not follow the
/// plan's choreography.
pub fn delay_samples(trace: &EventTrace, into: &mut DelaySamples) -> Result<PauseTally, String> {
    let steps = choreograph(&trace.plan).map_err(|e| e.to_string())?;
    let mut steps_iter = steps.iter();
    let mut prev_t = 0.0;
    let mut pending_pause = 0.0;
    let mut paused = false;
    let mut slots = PauseTally::default();
    let mut local = DelaySamples::default();
    for (i, event) in trace.events.iter().enumerate() {
        if let EventKind::Pause(ms) = event.kind {
            local.thinking.push(ms / 1000.0);
            if paused {
                return Err(format!("event {i}: consecutive pauses"));
            }
            pending_pause = ms;
            paused = true;
            slots.pauses += 1;
            continue;
        }
        let step = steps_iter
            .next()
            .ok_or_else(|| format!("event {i}: beyond the plan's choreography"))?;
        if step.kind != event.kind || step.caret != event.caret {
            return Err(format!("event {i}: expected {:?} at caret {}, found {:?} at caret {}", step.kind, step.caret, event.kind, event.caret));
        }
        if paused && !step.pause_slot {
            return Err(format!("event {i}: pause before a step that allows none"));
        }
        let gap = event.t - prev_t - pending_pause;
        if gap < -EXACT_TOLERANCE_MS * event.t.abs().max(1.0) {
            return Err(format!("event {i}: negative delay {gap}"));
        }
        let gap = gap.max(0.0);
        match step.gap {
            GapShape::Char => local.character.push(gap),
            GapShape::WordStart => local.word_start.push(gap),
            GapShape::Delete => local.deletion.push(gap),
            GapShape::Cursor { distance } if distance > 0 => local.cursor.push(gap / distance as f64),
            GapShape::Cursor { .. } => {}
        }
        if step.pause_slot {
            slots.slots += 1;
        }
        prev_t = event.t;
        pending_pause = 0.0;
        paused = false;
    }
    if steps_iter.next().is_some() {
        return Err("trace ends before the plan's choreography".into());
    }
    if paused {
        return Err("trailing pause".into());
    }
    into.character.extend(local.character);
    into.word_start.extend(local.word_start);
    into.deletion.extend(local.deletion);
    into.cursor.extend(local.cursor);
    into.thinking.extend(local.thinking);
    Ok(slots)
}

/// Pause slots offered and pauses taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PauseTally {
    pub slots: u64,
    pub pauses: u64,
}

fn edit_tallies(trace: &EventTrace, lexicon: &Lexicon) -> EditTallies {
    let text = trace.final_text();
    let doc = segment(text);
    let sentence_of = |byte: usize| doc.sentences.iter().position(|s| s.span.start <= byte && byte < s.span.end);
    let word_of = |byte: usize| doc.words.iter().position(|w| w.span.start <= byte && byte < w.span.end);

    let mut sentence_locked = vec![false; doc.sentence_count()];
    let mut word_locked = vec![false; doc.word_count()];
    let mut t = EditTallies::default();
    for a in &trace.plan.actions {
        let last = a.target.end.saturating_sub(1);
        match a.level {
            EditLevel::Sentence => {
                if let Some(s) = sentence_of(last) {
                    sentence_locked[s] = true;
                }
                match a.kind {
                    EditKind::Delete => t.sentence_delete.hits += 1,
                    EditKind::Insert => t.sentence_insert.hits += 1,
                    EditKind::Modify => t.sentence_modify.hits += 1,
                }
            }
            EditLevel::Word => {
                if let Some(w) = word_of(last) {
                    word_locked[w] = true;
                    if doc.words[w].sentence_initial {
                        t.initial_word_actions += 1;
                    }
                }
                match a.kind {
                    EditKind::Delete => t.word_delete.hits += 1,
                    EditKind::Insert => t.word_insert.hits += 1,
                    EditKind::Modify => t.word_modify.hits += 1,
                }
            }
            EditLevel::Character => t.typo.hits += 1,
        }
    }

    let sentences = doc.sentence_count() as u64;
    t.sentence_delete.trials = sentences;
    t.sentence_insert.trials = sentences;
    t.sentence_modify.trials = sentences;
    for (i, w) in doc.words.iter().enumerate() {
        if sentence_locked[w.sentence] {
            continue;
        }
        let word = w.span.slice(text);
        if !w.sentence_initial {
            t.word_delete.trials += 1;
            t.word_insert.trials += 1;
            if !lexicon.candidates(word).is_empty() {
                t.word_modify.trials += 1;
            }
        }
        if !word_locked[i] && typo_applicable(word) {
            t.typo.trials += 1;
        }
    }
    t
}

fn binomial_band(tally: Tally, p: f64) -> (f64, f64) {
    let n = tally.trials as f64;
    let half = RATE_SIGMAS * (n * p * (1.0 - p)).sqrt();
    (n * p - half, n * p + half)
}

fn rate_check(report: &mut Report, name: &str, tally: Tally, p: f64, upper_only: bool) {
    let (lo, hi) = binomial_band(tally, p);
    let k = tally.hits as f64;
    let passed = if p == 0.0 {
        tally.hits == 0
    } else if p == 1.0 {
        tally.hits == tally.trials
    } else if upper_only {
        k <= hi
    } else {
        lo <= k && k <= hi
    };
    let observed = if tally.trials == 0 { 0.0 } else { k / tally.trials as f64 };
    let band = if upper_only {
        format!("at most {:.1}", hi.max(0.0))
    } else {
        format!("[{:.1}, {:.1}]", lo.max(0.0), hi)
    };
    report.push(
        name,
        passed,
        format!("{} of {} (rate {observed:.4}, configured {p}), expected {band}", tally.hits, tally.trials),
    );
}

fn kurtosis(samples: &[f64], mean: f64) -> f64 {
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    if m2 == 0.0 {
        3.0
    } else {
        (m4 / (m2 * m2)).max(3.0)
    }
}

fn delay_check(report: &mut Report, name: &str, samples: &[f64], expected_mean: f64, expected_std: f64) {
    let n = samples.len();
    if n == 0 {
        report.push(name, true, "no samples");
        return;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    if expected_std == 0.0 {
        let worst = samples.iter().map(|x| (x - expected_mean).abs()).fold(0.0, f64::max);
        let slack = EXACT_TOLERANCE_MS * expected_mean.abs().max(1.0);
        report.push(
            name,
            worst <= slack,
            format!("n={n} zero variance, every sample equals {expected_mean} (largest deviation {worst:.3e})"),
        );
        return;
    }
    let mean_tol = MEAN_SIGMAS * expected_std / (n as f64).sqrt();
    let mean_ok = (mean - expected_mean).abs() <= mean_tol;
    let (std_ok, std_detail) = if n >= MIN_STD_SAMPLES {
        let k = kurtosis(samples, mean);
        let tol = STD_SIGMAS * expected_std * ((k - 1.0) / (4.0 * n as f64)).sqrt();
        ((std - expected_std).abs() <= tol, format!("std {std:.3} vs {expected_std:.3} ± {tol:.3}"))
    } else {
        (true, format!("std {std:.3} not checked below {MIN_STD_SAMPLES} samples"))
    };
    report.push(
        name,
        mean_ok && std_ok,
        format!("n={n} mean {mean:.3} vs {expected_mean:.3} ± {mean_tol:.3}, {std_detail}"),
    );
}

/// Checks `traces` against the expected parameters.
pub fn validate_traces(
    traces: &[(String, EventTrace)],
    temporal: &TemporalParameters,
    editing: &EditingParameters,
    lexicon: &Lexicon,
) -> Report {
    let mut report = Report {
        traces: traces.len(),
        ..Report::default()
    };
    if traces.is_empty() {
        report.push("input", false, "no traces");
        return report;
    }

    let mut text_failures = Vec::new();
    let mut plan_failures = Vec::new();
    let mut timing_failures = Vec::new();
    let mut samples = DelaySamples::default();
    let mut pauses = PauseTally::default();
    let mut edits = EditTallies::default();
    for (name, trace) in traces {
        match apply_trace(&trace.events) {
            Ok(text) if text == trace.final_text() => {}
            Ok(_) => text_failures.push(format!("{name}: replay differs from the final text")),
            Err(e) => text_failures.push(format!("{name}: event {}: {e}", e.index())),
        }
        if let Err(e) = trace.plan.check() {
            plan_failures.push(format!("{name}: {e}"));
        }
        match delay_samples(trace, &mut samples) {
            Ok(t) => {
                pauses.slots += t.slots;
                pauses.pauses += t.pauses;
            }
            Err(e) => timing_failures.push(format!("{name}: {e}")),
        }
        edits.add(&edit_tallies(trace, lexicon));
    }
    let summarize = |failures: &[String], ok: &str| {
        failures.first().map_or_else(
            || ok.to_owned(),
            |first| format!("{} failing, first {first}", failures.len()),
        )
    };
    report.push(
        "eventual-text",
        text_failures.is_empty(),
        summarize(&text_failures, "replay equals the final text, timestamps monotone"),
    );
    report.push("plan", plan_failures.is_empty(), summarize(&plan_failures, "plans replay soundly"));
    report.push(
        "choreography",
        timing_failures.is_empty(),
        summarize(&timing_failures, "events follow their plans"),
    );

    let (cm, cs) = truncated_moments(&temporal.character_typing_pace);
    let (sm, ss) = truncated_moments(&temporal.space_lag_pace);
    let (dm, ds) = truncated_moments(&temporal.character_deletion_pace);
    let (mm, ms) = truncated_moments(&temporal.cursor_move_speed);
    let (tm, ts) = truncated_moments(&temporal.thinking_time);
    delay_check(&mut report, "characterTypingPace", &samples.character, cm, cs);
    delay_check(
        &mut report,
        "spaceLagPace+characterTypingPace",
        &samples.word_start,
        sm + cm,
        (ss * ss + cs * cs).sqrt(),
    );
    delay_check(&mut report, "characterDeletionPace", &samples.deletion, dm, ds);
    delay_check(&mut report, "cursorMoveSpeed", &samples.cursor, mm, ms);
    delay_check(&mut report, "thinkingTime", &samples.thinking, tm, ts);

    rate_check(
        &mut report,
        "pauseRate",
        Tally {
            trials: pauses.slots,
            hits: pauses.pauses,
        },
        temporal.pause_rate,
        false,
    );
    rate_check(&mut report, "sentence deletionRate", edits.sentence_delete, editing.paragraph.deletion, false);
    // Insertions need a preceding sibling and rewrites can coincide with the
    // original, so these two only bound from above.
    rate_check(&mut report, "sentence insertionRate", edits.sentence_insert, editing.paragraph.insertion, true);
    rate_check(&mut report, "sentence modificationRate", edits.sentence_modify, editing.paragraph.modification, true);
    rate_check(&mut report, "word deletionRate", edits.word_delete, editing.word.deletion, false);
    rate_check(&mut report, "word insertionRate", edits.word_insert, editing.word.insertion, false);
    rate_check(&mut report, "word modificationRate", edits.word_modify, editing.word.modification, false);
    rate_check(&mut report, "typoRate", edits.typo, editing.character.typo, false);
    report.push(
        "sentence-initial words",
        edits.initial_word_actions == 0,
        format!("{} word actions on sentence-initial words", edits.initial_word_actions),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use typesim_core::scheduler::sample_delay;

    #[test]
    fn moments_of_untruncated_pace() {
        let (m, s) = truncated_moments(&Pace::new(100.0, 20.0));
        assert!((m - 100.0).abs() < 1e-4);
        assert!((s - 20.0).abs() < 1e-3);
        assert_eq!(truncated_moments(&Pace::new(15.0, 0.0)), (15.0, 0.0));
    }

    #[test]
    fn moments_of_half_normal() {
        // Normal(0, 1) truncated at zero is the half-normal.
        let (m, s) = truncated_moments(&Pace::new(0.0, 1.0));
        let pi = std::f64::consts::PI;
        assert!((m - (2.0 / pi).sqrt()).abs() < 1e-12);
        assert!((s - (1.0 - 2.0 / pi).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn moments_match_sampler() {
        let pace = Pace::new(10.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50_000).map(|_| sample_delay(&pace, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let (m, s) = truncated_moments(&pace);
        assert!((mean - m).abs() < 4.0 * s / (xs.len() as f64).sqrt());
    }

    #[test]
    fn zero_rate_requires_zero_hits() {
        let mut r = Report::default();
        rate_check(&mut r, "x", Tally { trials: 10, hits: 0 }, 0.0, false);
        rate_check(&mut r, "y", Tally { trials: 10, hits: 1 }, 0.0, false);
        assert!(r.checks[0].passed);
        assert!(!r.checks[1].passed);
    }

    #[test]
    fn band_is_three_sigma() {
        let (lo, hi) = binomial_band(Tally { trials: 10_000, hits: 0 }, 0.2);
        assert!((lo - 1880.0).abs() < 1e-9 && (hi - 2120.0).abs() < 1e-9);
    }
}
