//! Keystroke scheduling: turns an edit plan into a timed event trace.
//!
//! Scheduling happens in two steps. [`choreograph`] walks the plan and
//! produces the ordered, untimed keystrokes (forward typing interleaved with
//! detour resolutions); it is fully determined by the plan. [`schedule`] then
//! samples every delay from truncated normal distributions and decides where
//! thinking pauses go. Timestamps are virtual milliseconds from trace start.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{EditPlan, EditingParameters, PlanError, ValidationError};
use crate::seed::{rng_for, stream};

/// Attempts at drawing a non-negative normal sample before clamping to zero.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 64;

/// Mean and standard deviation of a delay distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pace {
    pub mean: f64,
    pub std: f64,
}

impl Pace {
    pub const fn new(mean: f64, std: f64) -> Self {
        Pace { mean, std }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TemporalParameters {
    /// Per typed character, ms.
    pub character_typing_pace: Pace,
    /// Lag before each word, ms.
    pub space_lag_pace: Pace,
    /// Per backspaced character, ms.
    pub character_deletion_pace: Pace,
    /// Per character of cursor travel, ms.
    pub cursor_move_speed: Pace,
    /// Probability of a thinking pause at each word boundary.
    pub pause_rate: f64,
    /// Duration of a thinking pause, seconds.
    pub thinking_time: Pace,
}

fn check_pace(name: &str, p: &Pace) -> Result<(), ValidationError> {
    let ok = p.mean.is_finite() && p.std.is_finite() && p.mean >= 0.0 && p.std >= 0.0;
    if ok {
        Ok(())
    } else {
        Err(ValidationError::Invalid(format!(
            "{name} needs a finite non-negative mean and std, got ({}, {})",
            p.mean, p.std
        )))
    }
}

pub fn validate_temporal(t: &TemporalParameters) -> Result<(), ValidationError> {
    check_pace("characterTypingPace", &t.character_typing_pace)?;
    check_pace("spaceLagPace", &t.space_lag_pace)?;
    check_pace("characterDeletionPace", &t.character_deletion_pace)?;
    check_pace("cursorMoveSpeed", &t.cursor_move_speed)?;
    check_pace("thinkingTime", &t.thinking_time)?;
    if !(0.0..=1.0).contains(&t.pause_rate) {
        return Err(ValidationError::Invalid(format!(
            "pauseRate {} is outside [0, 1]",
            t.pause_rate
        )));
    }
    Ok(())
}

/// Standardised outcome of one truncated-normal draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviate {
    /// Zero-variance pace: the mean itself.
    Mean,
    /// Accepted standard-normal value.
    Z(f64),
    /// Every attempt was negative.
    Clamped,
}

impl Deviate {
    pub fn realize(self, pace: &Pace) -> f64 {
        match self {
            Deviate::Mean => pace.mean,
            Deviate::Z(z) => (pace.mean + pace.std * z).max(0.0),
            Deviate::Clamped => 0.0,
        }
    }
}

fn draw_deviate<R: Rng + ?Sized>(pace: &Pace, rng: &mut R) -> Deviate {
    if pace.std == 0.0 {
        return Deviate::Mean;
    }
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let z: f64 = rng.sample(StandardNormal);
        if pace.mean + pace.std * z >= 0.0 {
            return Deviate::Z(z);
        }
    }
    Deviate::Clamped
}

/// One draw from Normal(mean, std) truncated at zero by resampling.
pub fn sample_delay<R: Rng + ?Sized>(pace: &Pace, rng: &mut R) -> f64 {
    draw_deviate(pace, rng).realize(pace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PaceKind {
    CharacterTyping,
    SpaceLag,
    CharacterDeletion,
    CursorMove,
    Thinking,
}

impl PaceKind {
    pub fn pace(self, t: &TemporalParameters) -> Pace {
        match self {
            PaceKind::CharacterTyping => t.character_typing_pace,
            PaceKind::SpaceLag => t.space_lag_pace,
            PaceKind::CharacterDeletion => t.character_deletion_pace,
            PaceKind::CursorMove => t.cursor_move_speed,
            PaceKind::Thinking => t.thinking_time,
        }
    }

    /// Milliseconds per unit of the pace.
    fn unit_ms(self) -> f64 {
        match self {
            PaceKind::Thinking => 1000.0,
            _ => 1.0,
        }
    }
}

/// One sampled contribution to an event's delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayComponent {
    pub kind: PaceKind,
    pub deviate: Deviate,
    /// Multiplier, e.g. cursor travel distance.
    pub scale: f64,
}

impl DelayComponent {
    pub fn value(&self, t: &TemporalParameters) -> f64 {
        self.deviate.realize(&self.kind.pace(t)) * self.scale * self.kind.unit_ms()
    }
}

fn gap_value(components: &[DelayComponent], t: &TemporalParameters) -> f64 {
    components.iter().fold(0.0, |acc, c| acc + c.value(t))
}

/// How an event's delay is composed, per event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTiming {
    pub gap: Vec<DelayComponent>,
    /// Duration of a pause event.
    pub pause: Option<DelayComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    TypeChar(char),
    DeleteBackward,
    MoveCursorTo(usize),
    /// Thinking pause of the given duration in ms.
    Pause(f64),
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::TypeChar(_) => "type",
            EventKind::DeleteBackward => "delete",
            EventKind::MoveCursorTo(_) => "move",
            EventKind::Pause(_) => "pause",
        }
    }

    pub fn is_edit(&self) -> bool {
        matches!(self, EventKind::DeleteBackward | EventKind::MoveCursorTo(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeystrokeEvent {
    /// ms from trace start.
    pub t: f64,
    pub kind: EventKind,
    /// Caret offset (in chars) after the event.
    pub caret: usize,
}

/// Shape of the delay preceding a choreographed keystroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapShape {
    Char,
    /// Space lag then character pace.
    WordStart,
    Delete,
    Cursor { distance: usize },
}

/// An untimed keystroke in typing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub kind: EventKind,
    pub caret: usize,
    pub gap: GapShape,
    /// A thinking pause may precede this step.
    pub pause_slot: bool,
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("plan integrity: {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

fn common_prefix(a: &[char], b: &[char]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn common_suffix(a: &[char], b: &[char], limit: usize) -> usize {
    a.iter()
        .rev()
        .zip(b.iter().rev())
        .take(limit)
        .take_while(|(x, y)| x == y)
        .count()
}

struct Resolution {
    action: usize,
    /// Typing-order offset (chars of initial text) at which it fires.
    at: usize,
    /// Region start in the initial text, chars.
    initial_start: usize,
    form: Vec<char>,
    target: Vec<char>,
    target_start: usize,
}

/// Maps a final-text byte anchor onto a typing-order char offset.
fn typing_offset(plan: &EditPlan, regions: &[crate::planner::Region], anchor: usize) -> usize {
    let mut byte = anchor as isize;
    let mut snapped = None;
    for (a, r) in plan.actions.iter().zip(regions) {
        let t = a.target;
        let delta = r.initial_form.len() as isize - t.len() as isize;
        if t.end <= anchor {
            byte += delta;
        } else if t.start < anchor {
            snapped = Some(r.initial_start + r.initial_form.len());
        }
    }
    let byte = snapped.unwrap_or(byte as usize);
    plan.initial_text[..byte].chars().count()
}

/// Untimed keystrokes for `plan`: forward typing of the initial text with
/// each detour resolved once typing reaches its anchor.
pub fn choreograph(plan: &EditPlan) -> Result<Vec<Step>, ScheduleError> {
    let regions = plan.regions()?;
    let mut pending: Vec<Resolution> = plan
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let r = &regions[i];
            Resolution {
                action: i,
                at: typing_offset(plan, &regions, a.trigger.anchor),
                initial_start: plan.initial_text[..r.initial_start].chars().count(),
                form: r.initial_form.chars().collect(),
                target: a.target.slice(&plan.final_text).chars().collect(),
                target_start: a.target.start,
            }
        })
        .collect();
    pending.sort_by_key(|r| (r.at, r.action));

    let initial: Vec<char> = plan.initial_text.chars().collect();
    let mut buffer: Vec<char> = Vec::with_capacity(plan.final_text.len());
    let mut caret = 0usize;
    let mut steps = Vec::with_capacity(initial.len() + 8 * pending.len());
    let mut resolved: Vec<(usize, isize)> = Vec::new();
    let mut next = 0usize;

    let mut resolve_due = |typed: usize,
                           buffer: &mut Vec<char>,
                           caret: &mut usize,
                           steps: &mut Vec<Step>,
                           next: &mut usize| {
        while *next < pending.len() && pending[*next].at == typed {
            let r = &pending[*next];
            *next += 1;
            let shift: isize = resolved
                .iter()
                .filter(|(start, _)| *start < r.target_start)
                .map(|(_, d)| d)
                .sum();
            let pos = (r.initial_start as isize + shift) as usize;
            let p = common_prefix(&r.form, &r.target);
            let s = common_suffix(&r.form, &r.target, r.form.len().min(r.target.len()) - p);
            let zone_start = pos + p;
            let zone_end = pos + r.form.len() - s;
            let replacement = &r.target[p..r.target.len() - s];

            if *caret != zone_end {
                steps.push(Step {
                    kind: EventKind::MoveCursorTo(zone_end),
                    caret: zone_end,
                    gap: GapShape::Cursor {
                        distance: caret.abs_diff(zone_end),
                    },
                    pause_slot: false,
                });
                *caret = zone_end;
            }
            for _ in zone_start..zone_end {
                buffer.remove(*caret - 1);
                *caret -= 1;
                steps.push(Step {
                    kind: EventKind::DeleteBackward,
                    caret: *caret,
                    gap: GapShape::Delete,
                    pause_slot: false,
                });
            }
            for &c in replacement {
                buffer.insert(*caret, c);
                *caret += 1;
                steps.push(Step {
                    kind: EventKind::TypeChar(c),
                    caret: *caret,
                    gap: GapShape::Char,
                    pause_slot: false,
                });
            }
            if *caret != buffer.len() {
                let end = buffer.len();
                steps.push(Step {
                    kind: EventKind::MoveCursorTo(end),
                    caret: end,
                    gap: GapShape::Cursor {
                        distance: caret.abs_diff(end),
                    },
                    pause_slot: false,
                });
                *caret = end;
            }
            resolved.push((r.target_start, r.target.len() as isize - r.form.len() as isize));
        }
    };

    resolve_due(0, &mut buffer, &mut caret, &mut steps, &mut next);
    for (i, &c) in initial.iter().enumerate() {
        let word_start = !c.is_whitespace() && (i == 0 || initial[i - 1].is_whitespace());
        buffer.push(c);
        caret += 1;
        steps.push(Step {
            kind: EventKind::TypeChar(c),
            caret,
            gap: if word_start { GapShape::WordStart } else { GapShape::Char },
            pause_slot: word_start,
        });
        resolve_due(i + 1, &mut buffer, &mut caret, &mut steps, &mut next);
    }
    if next != pending.len() {
        let r = &pending[next];
        return Err(PlanError::AnchorOutOfRange {
            index: r.action,
            anchor: plan.actions[r.action].trigger.anchor,
        }
        .into());
    }
    Ok(steps)
}

/// A timed trace plus the provenance of every delay.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    pub seed: u64,
    pub temporal: TemporalParameters,
    pub editing: EditingParameters,
    pub plan: EditPlan,
    pub events: Vec<KeystrokeEvent>,
}

impl EventTrace {
    pub fn final_text(&self) -> &str {
        &self.plan.final_text
    }

    pub fn duration(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    pub fn count(&self, label: &str) -> usize {
        self.events.iter().filter(|e| e.kind.label() == label).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledTrace {
    pub trace: EventTrace,
    pub timings: Vec<EventTiming>,
}

impl ScheduledTrace {
    /// Recomputes timestamps from event `from` onwards under new temporal
    /// parameters. Events before `from` keep their timestamps.
    pub fn retime_from(&mut self, from: usize, temporal: &TemporalParameters) {
        let events = &mut self.trace.events;
        let mut t = if from == 0 { 0.0 } else { events[from - 1].t };
        for (event, timing) in events.iter_mut().zip(&self.timings).skip(from) {
            t += gap_value(&timing.gap, temporal);
            event.t = t;
            if let (EventKind::Pause(d), Some(p)) = (&mut event.kind, timing.pause) {
                *d = p.value(temporal);
            }
        }
        self.trace.temporal = *temporal;
    }
}

fn component<R: Rng + ?Sized>(
    kind: PaceKind,
    scale: f64,
    t: &TemporalParameters,
    rng: &mut R,
) -> DelayComponent {
    DelayComponent {
        kind,
        deviate: draw_deviate(&kind.pace(t), rng),
        scale,
    }
}

/// Samples delays and thinking pauses over the choreography of `plan`.
pub fn schedule(
    plan: &EditPlan,
    temporal: &TemporalParameters,
    seed: u64,
) -> Result<ScheduledTrace, ScheduleError> {
    validate_temporal(temporal)?;
    let steps = choreograph(plan)?;
    let mut rng: ChaCha8Rng = rng_for(seed, stream::SCHEDULE, 0);
    let mut events = Vec::with_capacity(steps.len() + steps.len() / 8);
    let mut timings = Vec::with_capacity(events.capacity());
    let mut t = 0.0;

    for step in steps {
        let mut gap = Vec::with_capacity(3);
        if step.pause_slot {
            let u: f64 = rng.random();
            if u < temporal.pause_rate {
                let pause = component(PaceKind::Thinking, 1.0, temporal, &mut rng);
                events.push(KeystrokeEvent {
                    t,
                    kind: EventKind::Pause(pause.value(temporal)),
                    caret: events.last().map_or(0, |e: &KeystrokeEvent| e.caret),
                });
                timings.push(EventTiming {
                    gap: Vec::new(),
                    pause: Some(pause),
                });
                gap.push(pause);
            }
        }
        match step.gap {
            GapShape::Char => gap.push(component(PaceKind::CharacterTyping, 1.0, temporal, &mut rng)),
            GapShape::WordStart => {
                gap.push(component(PaceKind::SpaceLag, 1.0, temporal, &mut rng));
                gap.push(component(PaceKind::CharacterTyping, 1.0, temporal, &mut rng));
            }
            GapShape::Delete => gap.push(component(PaceKind::CharacterDeletion, 1.0, temporal, &mut rng)),
            GapShape::Cursor { distance } => {
                gap.push(component(PaceKind::CursorMove, distance as f64, temporal, &mut rng))
            }
        }
        t += gap_value(&gap, temporal);
        events.push(KeystrokeEvent {
            t,
            kind: step.kind,
            caret: step.caret,
        });
        timings.push(EventTiming { gap, pause: None });
    }

    Ok(ScheduledTrace {
        trace: EventTrace {
            seed,
            temporal: *temporal,
            editing: EditingParameters::default(),
            plan: plan.clone(),
            events,
        },
        timings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event {index}: delete at offset 0")]
    DeleteAtStart { index: usize },
    #[error("event {index}: caret {offset} outside buffer of length {len}")]
    CaretOutOfRange { index: usize, offset: usize, len: usize },
    #[error("event {index}: recorded caret {recorded} but replay caret is {actual}")]
    CaretMismatch {
        index: usize,
        recorded: usize,
        actual: usize,
    },
    #[error("event {index}: timestamp goes backwards")]
    TimeReversal { index: usize },
}

impl ReplayError {
    pub fn index(&self) -> usize {
        match *self {
            ReplayError::DeleteAtStart { index }
            | ReplayError::CaretOutOfRange { index, .. }
            | ReplayError::CaretMismatch { index, .. }
            | ReplayError::TimeReversal { index } => index,
        }
    }
}

/// Replays events over an empty buffer with a caret and returns the text.
pub fn apply_trace(events: &[KeystrokeEvent]) -> Result<String, ReplayError> {
    let mut buffer: Vec<char> = Vec::new();
    let mut caret = 0usize;
    let mut last_t = f64::NEG_INFINITY;
    for (index, e) in events.iter().enumerate() {
        if e.t.is_nan() || e.t < last_t {
            return Err(ReplayError::TimeReversal { index });
        }
        last_t = e.t;
        match e.kind {
            EventKind::TypeChar(c) => {
                buffer.insert(caret, c);
                caret += 1;
            }
            EventKind::DeleteBackward => {
                if caret == 0 {
                    return Err(ReplayError::DeleteAtStart { index });
                }
                caret -= 1;
                buffer.remove(caret);
            }
            EventKind::MoveCursorTo(offset) => {
                if offset > buffer.len() {
                    return Err(ReplayError::CaretOutOfRange {
                        index,
                        offset,
                        len: buffer.len(),
                    });
                }
                caret = offset;
            }
            EventKind::Pause(_) => {}
        }
        if e.caret != caret {
            return Err(ReplayError::CaretMismatch {
                index,
                recorded: e.caret,
                actual: caret,
            });
        }
    }
    Ok(buffer.into_iter().collect())
}
