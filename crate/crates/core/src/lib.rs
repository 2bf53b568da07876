//! Typing-behaviour simulation for chat agents.
//!
//! A reply flows through [`segmenter::segment`], [`planner::plan_edits`] and
//! [`scheduler::schedule`]; [`simulate`] runs all three.

pub mod analyzer;
pub mod lexicon;
pub mod planner;
pub mod runtime;
pub mod scheduler;
pub mod seed;
pub mod segmenter;
pub mod trace_file;
pub mod transcript;
pub mod typo;

use lexicon::Lexicon;
use planner::{plan_edits, EditingParameters};
use scheduler::{schedule, ScheduleError, ScheduledTrace, TemporalParameters};

/// Plans and schedules `text`. The plan and the schedule draw from separate
/// streams of `seed`.
pub fn simulate(
    text: &str,
    temporal: &TemporalParameters,
    editing: &EditingParameters,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<ScheduledTrace, ScheduleError> {
    let plan = plan_edits(&segmenter::segment(text), editing, lexicon, seed)?;
    let mut scheduled = schedule(&plan, temporal, seed)?;
    scheduled.trace.editing = *editing;
    Ok(scheduled)
}
