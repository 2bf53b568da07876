//! Edit planning: choose which parts of a response are first typed "wrong"
//! and later corrected.
//!
//! The backend response is always the final text. Every action therefore
//! describes a detour that converges back to it:
//!
//! | level     | kind   | target span            | first typed as               |
//! |-----------|--------|------------------------|------------------------------|
//! | sentence  | Delete | sentence               | filler sentence + sentence   |
//! | sentence  | Insert | trailing sentence + ws | nothing (omitted)            |
//! | sentence  | Modify | sentence               | rewritten sentence           |
//! | word      | Delete | word                   | filler word + word           |
//! | word      | Insert | ws + word              | nothing (omitted)            |
//! | word      | Modify | word                   | synonym                      |
//! | character | Modify | word                   | typo                         |
//!
//! Paragraph-level rates select sentences. Sentence-level rates shape the
//! rewrite of a sentence chosen for modification. Word-level rates act on
//! the remaining non-initial words, and the typo rate on remaining words.
//! An element is touched by at most one action.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::seed::{derive_seed, rng_for, stream};
use crate::segmenter::{DocumentStructure, Span};
use crate::typo::{generate_typo, typo_applicable};

/// Slack allowed on a level's rate sum before it counts as exceeding 1.
pub const RATE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct LevelRates {
    #[serde(rename = "deletionRate")]
    pub deletion: f64,
    #[serde(rename = "insertionRate")]
    pub insertion: f64,
    #[serde(rename = "modificationRate")]
    pub modification: f64,
}

impl LevelRates {
    pub fn new(deletion: f64, insertion: f64, modification: f64) -> Self {
        LevelRates {
            deletion,
            insertion,
            modification,
        }
    }

    pub fn sum(&self) -> f64 {
        self.deletion + self.insertion + self.modification
    }

    pub fn is_zero(&self) -> bool {
        self.sum() == 0.0
    }

    /// One categorical draw: Delete with p = deletion, Insert with p = insertion,
    /// Modify with p = modification, nothing otherwise.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<EditKind> {
        let u: f64 = rng.random();
        if u < self.deletion {
            Some(EditKind::Delete)
        } else if u < self.deletion + self.insertion {
            Some(EditKind::Insert)
        } else if u < self.sum() {
            Some(EditKind::Modify)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct CharacterRates {
    #[serde(rename = "typoRate")]
    pub typo: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EditingParameters {
    /// Proportion of sentences deleted, inserted, or modified.
    pub paragraph: LevelRates,
    /// Word edits inside a sentence chosen for modification.
    pub sentence: LevelRates,
    pub word: LevelRates,
    pub character: CharacterRates,
}

impl EditingParameters {
    pub fn is_zero(&self) -> bool {
        self.paragraph.is_zero()
            && self.sentence.is_zero()
            && self.word.is_zero()
            && self.character.typo == 0.0
    }

    pub fn total(&self) -> f64 {
        self.paragraph.sum() + self.sentence.sum() + self.word.sum() + self.character.typo
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{level} {field} rate {value} is outside [0, 1]")]
    RateOutOfRange {
        level: &'static str,
        field: &'static str,
        value: f64,
    },
    #[error("{level} rates sum to {sum}, which exceeds 1")]
    SumExceedsOne { level: &'static str, sum: f64 },
    #[error("{0}")]
    Invalid(String),
}

fn check_rate(level: &'static str, field: &'static str, value: f64) -> Result<(), ValidationError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ValidationError::RateOutOfRange { level, field, value })
    }
}

/// Every rate in [0, 1] and every level's sum at most 1.
pub fn validate_params(p: &EditingParameters) -> Result<(), ValidationError> {
    for (level, rates) in [
        ("paragraph", &p.paragraph),
        ("sentence", &p.sentence),
        ("word", &p.word),
    ] {
        check_rate(level, "deletionRate", rates.deletion)?;
        check_rate(level, "insertionRate", rates.insertion)?;
        check_rate(level, "modificationRate", rates.modification)?;
        let sum = rates.sum();
        if sum > 1.0 + RATE_SUM_TOLERANCE {
            return Err(ValidationError::SumExceedsOne { level, sum });
        }
    }
    check_rate("character", "typoRate", p.character.typo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Delete,
    Insert,
    Modify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditLevel {
    Sentence,
    Word,
    Character,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerMode {
    Inline,
    Retrospective,
}

/// When a detour gets resolved. `anchor` is a byte offset (on a char
/// boundary) into the final text: the resolution fires once typing has
/// produced everything before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TriggerPoint {
    pub mode: TriggerMode,
    pub anchor: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditAction {
    pub kind: EditKind,
    pub level: EditLevel,
    /// Span of the final text this action is responsible for.
    pub target: Span,
    /// The planted filler, the synonym / rewrite, or the typo. Empty for inserts.
    pub detour: String,
    pub trigger: TriggerPoint,
}

impl EditAction {
    /// Text that stands in place of the target span when first typed.
    pub fn initial_form(&self, final_text: &str) -> String {
        let target = self.target.slice(final_text);
        match self.kind {
            EditKind::Delete => format!("{} {}", self.detour, target),
            EditKind::Insert => String::new(),
            EditKind::Modify => self.detour.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditPlan {
    pub initial_text: String,
    /// Ordered by trigger anchor, ties by target position.
    pub actions: Vec<EditAction>,
    pub final_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("action {index} targets {start}..{end}, outside the final text")]
    TargetOutOfBounds { index: usize, start: usize, end: usize },
    #[error("action {index} overlaps an earlier action")]
    Overlap { index: usize },
    #[error("action {index} has anchor {anchor} outside the typing order")]
    AnchorOutOfRange { index: usize, anchor: usize },
    #[error("action {index} detour no longer matches the buffer")]
    DetourMismatch { index: usize },
    #[error("initial text does not match the actions")]
    InitialMismatch,
    #[error("replay produced a different final text")]
    ReplayMismatch,
}

/// Position of one action's detour within the initial text.
#[derive(Debug, Clone)]
pub(crate) struct Region {
    pub initial_start: usize,
    pub initial_form: String,
}

impl EditPlan {
    pub fn unedited(text: &str) -> Self {
        EditPlan {
            initial_text: text.to_owned(),
            actions: Vec::new(),
            final_text: text.to_owned(),
        }
    }

    /// Checks bounds and disjointness, then derives every action's region in
    /// the initial text (indexed like `self.actions`).
    pub(crate) fn regions(&self) -> Result<Vec<Region>, PlanError> {
        let text = &self.final_text;
        let mut order: Vec<usize> = (0..self.actions.len()).collect();
        order.sort_by_key(|&i| (self.actions[i].target.start, self.actions[i].target.end));

        let mut regions: Vec<Option<Region>> = vec![None; self.actions.len()];
        let mut built = String::with_capacity(self.initial_text.len());
        let mut cursor = 0;
        for &i in &order {
            let a = &self.actions[i];
            let t = a.target;
            let in_bounds = t.start < t.end
                && t.end <= text.len()
                && text.is_char_boundary(t.start)
                && text.is_char_boundary(t.end);
            if !in_bounds {
                return Err(PlanError::TargetOutOfBounds {
                    index: i,
                    start: t.start,
                    end: t.end,
                });
            }
            if t.start < cursor {
                return Err(PlanError::Overlap { index: i });
            }
            let anchor_ok = a.trigger.anchor >= t.end
                && a.trigger.anchor <= text.len()
                && text.is_char_boundary(a.trigger.anchor);
            if !anchor_ok {
                return Err(PlanError::AnchorOutOfRange {
                    index: i,
                    anchor: a.trigger.anchor,
                });
            }
            built.push_str(&text[cursor..t.start]);
            let form = a.initial_form(text);
            regions[i] = Some(Region {
                initial_start: built.len(),
                initial_form: form.clone(),
            });
            built.push_str(&form);
            cursor = t.end;
        }
        built.push_str(&text[cursor..]);
        if built != self.initial_text {
            return Err(PlanError::InitialMismatch);
        }
        Ok(regions.into_iter().map(|r| r.expect("every action visited")).collect())
    }

    /// Applies the actions, in order, to the initial text.
    pub fn replay(&self) -> Result<String, PlanError> {
        let regions = self.regions()?;
        let mut buffer = self.initial_text.clone();
        let mut applied: Vec<(usize, isize)> = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            let r = &regions[i];
            let shift: isize = applied
                .iter()
                .filter(|(start, _)| *start < a.target.start)
                .map(|(_, d)| d)
                .sum();
            let pos = (r.initial_start as isize + shift) as usize;
            let end = pos + r.initial_form.len();
            if buffer.get(pos..end) != Some(r.initial_form.as_str()) {
                return Err(PlanError::DetourMismatch { index: i });
            }
            let target = a.target.slice(&self.final_text);
            buffer.replace_range(pos..end, target);
            applied.push((a.target.start, target.len() as isize - r.initial_form.len() as isize));
        }
        Ok(buffer)
    }

    /// Full consistency check: bounds, disjointness, anchors, replay soundness.
    pub fn check(&self) -> Result<(), PlanError> {
        if self.replay()? != self.final_text {
            return Err(PlanError::ReplayMismatch);
        }
        Ok(())
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Start of the whitespace run directly before `offset`, or `offset` itself.
fn whitespace_before(text: &str, offset: usize) -> usize {
    let trimmed = text[..offset].trim_end_matches(char::is_whitespace);
    trimmed.len()
}

/// Chooses when an action's detour is resolved.
///
/// A fair coin picks the mode. Inline resolves right after the detour (for
/// omissions, after the word that follows it). Retrospective draws the anchor
/// uniformly from the char boundaries after the target, up to the end of its
/// paragraph; an empty range collapses to inline.
pub fn assign_trigger(action: &EditAction, structure: &DocumentStructure, seed: u64) -> TriggerPoint {
    let mut rng = rng_for(seed, stream::TRIGGER, 0);
    let text = &structure.text;
    let target = action.target;
    let paragraph_end = structure
        .paragraph_at(target.start)
        .map(|p| structure.paragraphs[p].end)
        .unwrap_or(text.len())
        .max(target.end);

    let inline_anchor = match action.kind {
        EditKind::Insert => structure
            .words
            .iter()
            .find(|w| w.span.start >= target.end && w.span.end <= paragraph_end)
            .map(|w| w.span.end)
            .unwrap_or(target.end),
        _ => target.end,
    };
    let inline = TriggerPoint {
        mode: TriggerMode::Inline,
        anchor: inline_anchor,
    };

    let retrospective: bool = rng.random_bool(0.5);
    if !retrospective {
        return inline;
    }
    let boundaries: Vec<usize> = text[target.end..paragraph_end]
        .char_indices()
        .map(|(i, c)| target.end + i + c.len_utf8())
        .collect();
    if boundaries.is_empty() {
        return inline;
    }
    let anchor = boundaries[rng.random_range(0..boundaries.len())];
    TriggerPoint {
        mode: TriggerMode::Retrospective,
        anchor,
    }
}

/// Builds the rewrite of a sentence chosen for modification.
fn rewrite_sentence(
    structure: &DocumentStructure,
    sentence: usize,
    rates: &LevelRates,
    lexicon: &Lexicon,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> String {
    let text = &structure.text;
    let span = structure.sentences[sentence].span;
    let mut out = String::with_capacity(span.len() + 16);
    let mut cursor = span.start;
    for w in structure.words_of_sentence(sentence) {
        let word = &structure.words[w];
        if word.sentence_initial {
            continue;
        }
        match rates.draw(rng) {
            Some(EditKind::Delete) => {
                let filler = lexicon.redundant_word(rng);
                out.push_str(&text[cursor..word.span.start]);
                out.push_str(filler);
                out.push(' ');
                cursor = word.span.start;
            }
            Some(EditKind::Insert) => {
                let from = whitespace_before(text, word.span.start).max(cursor);
                out.push_str(&text[cursor..from]);
                cursor = word.span.end;
            }
            Some(EditKind::Modify) => {
                let synonym_seed = derive_seed(seed, stream::SYNONYM, w as u64);
                if let Some(syn) = lexicon.synonym(word.span.slice(text), synonym_seed) {
                    out.push_str(&text[cursor..word.span.start]);
                    out.push_str(&syn);
                    cursor = word.span.end;
                }
            }
            None => {}
        }
    }
    out.push_str(&text[cursor..span.end]);
    out
}

/// Draws a randomized edit plan whose replay converges to `structure.text`.
pub fn plan_edits(
    structure: &DocumentStructure,
    params: &EditingParameters,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<EditPlan, ValidationError> {
    validate_params(params)?;
    let text = &structure.text;
    if params.is_zero() {
        return Ok(EditPlan::unedited(text));
    }
    let mut rng = rng_for(seed, stream::PLAN, 0);
    let mut actions: Vec<EditAction> = Vec::new();
    let placeholder = TriggerPoint {
        mode: TriggerMode::Inline,
        anchor: 0,
    };
    let mut sentence_locked = vec![false; structure.sentence_count()];

    for (s_index, sentence) in structure.sentences.iter().enumerate() {
        let Some(kind) = params.paragraph.draw(&mut rng) else {
            continue;
        };
        let target_span = sentence.span;
        let action = match kind {
            EditKind::Delete => {
                let filler = lexicon.redundant_word(&mut rng);
                Some(EditAction {
                    kind,
                    level: EditLevel::Sentence,
                    target: target_span,
                    detour: format!("{}.", capitalize(filler)),
                    trigger: placeholder,
                })
            }
            EditKind::Insert => {
                let siblings: Vec<usize> = structure.sentences_of_paragraph(sentence.paragraph).collect();
                let trailing = siblings.len() > 1 && siblings.last() == Some(&s_index);
                trailing.then(|| {
                    let prev_end = structure.sentences[s_index - 1].span.end;
                    EditAction {
                        kind,
                        level: EditLevel::Sentence,
                        target: Span::new(prev_end, target_span.end),
                        detour: String::new(),
                        trigger: placeholder,
                    }
                })
            }
            EditKind::Modify => {
                let rewrite = rewrite_sentence(structure, s_index, &params.sentence, lexicon, seed, &mut rng);
                (rewrite != target_span.slice(text)).then_some(EditAction {
                    kind,
                    level: EditLevel::Sentence,
                    target: target_span,
                    detour: rewrite,
                    trigger: placeholder,
                })
            }
        };
        if let Some(a) = action {
            sentence_locked[s_index] = true;
            actions.push(a);
        }
    }

    let mut word_locked = vec![false; structure.word_count()];
    if !params.word.is_zero() {
        for (w_index, word) in structure.words.iter().enumerate() {
            if word.sentence_initial || sentence_locked[word.sentence] {
                continue;
            }
            let Some(kind) = params.word.draw(&mut rng) else {
                continue;
            };
            let word_text = word.span.slice(text);
            let action = match kind {
                EditKind::Delete => Some(EditAction {
                    kind,
                    level: EditLevel::Word,
                    target: word.span,
                    detour: lexicon.redundant_word(&mut rng).to_owned(),
                    trigger: placeholder,
                }),
                EditKind::Insert => Some(EditAction {
                    kind,
                    level: EditLevel::Word,
                    target: Span::new(whitespace_before(text, word.span.start), word.span.end),
                    detour: String::new(),
                    trigger: placeholder,
                }),
                EditKind::Modify => lexicon
                    .synonym(word_text, derive_seed(seed, stream::SYNONYM, w_index as u64))
                    .map(|syn| EditAction {
                        kind,
                        level: EditLevel::Word,
                        target: word.span,
                        detour: syn,
                        trigger: placeholder,
                    }),
            };
            if let Some(a) = action {
                word_locked[w_index] = true;
                actions.push(a);
            }
        }
    }

    if params.character.typo > 0.0 {
        for (w_index, word) in structure.words.iter().enumerate() {
            if word_locked[w_index] || sentence_locked[word.sentence] {
                continue;
            }
            let word_text = word.span.slice(text);
            if !typo_applicable(word_text) {
                continue;
            }
            if !rng.random_bool(params.character.typo) {
                continue;
            }
            if let Ok((detour, _)) = generate_typo(word_text, derive_seed(seed, stream::TYPO, w_index as u64)) {
                actions.push(EditAction {
                    kind: EditKind::Modify,
                    level: EditLevel::Character,
                    target: word.span,
                    detour,
                    trigger: placeholder,
                });
            }
        }
    }

    actions.sort_by_key(|a| a.target.start);
    for (i, a) in actions.iter_mut().enumerate() {
        a.trigger = assign_trigger(a, structure, derive_seed(seed, stream::TRIGGER, i as u64));
    }

    let mut initial = String::with_capacity(text.len() + 32);
    let mut cursor = 0;
    for a in &actions {
        initial.push_str(&text[cursor..a.target.start]);
        initial.push_str(&a.initial_form(text));
        cursor = a.target.end;
    }
    initial.push_str(&text[cursor..]);

    actions.sort_by_key(|a| (a.trigger.anchor, a.target.start));
    Ok(EditPlan {
        initial_text: initial,
        actions,
        final_text: text.clone(),
    })
}
