//! Four-level segmentation of a response text.
//!
//! A response is split into paragraphs (blank-line separated), sentences
//! (terminal `.`, `!` or `?` followed by whitespace or end of text) and
//! words (whitespace separated tokens with leading and trailing punctuation
//! trimmed). Characters are the Unicode scalar values inside word spans.
//!
//! Fragments that contain no word (a lone `...`, a `---` rule) are folded
//! into a neighbouring sentence or paragraph so every sentence owns at least
//! one word. A text without any word yields an empty structure.
//!
//! Abbreviations such as `e.g.` are not special-cased and will end a
//! sentence when followed by whitespace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-open byte range into the segmented text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub span: Span,
    pub paragraph: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub span: Span,
    pub sentence: usize,
    pub sentence_initial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentStructure {
    pub text: String,
    pub paragraphs: Vec<Span>,
    pub sentences: Vec<SentenceSpan>,
    pub words: Vec<WordSpan>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("{level} span {index} ({start}..{end}) is outside the text or not on a char boundary")]
    OutOfBounds {
        level: &'static str,
        index: usize,
        start: usize,
        end: usize,
    },
    #[error("{level} span {index} overlaps or precedes its predecessor")]
    Unordered { level: &'static str, index: usize },
    #[error("{level} span {index} has invalid parent {parent}")]
    BadParent {
        level: &'static str,
        index: usize,
        parent: usize,
    },
    #[error("sentence {sentence} has {count} sentence-initial words, expected 1 on its first word")]
    InitialFlag { sentence: usize, count: usize },
    #[error("{level} span {index} is empty")]
    Empty { level: &'static str, index: usize },
}

impl DocumentStructure {
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn paragraph_count(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn word_text(&self, index: usize) -> &str {
        self.words[index].span.slice(&self.text)
    }

    pub fn sentence_text(&self, index: usize) -> &str {
        self.sentences[index].span.slice(&self.text)
    }

    /// Indices of the words belonging to `sentence`, in order.
    pub fn words_of_sentence(&self, sentence: usize) -> impl Iterator<Item = usize> + '_ {
        self.words
            .iter()
            .enumerate()
            .filter(move |(_, w)| w.sentence == sentence)
            .map(|(i, _)| i)
    }

    /// Indices of the sentences belonging to `paragraph`, in order.
    pub fn sentences_of_paragraph(&self, paragraph: usize) -> impl Iterator<Item = usize> + '_ {
        self.sentences
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.paragraph == paragraph)
            .map(|(i, _)| i)
    }

    /// Paragraph whose span contains the byte offset, if any.
    pub fn paragraph_at(&self, offset: usize) -> Option<usize> {
        self.paragraphs
            .iter()
            .position(|p| p.start <= offset && offset < p.end)
    }

    /// Checks every structural invariant.
    pub fn check(&self) -> Result<(), StructureError> {
        let text = &self.text;
        let in_bounds = |s: &Span| {
            s.start <= s.end
                && s.end <= text.len()
                && text.is_char_boundary(s.start)
                && text.is_char_boundary(s.end)
        };

        let mut prev_end = 0;
        for (index, p) in self.paragraphs.iter().enumerate() {
            if !in_bounds(p) {
                return Err(StructureError::OutOfBounds {
                    level: "paragraph",
                    index,
                    start: p.start,
                    end: p.end,
                });
            }
            if p.is_empty() {
                return Err(StructureError::Empty {
                    level: "paragraph",
                    index,
                });
            }
            if index > 0 && p.start < prev_end {
                return Err(StructureError::Unordered {
                    level: "paragraph",
                    index,
                });
            }
            prev_end = p.end;
        }

        prev_end = 0;
        for (index, s) in self.sentences.iter().enumerate() {
            if !in_bounds(&s.span) {
                return Err(StructureError::OutOfBounds {
                    level: "sentence",
                    index,
                    start: s.span.start,
                    end: s.span.end,
                });
            }
            if s.span.is_empty() {
                return Err(StructureError::Empty {
                    level: "sentence",
                    index,
                });
            }
            if index > 0 && s.span.start < prev_end {
                return Err(StructureError::Unordered {
                    level: "sentence",
                    index,
                });
            }
            let parent_ok = self
                .paragraphs
                .get(s.paragraph)
                .is_some_and(|p| p.contains(&s.span));
            if !parent_ok {
                return Err(StructureError::BadParent {
                    level: "sentence",
                    index,
                    parent: s.paragraph,
                });
            }
            prev_end = s.span.end;
        }

        prev_end = 0;
        let mut initial_counts = vec![0usize; self.sentences.len()];
        let mut first_word_seen = vec![false; self.sentences.len()];
        for (index, w) in self.words.iter().enumerate() {
            if !in_bounds(&w.span) {
                return Err(StructureError::OutOfBounds {
                    level: "word",
                    index,
                    start: w.span.start,
                    end: w.span.end,
                });
            }
            if w.span.is_empty() {
                return Err(StructureError::Empty {
                    level: "word",
                    index,
                });
            }
            if index > 0 && w.span.start < prev_end {
                return Err(StructureError::Unordered {
                    level: "word",
                    index,
                });
            }
            let parent_ok = self
                .sentences
                .get(w.sentence)
                .is_some_and(|s| s.span.contains(&w.span));
            if !parent_ok {
                return Err(StructureError::BadParent {
                    level: "word",
                    index,
                    parent: w.sentence,
                });
            }
            let is_first = !first_word_seen[w.sentence];
            first_word_seen[w.sentence] = true;
            if w.sentence_initial {
                initial_counts[w.sentence] += 1;
                if !is_first {
                    return Err(StructureError::InitialFlag {
                        sentence: w.sentence,
                        count: initial_counts[w.sentence],
                    });
                }
            }
            prev_end = w.span.end;
        }
        for (sentence, count) in initial_counts.into_iter().enumerate() {
            if count != 1 {
                return Err(StructureError::InitialFlag { sentence, count });
            }
        }
        Ok(())
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Byte ranges of blank-line separated blocks, trimmed of surrounding whitespace.
fn paragraph_blocks(text: &str) -> Vec<Span> {
    let mut blocks = Vec::new();
    let mut block_start: Option<usize> = None;
    let mut last_non_ws_end = 0;
    let mut newlines_in_gap = 0;

    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if c == '\n' {
                newlines_in_gap += 1;
            }
            continue;
        }
        match block_start {
            None => block_start = Some(i),
            Some(start) if newlines_in_gap >= 2 => {
                blocks.push(Span::new(start, last_non_ws_end));
                block_start = Some(i);
            }
            Some(_) => {}
        }
        newlines_in_gap = 0;
        last_non_ws_end = i + c.len_utf8();
    }
    if let Some(start) = block_start {
        blocks.push(Span::new(start, last_non_ws_end));
    }
    blocks
}

/// Sentence candidates inside a paragraph block.
fn sentence_candidates(text: &str, block: Span) -> Vec<Span> {
    let body = block.slice(text);
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = body.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(i);
        }
        let next = chars.peek().map(|&(_, n)| n);
        let boundary = is_terminal(c) && next.is_none_or(char::is_whitespace);
        if boundary {
            let s = start.take().expect("sentence start set above");
            out.push(Span::new(block.start + s, block.start + i + c.len_utf8()));
        }
    }
    if let Some(s) = start {
        let tail = body[s..].trim_end();
        out.push(Span::new(block.start + s, block.start + s + tail.len()));
    }
    out
}

/// Word spans inside a sentence: whitespace tokens with outer punctuation removed.
fn word_spans(text: &str, sentence: Span) -> Vec<Span> {
    let body = sentence.slice(text);
    let mut out = Vec::new();
    let mut offset = 0;
    for token in body.split_whitespace() {
        let token_start = offset + body[offset..].find(token).expect("token comes from body");
        offset = token_start + token.len();
        let lead = token.len() - token.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            continue;
        }
        let s = sentence.start + token_start + lead;
        out.push(Span::new(s, s + trimmed.len()));
    }
    out
}

/// A sentence span with its word spans.
type SentenceWords = (Span, Vec<Span>);

/// Splits `text` into paragraphs, sentences, and words.
pub fn segment(text: &str) -> DocumentStructure {
    let mut blocks: Vec<(Span, Vec<SentenceWords>)> = Vec::new();

    for block in paragraph_blocks(text) {
        let mut sentences: Vec<SentenceWords> = Vec::new();
        // Word-less candidates waiting to be merged into the next sentence.
        let mut pending_start: Option<usize> = None;
        for cand in sentence_candidates(text, block) {
            let words = word_spans(text, cand);
            if words.is_empty() {
                match sentences.last_mut() {
                    Some((span, _)) => span.end = cand.end,
                    None => {
                        pending_start.get_or_insert(cand.start);
                    }
                }
                continue;
            }
            let start = pending_start.take().unwrap_or(cand.start);
            sentences.push((Span::new(start, cand.end), words));
        }

        if sentences.is_empty() {
            // Word-less paragraph: fold into the previous paragraph when there is one,
            // otherwise remember it and fold it into the next.
            match blocks.last_mut() {
                Some((span, prev)) => {
                    span.end = block.end;
                    if let Some((last, _)) = prev.last_mut() {
                        last.end = block.end;
                    }
                }
                None => blocks.push((block, Vec::new())),
            }
            continue;
        }
        if let Some(start) = pending_start {
            sentences[0].0.start = start;
        }
        match blocks.last_mut() {
            Some((span, prev)) if prev.is_empty() => {
                // Leading word-less paragraph merges forward.
                let merged_start = span.start;
                *span = Span::new(merged_start, block.end);
                sentences[0].0.start = merged_start;
                *prev = sentences;
            }
            _ => blocks.push((block, sentences)),
        }
    }
    blocks.retain(|(_, s)| !s.is_empty());

    let mut structure = DocumentStructure {
        text: text.to_owned(),
        paragraphs: Vec::with_capacity(blocks.len()),
        sentences: Vec::new(),
        words: Vec::new(),
    };
    for (p_index, (p_span, sentences)) in blocks.into_iter().enumerate() {
        structure.paragraphs.push(p_span);
        for (s_span, words) in sentences {
            let s_index = structure.sentences.len();
            structure.sentences.push(SentenceSpan {
                span: s_span,
                paragraph: p_index,
            });
            for (w_i, w_span) in words.into_iter().enumerate() {
                structure.words.push(WordSpan {
                    span: w_span,
                    sentence: s_index,
                    sentence_initial: w_i == 0,
                });
            }
        }
    }
    structure
}

/// Rebuilds the text from its structure.
///
/// Separators between paragraph spans (and before/after them) are copied
/// verbatim, so the result equals the original input of [`segment`].
pub fn flatten(structure: &DocumentStructure) -> Result<String, StructureError> {
    structure.check()?;
    let text = &structure.text;
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for p in &structure.paragraphs {
        out.push_str(&text[cursor..p.start]);
        out.push_str(p.slice(text));
        cursor = p.end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

/// Number of words and sentences in `text`.
pub fn counts(text: &str) -> (usize, usize) {
    let s = segment(text);
    (s.word_count(), s.sentence_count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &DocumentStructure) -> Vec<&str> {
        (0..s.word_count()).map(|i| s.word_text(i)).collect()
    }

    #[test]
    fn empty_text() {
        let s = segment("");
        assert_eq!((s.paragraph_count(), s.sentence_count(), s.word_count()), (0, 0, 0));
        assert_eq!(flatten(&s).unwrap(), "");
    }

    #[test]
    fn two_sentences_one_paragraph() {
        let s = segment("Hi there. How are you?");
        assert_eq!(s.paragraph_count(), 1);
        assert_eq!(s.sentence_count(), 2);
        assert_eq!(words(&s), ["Hi", "there", "How", "are", "you"]);
        let flagged: Vec<&str> = s
            .words
            .iter()
            .filter(|w| w.sentence_initial)
            .map(|w| w.span.slice(&s.text))
            .collect();
        assert_eq!(flagged, ["Hi", "How"]);
        assert_eq!(s.sentence_text(0), "Hi there.");
        assert_eq!(s.sentence_text(1), "How are you?");
    }

    #[test]
    fn blank_line_paragraphs() {
        let s = segment("I love tennis!\n\nMe too.");
        assert_eq!(s.paragraph_count(), 2);
        assert_eq!(s.sentence_count(), 2);
        assert_eq!(s.sentences[1].paragraph, 1);
    }

    #[test]
    fn single_newline_does_not_split_paragraph() {
        let s = segment("Line one\nline two.");
        assert_eq!(s.paragraph_count(), 1);
        assert_eq!(s.sentence_count(), 1);
        assert_eq!(s.word_count(), 4);
    }

    #[test]
    fn punctuation_is_trimmed_from_words() {
        let s = segment("Well, \"quoted\" (aside) don't-stop...");
        assert_eq!(words(&s), ["Well", "quoted", "aside", "don't-stop"]);
    }

    #[test]
    fn terminal_without_whitespace_is_not_a_boundary() {
        let s = segment("Version 1.5 is out. Try it");
        assert_eq!(s.sentence_count(), 2);
        assert_eq!(s.sentence_text(1), "Try it");
    }

    #[test]
    fn ellipsis_run_ends_once() {
        let s = segment("Hmm... maybe?! Sure.");
        assert_eq!(s.sentence_count(), 3);
        assert_eq!(s.sentence_text(0), "Hmm...");
        assert_eq!(s.sentence_text(1), "maybe?!");
    }

    #[test]
    fn wordless_fragments_fold_into_neighbours() {
        let s = segment("... Hello there. !!! Bye.\n\n---\n\nNext.");
        s.check().unwrap();
        assert_eq!(s.sentence_count(), 3);
        assert_eq!(s.sentence_text(0), "... Hello there. !!!");
        assert_eq!(s.paragraph_count(), 2);
        assert_eq!(flatten(&s).unwrap(), s.text);

        let lead = segment("***\n\nHi.");
        lead.check().unwrap();
        assert_eq!(lead.paragraph_count(), 1);
        assert_eq!(lead.sentence_text(0), "***\n\nHi.");
    }

    #[test]
    fn wordless_text_is_empty_structure() {
        let s = segment("?! ...");
        assert_eq!(s.sentence_count(), 0);
        assert_eq!(flatten(&s).unwrap(), "?! ...");
    }

    #[test]
    fn unicode_words() {
        let s = segment("Café naïve — über. 日本語 ok!");
        s.check().unwrap();
        assert_eq!(words(&s), ["Café", "naïve", "über", "日本語", "ok"]);
    }

    #[test]
    fn flatten_rejects_inconsistent_spans() {
        let mut s = segment("Hi there. How are you?");
        s.words[1].span = Span::new(0, 4);
        assert!(matches!(flatten(&s), Err(StructureError::Unordered { level: "word", .. })));

        let mut s = segment("Hi there. How are you?");
        s.words[2].sentence_initial = false;
        assert!(matches!(flatten(&s), Err(StructureError::InitialFlag { sentence: 1, count: 0 })));

        let mut s = segment("Hi there.");
        s.paragraphs[0].end = 100;
        assert!(matches!(flatten(&s), Err(StructureError::OutOfBounds { .. })));
    }
}
