//! Synthetic replies with known structure.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use typesim_core::lexicon::Lexicon;

pub const VOCAB: &[&str] = &[
    "tennis", "weather", "coffee", "garden", "music", "river", "window", "morning", "market", "letter",
    "travel", "dinner", "friend", "summer", "school", "city", "movie", "island", "forest", "story",
    "kitchen", "bright", "quiet", "simple", "happy", "really", "often", "maybe", "usually", "always",
    "play", "watch", "enjoy", "visit", "cook", "read", "write", "walk", "think", "learn",
    "the", "a", "my", "your", "with", "from", "about", "under", "near", "every",
    "weekend", "evening", "holiday", "project", "picture", "planet", "village", "season", "journey", "puzzle",
];

pub const ENDINGS: &[&str] = &[".", "!", "?"];

/// A reply plus the byte offsets of its sentence-initial words.
#[derive(Debug, Clone)]
pub struct Reply {
    pub text: String,
    pub initial_words: Vec<usize>,
    pub words: usize,
}

impl Reply {
    pub fn eligible_words(&self) -> usize {
        self.words - self.initial_words.len()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

/// `sentences` sentences of `min_words..=max_words` words each.
pub fn reply<R: Rng>(rng: &mut R, sentences: usize, min_words: usize, max_words: usize) -> Reply {
    let mut text = String::new();
    let mut initial_words = Vec::new();
    let mut words = 0;
    for s in 0..sentences {
        if s > 0 {
            text.push(' ');
        }
        initial_words.push(text.len());
        let n = rng.random_range(min_words..=max_words);
        for w in 0..n {
            let word = *VOCAB.choose(rng).unwrap();
            if w == 0 {
                text.push_str(&capitalize(word));
            } else {
                text.push(' ');
                text.push_str(word);
            }
        }
        words += n;
        text.push_str(ENDINGS.choose(rng).unwrap());
    }
    Reply {
        text,
        initial_words,
        words,
    }
}

/// Fillers plus a synonym for every vocabulary word, so modifications never
/// miss.
pub fn full_lexicon() -> Lexicon {
    let synonyms: BTreeMap<String, Vec<String>> = VOCAB
        .iter()
        .map(|w| (w.to_string(), vec![format!("{w}ish"), format!("re{w}")]))
        .collect();
    Lexicon::new(vec!["um".into(), "actually".into(), "basically".into()], synonyms).unwrap()
}
