//! Keyboard-adjacent typo synthesis.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::seed::{rng_for, stream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypoError {
    #[error("typo not applicable to {0:?}: needs at least two alphabetic characters")]
    NotApplicable(String),
}

/// Neighbouring keys per lowercase letter.
#[derive(Debug, Clone)]
pub struct KeyboardLayout {
    neighbors: BTreeMap<char, Vec<char>>,
}

impl KeyboardLayout {
    /// Builds adjacency from staggered rows, each shifted right of the one above.
    pub fn from_rows(rows: &[&str]) -> Self {
        let grid: Vec<Vec<char>> = rows.iter().map(|r| r.chars().collect()).collect();
        let mut neighbors: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for (r, row) in grid.iter().enumerate() {
            for (i, &key) in row.iter().enumerate() {
                let mut adj = Vec::new();
                if i > 0 {
                    adj.push(row[i - 1]);
                }
                if let Some(&right) = row.get(i + 1) {
                    adj.push(right);
                }
                if r > 0 {
                    let above = &grid[r - 1];
                    adj.extend([above.get(i), above.get(i + 1)].into_iter().flatten());
                }
                if let Some(below) = grid.get(r + 1) {
                    let left = i.checked_sub(1).and_then(|j| below.get(j));
                    adj.extend([left, below.get(i)].into_iter().flatten());
                }
                adj.retain(|&c| c != key);
                adj.dedup();
                neighbors.insert(key, adj);
            }
        }
        KeyboardLayout { neighbors }
    }

    pub fn qwerty() -> Self {
        Self::from_rows(&["qwertyuiop", "asdfghjkl", "zxcvbnm"])
    }

    pub fn neighbors(&self, key: char) -> &[char] {
        let lower = key.to_lowercase().next().unwrap_or(key);
        self.neighbors.get(&lower).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
pub struct TypoModel {
    pub layout: KeyboardLayout,
    /// Chance of a transposition rather than a substitution.
    pub transposition_share: f64,
}

impl Default for TypoModel {
    fn default() -> Self {
        TypoModel {
            layout: KeyboardLayout::qwerty(),
            transposition_share: 0.3,
        }
    }
}

fn with_case_of(model: char, c: char) -> char {
    if model.is_uppercase() {
        c.to_uppercase().next().unwrap_or(c)
    } else {
        c
    }
}

impl TypoModel {
    fn edit_sites(&self, chars: &[char]) -> (Vec<usize>, Vec<usize>) {
        let subs = (0..chars.len())
            .filter(|&i| !self.layout.neighbors(chars[i]).is_empty())
            .collect();
        let swaps = (0..chars.len().saturating_sub(1))
            .filter(|&i| chars[i] != chars[i + 1])
            .collect();
        (subs, swaps)
    }

    pub fn applicable(&self, word: &str) -> bool {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() < 2 || !chars.iter().all(|c| c.is_alphabetic()) {
            return false;
        }
        let (subs, swaps) = self.edit_sites(&chars);
        !subs.is_empty() || !swaps.is_empty()
    }

    /// Returns `(detour, final)`: the word with one adjacent-key substitution or
    /// one adjacent transposition, and the word itself.
    pub fn generate(&self, word: &str, seed: u64) -> Result<(String, String), TypoError> {
        if !self.applicable(word) {
            return Err(TypoError::NotApplicable(word.to_owned()));
        }
        let mut chars: Vec<char> = word.chars().collect();
        let (subs, swaps) = self.edit_sites(&chars);
        let mut rng = rng_for(seed, stream::TYPO, 0);
        let transpose = !swaps.is_empty() && (subs.is_empty() || rng.random_bool(self.transposition_share));
        if transpose {
            let i = swaps[rng.random_range(0..swaps.len())];
            chars.swap(i, i + 1);
        } else {
            let i = subs[rng.random_range(0..subs.len())];
            let options = self.layout.neighbors(chars[i]);
            let pick = options[rng.random_range(0..options.len())];
            chars[i] = with_case_of(chars[i], pick);
        }
        Ok((chars.into_iter().collect(), word.to_owned()))
    }
}

pub fn typo_applicable(word: &str) -> bool {
    TypoModel::default().applicable(word)
}

/// Typo with the default QWERTY model.
pub fn generate_typo(word: &str, seed: u64) -> Result<(String, String), TypoError> {
    TypoModel::default().generate(word, seed)
}
