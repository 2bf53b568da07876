//! Invariants over randomly generated texts, parameters and seeds.

use std::sync::LazyLock;

use proptest::prelude::*;
use typesim_core::analyzer::fit_regression;
use typesim_core::lexicon::Lexicon;
use typesim_core::planner::{plan_edits, validate_params, CharacterRates, EditingParameters, LevelRates};
use typesim_core::scheduler::{apply_trace, schedule, Pace, TemporalParameters};
use typesim_core::segmenter::{flatten, segment};
use typesim_core::simulate;
use typesim_core::typo::{generate_typo, typo_applicable};

static LEXICON: LazyLock<Lexicon> = LazyLock::new(Lexicon::bundled);

const WORDS: &[&str] = &[
    "i", "really", "enjoy", "tennis", "and", "coffee", "with", "friends", "on", "the", "weekend", "good",
    "great", "fun", "city", "always", "evening", "book", "dog", "cook", "happy", "it's", "don't", "well,",
    "café", "naïve", "42", "so", "much", "very", "amazing", "family", "food", "favorite", "travel", "zoë",
];

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn sentence() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(prop::sample::select(WORDS), 1..12),
        prop::sample::select(&[".", "!", "?", "...", ""][..]),
    )
        .prop_map(|(words, end)| {
            let mut s = capitalize(words[0]);
            for w in &words[1..] {
                s.push(' ');
                s.push_str(w);
            }
            s.push_str(end);
            s
        })
}

/// Replies of at most 4 paragraphs of 4 sentences of 11 words (≤ 176 words).
fn reply() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(sentence(), 1..5), 0..5)
        .prop_map(|ps| ps.iter().map(|p| p.join(" ")).collect::<Vec<_>>().join("\n\n"))
}

fn level() -> impl Strategy<Value = LevelRates> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..=1.0f64, any::<bool>()).prop_map(|(a, b, c, scale, off)| {
        let sum = a + b + c;
        if off || sum == 0.0 {
            LevelRates::default()
        } else {
            let k = scale / sum;
            LevelRates::new(a * k * 0.999_999, b * k * 0.999_999, c * k * 0.999_999)
        }
    })
}

fn editing() -> impl Strategy<Value = EditingParameters> {
    (level(), level(), level(), 0.0..=1.0f64).prop_map(|(paragraph, sentence, word, typo)| EditingParameters {
        paragraph,
        sentence,
        word,
        character: CharacterRates { typo },
    })
}

fn pace(max_mean: f64, max_std: f64) -> impl Strategy<Value = Pace> {
    (0.0..max_mean, prop_oneof![Just(0.0), 0.0..max_std]).prop_map(|(m, s)| Pace::new(m, s))
}

fn temporal() -> impl Strategy<Value = TemporalParameters> {
    (pace(200.0, 80.0), pace(300.0, 100.0), pace(150.0, 50.0), pace(60.0, 20.0), 0.0..=1.0f64, pace(3.0, 1.0)).prop_map(
        |(c, s, d, m, pause_rate, think)| TemporalParameters {
            character_typing_pace: c,
            space_lag_pace: s,
            character_deletion_pace: d,
            cursor_move_speed: m,
            pause_rate,
            thinking_time: think,
        },
    )
}

/// Optimal string alignment distance over chars.
fn osa(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
            }
        }
    }
    d[a.len()][b.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn flatten_inverts_segment(text in "[ -~\n]{0,200}") {
        let doc = segment(&text);
        prop_assert_eq!(flatten(&doc).unwrap(), text);
        doc.check().unwrap();
    }

    #[test]
    fn one_initial_word_per_sentence(text in reply()) {
        let doc = segment(&text);
        for s in 0..doc.sentence_count() {
            let flags: Vec<bool> = doc.words_of_sentence(s).map(|w| doc.words[w].sentence_initial).collect();
            prop_assert!(!flags.is_empty());
            prop_assert!(flags[0]);
            prop_assert_eq!(flags.iter().filter(|f| **f).count(), 1);
        }
        for w in &doc.words {
            prop_assert!(doc.sentences[w.sentence].span.contains(&w.span));
        }
    }

    #[test]
    fn typos_are_one_edit_away(word in "[a-zA-Z]{2,14}", seed in any::<u64>()) {
        prop_assume!(typo_applicable(&word));
        let (detour, fin) = generate_typo(&word, seed).unwrap();
        prop_assert_eq!(&fin, &word);
        prop_assert_eq!(osa(&detour, &fin), 1, "{} -> {}", detour, fin);
    }

    #[test]
    fn pipeline_replays_to_the_reply(text in reply(), e in editing(), t in temporal(), seed in any::<u64>()) {
        let plan = plan_edits(&segment(&text), &e, &LEXICON, seed).unwrap();
        prop_assert_eq!(&plan.final_text, &text);
        prop_assert_eq!(plan.replay().unwrap(), text.clone());
        let trace = schedule(&plan, &t, seed).unwrap().trace;
        prop_assert_eq!(apply_trace(&trace.events).unwrap(), text);
        prop_assert!(trace.events.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn targets_are_pairwise_disjoint(text in reply(), e in editing(), seed in any::<u64>()) {
        let plan = plan_edits(&segment(&text), &e, &LEXICON, seed).unwrap();
        let mut spans: Vec<(usize, usize)> = plan.actions.iter().map(|a| (a.target.start, a.target.end)).collect();
        spans.sort();
        for w in spans.windows(2) {
            prop_assert!(w[0].1 <= w[1].0, "{:?} overlaps {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn rate_sums_above_one_rejected(a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64, which in 0..3usize) {
        prop_assume!(a + b + c > 1.0 + 1e-6);
        let rates = LevelRates::new(a, b, c);
        let mut p = EditingParameters::default();
        match which {
            0 => p.paragraph = rates,
            1 => p.sentence = rates,
            _ => p.word = rates,
        }
        prop_assert!(validate_params(&p).is_err());
        prop_assert!(plan_edits(&segment("Hello there friend."), &p, &LEXICON, 1).is_err());
    }

    #[test]
    fn simulate_is_deterministic(text in reply(), e in editing(), t in temporal(), seed in any::<u64>()) {
        let a = simulate(&text, &t, &e, &LEXICON, seed).unwrap();
        let b = simulate(&text, &t, &e, &LEXICON, seed).unwrap();
        prop_assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
    }

    #[test]
    fn regression_is_order_free_and_bounded(
        points in prop::collection::vec((0.0..200.0f64, -50.0..300.0f64), 2..60).prop_shuffle(),
    ) {
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        match (fit_regression(&points), fit_regression(&sorted)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((0.0..=1.0).contains(&a.r_squared));
                prop_assert!((a.slope - b.slope).abs() <= 1e-9 * (1.0 + a.slope.abs()));
                prop_assert!((a.intercept - b.intercept).abs() <= 1e-7 * (1.0 + a.intercept.abs()));
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
