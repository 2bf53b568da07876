//! Distributional checks on the seeded samplers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use typesim_core::lexicon::Lexicon;
use typesim_core::planner::{assign_trigger, EditAction, EditKind, EditLevel, EditingParameters, TriggerMode, TriggerPoint};
use typesim_core::runtime::{preset, Preset};
use typesim_core::scheduler::{sample_delay, Pace};
use typesim_core::segmenter::segment;
use typesim_core::simulate;

fn chi_square_p(observed: &[u64], expected: f64) -> f64 {
    let stat: f64 = observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn delay_mean_and_std() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let xs: Vec<f64> = (0..10_000).map(|_| sample_delay(&Pace::new(100.0, 20.0), &mut rng)).collect();
    let (mean, std) = moments(&xs);
    assert!((mean - 100.0).abs() <= 2.0, "mean {mean}");
    assert!((std - 20.0).abs() <= 1.0, "std {std}");
    assert!(xs.iter().all(|x| *x >= 0.0));
}

#[test]
fn heavy_truncation_stays_non_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    assert!((0..10_000).all(|_| sample_delay(&Pace::new(0.0, 50.0), &mut rng) >= 0.0));
    assert_eq!(sample_delay(&Pace::new(100.0, 0.0), &mut rng), 100.0);
}

#[test]
fn retrospective_anchors_are_uniform() {
    let text = "We went to the beach and it was lovely. The water was warm and clear, \
                and we stayed until the sun went down over the hills. Then we walked home slowly.";
    let doc = segment(text);
    let target = doc.words[1].span;
    let action = EditAction {
        kind: EditKind::Modify,
        level: EditLevel::Word,
        target,
        detour: "strolled".into(),
        trigger: TriggerPoint {
            mode: TriggerMode::Inline,
            anchor: 0,
        },
    };
    let range = target.end + 1..=text.len();
    let mut bins = vec![0u64; text.len() - target.end];
    let mut retrospective = 0u64;
    let n = 10_000u64;
    for seed in 0..n {
        let t = assign_trigger(&action, &doc, seed);
        match t.mode {
            TriggerMode::Inline => assert_eq!(t.anchor, target.end),
            TriggerMode::Retrospective => {
                assert!(range.contains(&t.anchor));
                bins[t.anchor - target.end - 1] += 1;
                retrospective += 1;
            }
        }
    }
    // The mode is a fair coin.
    let half = n as f64 / 2.0;
    assert!((retrospective as f64 - half).abs() <= 3.0 * (n as f64 * 0.25).sqrt());
    let p = chi_square_p(&bins, retrospective as f64 / bins.len() as f64);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn filler_draws_are_uniform() {
    let library: Vec<String> = (0..100).map(|i| format!("filler{i}")).collect();
    let lex = Lexicon::new(library.clone(), Default::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut counts = vec![0u64; 100];
    for _ in 0..10_000 {
        let w = lex.redundant_word(&mut rng);
        counts[library.iter().position(|l| l == w).unwrap()] += 1;
    }
    let p = chi_square_p(&counts, 100.0);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn green_pauses_on_thirty_words() {
    let text = "I have been playing tennis for a few years now and I really enjoy it. \
                My favorite part is playing doubles with friends on a bright and sunny weekend morning.";
    assert_eq!(text.split_whitespace().count(), 30);
    let mut green = preset(Preset::Green);
    green.temporal.pause_rate = 0.3;
    let lex = Lexicon::bundled();
    for seed in 0..200 {
        let trace = simulate(text, &green.temporal, &EditingParameters::default(), &lex, seed).unwrap().trace;
        assert!(trace.count("pause") >= 1, "seed {seed}");
        assert_eq!(trace.count("delete") + trace.count("move"), 0);
    }
}

#[test]
fn typo_rate_matches_over_applicable_words() {
    let lex = Lexicon::bundled();
    let mut editing = EditingParameters::default();
    editing.character.typo = 0.1;
    let text = "Sunny mornings bring gentle breezes across quiet meadows where children gather flowers happily. ";
    let body = text.repeat(20);
    let doc = segment(body.trim_end());
    let applicable = doc
        .words
        .iter()
        .filter(|w| typesim_core::typo::typo_applicable(w.span.slice(&doc.text)))
        .count() as u64;
    let mut hits = 0u64;
    let runs = 50u64;
    for seed in 0..runs {
        let plan = typesim_core::planner::plan_edits(&doc, &editing, &lex, seed).unwrap();
        hits += plan.actions.iter().filter(|a| a.level == EditLevel::Character).count() as u64;
        assert!(plan
            .actions
            .iter()
            .all(|a| doc.words.iter().any(|w| w.span == a.target)));
    }
    let n = (applicable * runs) as f64;
    let band = 3.0 * (n * 0.1 * 0.9).sqrt();
    assert!((hits as f64 - n * 0.1).abs() <= band, "{hits} of {n}");
}
