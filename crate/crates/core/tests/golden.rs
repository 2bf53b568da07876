//! Committed traces for each preset. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;

use typesim_core::lexicon::Lexicon;
use typesim_core::runtime::{preset, Preset};
use typesim_core::scheduler::{apply_trace, EventTrace};
use typesim_core::simulate;

const REPLY: &str = "I actually love playing tennis on weekends. It is a great way to relax, \
                     and my friends usually join me at the park near the river.";
const SEED: u64 = 20_240_611;

fn check(color: Preset) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{}.jsonl", color.name()));
    let config = preset(color);
    let trace = simulate(REPLY, &config.temporal, &config.editing, &Lexicon::bundled(), SEED)
        .unwrap()
        .trace;
    let fresh = trace.to_jsonl();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &fresh).unwrap();
    }
    let committed = std::fs::read_to_string(&path).expect("golden trace present; run with UPDATE_GOLDEN=1");
    assert_eq!(committed, fresh, "{} drifted", path.display());
    let parsed = EventTrace::from_jsonl(&committed).unwrap();
    assert_eq!(parsed, trace);
    assert_eq!(apply_trace(&parsed.events).unwrap(), REPLY);
}

#[test]
fn blue() {
    check(Preset::Blue);
}

#[test]
fn green() {
    check(Preset::Green);
}

#[test]
fn red() {
    check(Preset::Red);
}
