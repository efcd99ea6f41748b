//! Fixtures shared by the CLI tests and the acceptance run.

#![allow(dead_code)]

use std::path::PathBuf;

use multitier::prelude::*;
use multitier::rng::XorShift64Star;
use multitier::wordlist::{join_segments, Cell, CognateSet};

pub const LANGS: [&str; 3] = ["German", "English", "Dutch"];

pub fn toy_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/toy.tsv")
}

pub fn toy() -> Wordlist {
    parse_wordlist(&std::fs::read_to_string(toy_path()).unwrap()).unwrap()
}

pub fn mtt() -> std::process::Command {
    let mut c = std::process::Command::new(env!("CARGO_BIN_EXE_mtt"));
    c.env_remove("MTT_SEED");
    c
}

/// German (ʃ au s), English (ʃ ou t), Dutch unknown.
pub fn hypothetical() -> CognateSet {
    CognateSet {
        cogid: "HYPO".into(),
        cells: vec![
            Cell::Present(segments("ʃ au s").unwrap()),
            Cell::Present(segments("ʃ ou t").unwrap()),
            Cell::ToPredict,
        ],
    }
}

const CONSONANTS: [&str; 8] = ["p", "t", "k", "m", "n", "s", "l", "r"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Regular, exceptionless sound laws from the proto-language into three
/// daughters. `Late` keeps the proto forms, `Soft` voices stops and
/// lowers mid vowels, `Shift` spirantizes, raises back vowels and drops a
/// word-final vowel.
pub const SYNTHETIC_LANGS: [&str; 3] = ["Late", "Soft", "Shift"];

fn soft(s: &str) -> &str {
    match s {
        "p" => "b",
        "t" => "d",
        "k" => "g",
        "s" => "z",
        "e" => "ɛ",
        "o" => "ɔ",
        other => other,
    }
}

fn shift(s: &str) -> &str {
    match s {
        "p" => "f",
        "k" => "x",
        "s" => "ʃ",
        "o" => "u",
        "u" => "y",
        other => other,
    }
}

/// `n` cognate sets of two- or three-syllable proto words, some with a
/// final consonant, reflected without noise in every daughter.
pub fn synthetic_wordlist(n: usize, seed: u64) -> Wordlist {
    let mut rng = XorShift64Star::new(seed);
    let rows = (0..n)
        .map(|i| {
            let mut proto: Vec<&str> = Vec::new();
            for _ in 0..2 + rng.below(2) {
                proto.push(CONSONANTS[rng.below(CONSONANTS.len())]);
                proto.push(VOWELS[rng.below(VOWELS.len())]);
            }
            if rng.below(3) == 0 {
                proto.push(CONSONANTS[rng.below(CONSONANTS.len())]);
            }
            let late = proto.clone();
            let soft_form: Vec<&str> = proto.iter().map(|s| soft(s)).collect();
            let mut shift_form: Vec<&str> = proto.iter().map(|s| shift(s)).collect();
            if VOWELS.contains(proto.last().unwrap()) {
                shift_form.pop();
            }
            let cell = |v: &[&str]| Cell::Present(segments(&v.join(" ")).unwrap());
            CognateSet {
                cogid: format!("S{i:03}"),
                cells: vec![cell(&late), cell(&soft_form), cell(&shift_form)],
            }
        })
        .collect();
    Wordlist::new(SYNTHETIC_LANGS.map(String::from).to_vec(), rows).unwrap()
}

pub fn show(forms: &[Segment]) -> String {
    join_segments(forms)
}
