#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phrase_probe::rng::SplitMix64;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phrase-probe"))
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn phrase-probe");
    assert!(
        out.status.success(),
        "phrase-probe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// A relatedness file in the BiRD column layout: `n_abba` mirror-image
/// pairs, then `n_other` pairs that share at most one word.
pub fn synthetic_bird(dir: &Path, n_abba: usize, n_other: usize, seed: u64) -> PathBuf {
    let mut rng = SplitMix64::new(seed);
    let mut text = String::from("pair\tterm1\tterm2\trelation\trelatedness score\n");
    for i in 0..n_abba {
        let (a, b) = (format!("left{i}"), format!("right{i}"));
        let score = (rng.next_f64() * 1000.0).round() / 1000.0;
        let _ = writeln!(text, "{a} {b}-{b} {a}\t{a} {b}\t{b} {a}\tmirror\t{score}");
    }
    for i in 0..n_other {
        let (a, b, c) = (format!("left{i}"), format!("other{i}"), format!("third{i}"));
        let score = (rng.next_f64() * 1000.0).round() / 1000.0;
        let _ = writeln!(text, "x\t{a} {b}\t{a} {c}\tshared\t{score}");
    }
    let path = dir.join("bird.tsv");
    fs::write(&path, text).unwrap();
    path
}

/// Sentence pairs in the PAWS column layout built by swapping two words.
/// Positives swap neighbours; negatives swap words far apart.
pub fn synthetic_paws(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let mut rng = SplitMix64::new(seed);
    let mut text = String::from("id\tsentence1\tsentence2\tlabel\n");
    for k in 0..n {
        let len = 8 + rng.below(8);
        let words: Vec<String> = (0..len).map(|i| format!("t{k}w{i}")).collect();
        let label = u8::from(rng.next_f64() < 0.5);
        let i = rng.below(2);
        let gap = if label == 1 { 1 + rng.below(2) } else { len / 2 + rng.below(len / 2 - 1) };
        let j = (i + gap).min(len - 1);
        let mut swapped = words.clone();
        swapped.swap(i, j);
        let _ = writeln!(text, "{}\t{}\t{}\t{label}", k + 1, words.join(" "), swapped.join(" "));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}
