//! Dataset loading and overlap-controlled evaluation-set construction.
//!
//! Loaders read the public releases of the four dataset families (bigram
//! relatedness pairs, paraphrase phrase pairs, adversarial sentence pairs,
//! and the sentiment treebank). Filters build the controlled sets: mirror
//! `AB`/`BA` pairs and pairs with an exact word-overlap fraction.
//!
//! Prepared datasets are stored as JSON lines: one [`DatasetManifest`]
//! object followed by one object per item.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabeledPhrase, Phrase, PhrasePair, SentencePair};
use crate::rng::SplitMix64;

const OVERLAP_TOLERANCE: f64 = 1e-12;

/// A header row plus data rows with their 1-based line numbers.
struct Tsv {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Tsv {
    fn column(&self, path: &Path, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_owned(),
                column: name.to_owned(),
            })
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let line = if i == 0 { line.trim_start_matches('\u{feff}') } else { line };
        out.push((i + 1, line.to_owned()));
    }
    Ok(out)
}

fn read_tsv(path: &Path) -> Result<Tsv> {
    let mut lines = read_lines(path)?.into_iter();
    let header = match lines.next() {
        Some((_, h)) => h.split('\t').map(|s| s.trim().to_owned()).collect(),
        None => return Err(Error::record(path, 1, "missing header row")),
    };
    let rows = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (n, l.split('\t').map(str::to_owned).collect()))
        .collect();
    Ok(Tsv { header, rows })
}

/// Column names of a bigram-relatedness file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BirdColumns {
    pub source: String,
    pub target: String,
    pub score: String,
}

impl Default for BirdColumns {
    fn default() -> Self {
        Self {
            source: "term1".into(),
            target: "term2".into(),
            score: "relatedness score".into(),
        }
    }
}

/// Loads scored phrase pairs from a tab-separated file with a header row.
/// Pair ids are the 0-based data row index.
pub fn load_bird(path: &Path, columns: &BirdColumns) -> Result<Vec<PhrasePair>> {
    let tsv = read_tsv(path)?;
    let cs = tsv.column(path, &columns.source)?;
    let ct = tsv.column(path, &columns.target)?;
    let cv = tsv.column(path, &columns.score)?;
    let need = cs.max(ct).max(cv) + 1;
    tsv.rows
        .iter()
        .enumerate()
        .map(|(i, (line, fields))| {
            if fields.len() < need {
                return Err(Error::record(path, *line, format!("expected at least {need} fields, got {}", fields.len())));
            }
            let score: f64 = fields[cv]
                .trim()
                .parse()
                .map_err(|_| Error::record(path, *line, format!("unparsable score `{}`", fields[cv])))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::record(path, *line, format!("score {score} outside [0, 1]")));
            }
            let source = Phrase::new(fields[cs].as_str()).map_err(|e| Error::record(path, *line, e.to_string()))?;
            let target = Phrase::new(fields[ct].as_str()).map_err(|e| Error::record(path, *line, e.to_string()))?;
            PhrasePair::scored(i.to_string(), source, target, score).map_err(|e| Error::record(path, *line, e.to_string()))
        })
        .collect()
}

/// Shared distinct words divided by the longer phrase's word count.
pub fn word_overlap(a: &Phrase, b: &Phrase) -> f64 {
    overlap_of_words(a.words(), b.words()).expect("phrases are non-empty")
}

/// [`word_overlap`] over raw word lists; empty inputs are an error.
pub fn overlap_of_words<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPhrase);
    }
    let sa: HashSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let sb: HashSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let shared = sa.intersection(&sb).count();
    Ok(shared as f64 / a.len().max(b.len()) as f64)
}

/// Target is the word-reversal of source and differs from it.
pub fn is_abba(source: &Phrase, target: &Phrase) -> bool {
    source.words() != target.words() && source.words().iter().rev().eq(target.words().iter())
}

pub fn filter_abba(pairs: &[PhrasePair]) -> Vec<PhrasePair> {
    pairs
        .iter()
        .filter(|p| is_abba(p.source(), p.target()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapSpec {
    Exact(f64),
    AtLeast(f64),
    MirrorAbba,
}

impl OverlapSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OverlapSpec::Exact(f) | OverlapSpec::AtLeast(f) if !(0.0..=1.0).contains(&f) => {
                Err(Error::InvalidInput(format!("overlap fraction {f} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn accepts(&self, a: &Phrase, b: &Phrase) -> bool {
        match *self {
            OverlapSpec::Exact(f) => (word_overlap(a, b) - f).abs() <= OVERLAP_TOLERANCE,
            OverlapSpec::AtLeast(f) => word_overlap(a, b) >= f - OVERLAP_TOLERANCE,
            OverlapSpec::MirrorAbba => is_abba(a, b),
        }
    }
}

impl fmt::Display for OverlapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapSpec::Exact(x) => write!(f, "exact:{x}"),
            OverlapSpec::AtLeast(x) => write!(f, "atleast:{x}"),
            OverlapSpec::MirrorAbba => f.write_str("abba"),
        }
    }
}

impl FromStr for OverlapSpec {
    type Err = Error;

    /// `exact:F`, `atleast:F` or `abba`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let spec = match lower.split_once(':') {
            None if lower == "abba" => OverlapSpec::MirrorAbba,
            Some((kind, frac)) => {
                let f: f64 = frac
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad overlap fraction `{frac}`")))?;
                match kind {
                    "exact" => OverlapSpec::Exact(f),
                    "atleast" | "at-least" | "at_least" => OverlapSpec::AtLeast(f),
                    _ => return Err(Error::InvalidInput(format!("unknown overlap mode `{kind}`"))),
                }
            }
            None => return Err(Error::InvalidInput(format!("unknown overlap spec `{s}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Above this universe size negatives are drawn by rejection sampling
/// instead of enumerating every candidate pair.
const ENUMERATION_LIMIT: usize = 4096;
const REJECTION_ATTEMPTS_PER_NEGATIVE: usize = 2000;

/// Positives (label 1) that satisfy `overlap`, followed by sampled negatives
/// (label 0, ids `neg-<k>`) drawn uniformly from pairs of distinct
/// `universe` phrases that satisfy `overlap` and are not positive pairs in
/// either orientation. `round(neg_ratio * positives)` negatives are drawn.
pub fn build_ppdb_sets(
    positives: &[PhrasePair],
    universe: &[Phrase],
    neg_ratio: f64,
    seed: u64,
    overlap: Option<&OverlapSpec>,
) -> Result<Vec<PhrasePair>> {
    if !(neg_ratio >= 0.0 && neg_ratio.is_finite()) {
        return Err(Error::InvalidInput(format!("negative ratio {neg_ratio} must be finite and >= 0")));
    }
    if let Some(spec) = overlap {
        spec.validate()?;
    }
    let accepts = |a: &Phrase, b: &Phrase| overlap.is_none_or(|s| s.accepts(a, b));

    let mut out = Vec::new();
    let mut positive_keys = HashSet::new();
    for p in positives {
        if p.label() == Some(0) {
            return Err(Error::InvalidInput(format!("positive pair {} is labelled 0", p.id())));
        }
        positive_keys.insert(unordered_key(p.source(), p.target()));
        if accepts(p.source(), p.target()) {
            out.push(PhrasePair::new(p.id(), p.source().clone(), p.target().clone(), p.score(), Some(1))?);
        }
    }
    let needed = (neg_ratio * out.len() as f64).round() as usize;
    if needed == 0 {
        return Ok(out);
    }

    let mut seen = HashSet::new();
    let distinct: Vec<&Phrase> = universe
        .iter()
        .filter(|p| seen.insert(p.normalized()))
        .collect();

    let mut rng = SplitMix64::new(seed);
    let negatives = if distinct.len() <= ENUMERATION_LIMIT {
        enumerate_negatives(&distinct, &positive_keys, &accepts, needed, &mut rng)?
    } else {
        sample_negatives(&distinct, &positive_keys, &accepts, overlap, needed, &mut rng)?
    };
    for (k, (a, b)) in negatives.into_iter().enumerate() {
        out.push(PhrasePair::labeled(format!("neg-{k}"), a.clone(), b.clone(), 0)?);
    }
    Ok(out)
}

fn unordered_key(a: &Phrase, b: &Phrase) -> (String, String) {
    let (x, y) = (a.normalized(), b.normalized());
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

fn enumerate_negatives<'a>(
    universe: &[&'a Phrase],
    positive_keys: &HashSet<(String, String)>,
    accepts: &impl Fn(&Phrase, &Phrase) -> bool,
    needed: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<(&'a Phrase, &'a Phrase)>> {
    let mut candidates = Vec::new();
    for i in 0..universe.len() {
        for j in i + 1..universe.len() {
            let (a, b) = (universe[i], universe[j]);
            if positive_keys.contains(&unordered_key(a, b)) {
                continue;
            }
            // Mirror pairs are directional; accept either orientation.
            if accepts(a, b) {
                candidates.push((a, b));
            } else if accepts(b, a) {
                candidates.push((b, a));
            }
        }
    }
    if candidates.len() < needed {
        return Err(Error::InsufficientCandidates {
            needed,
            available: candidates.len(),
        });
    }
    // Partial Fisher-Yates: the first `needed` slots are a uniform sample.
    for i in 0..needed {
        let j = i + rng.below(candidates.len() - i);
        candidates.swap(i, j);
    }
    candidates.truncate(needed);
    Ok(candidates
        .into_iter()
        .map(|(a, b)| if rng.next_u64() & 1 == 1 && accepts(b, a) { (b, a) } else { (a, b) })
        .collect())
}

fn sample_negatives<'a>(
    universe: &[&'a Phrase],
    positive_keys: &HashSet<(String, String)>,
    accepts: &impl Fn(&Phrase, &Phrase) -> bool,
    overlap: Option<&OverlapSpec>,
    needed: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<(&'a Phrase, &'a Phrase)>> {
    // Word -> phrases containing it, to propose overlapping candidates.
    let needs_shared_word = match overlap {
        Some(OverlapSpec::Exact(f)) | Some(OverlapSpec::AtLeast(f)) => *f > 0.0,
        Some(OverlapSpec::MirrorAbba) => true,
        None => false,
    };
    let mut by_word: HashMap<&str, Vec<usize>> = HashMap::new();
    if needs_shared_word {
        for (i, p) in universe.iter().enumerate() {
            let mut words: Vec<&str> = p.words().iter().map(String::as_str).collect();
            words.sort_unstable();
            words.dedup();
            for w in words {
                by_word.entry(w).or_default().push(i);
            }
        }
    }

    let mut chosen = Vec::with_capacity(needed);
    let mut used = HashSet::new();
    let budget = needed * REJECTION_ATTEMPTS_PER_NEGATIVE;
    for _ in 0..budget {
        if chosen.len() == needed {
            break;
        }
        let i = rng.below(universe.len());
        let a = universe[i];
        let j = if needs_shared_word {
            let w = &a.words()[rng.below(a.len())];
            let bucket = &by_word[w.as_str()];
            bucket[rng.below(bucket.len())]
        } else {
            rng.below(universe.len())
        };
        if i == j {
            continue;
        }
        let b = universe[j];
        let key = unordered_key(a, b);
        if positive_keys.contains(&key) || used.contains(&key) || !accepts(a, b) {
            continue;
        }
        used.insert(key);
        chosen.push((a, b));
    }
    if chosen.len() < needed {
        return Err(Error::InsufficientCandidates {
            needed,
            available: chosen.len(),
        });
    }
    Ok(chosen)
}

/// Loads positive phrase pairs (label 1) from a tab-separated file with
/// `source` and `target` columns (names configurable). An optional score
/// column is carried over when it parses into `[0, 1]`.
pub fn load_phrase_pairs(path: &Path, source_col: &str, target_col: &str, score_col: Option<&str>) -> Result<Vec<PhrasePair>> {
    let tsv = read_tsv(path)?;
    let cs = tsv.column(path, source_col)?;
    let ct = tsv.column(path, target_col)?;
    let cv = score_col.map(|c| tsv.column(path, c)).transpose()?;
    tsv.rows
        .iter()
        .enumerate()
        .map(|(i, (line, fields))| {
            let get = |c: usize| {
                fields
                    .get(c)
                    .ok_or_else(|| Error::record(path, *line, format!("missing field {}", c + 1)))
            };
            let source = Phrase::new(get(cs)?.as_str()).map_err(|e| Error::record(path, *line, e.to_string()))?;
            let target = Phrase::new(get(ct)?.as_str()).map_err(|e| Error::record(path, *line, e.to_string()))?;
            let score = match cv {
                Some(c) => {
                    let raw = get(c)?;
                    let s: f64 = raw
                        .trim()
                        .parse()
                        .map_err(|_| Error::record(path, *line, format!("unparsable score `{raw}`")))?;
                    Some(s)
                }
                None => None,
            };
            PhrasePair::new(i.to_string(), source, target, score, Some(1)).map_err(|e| Error::record(path, *line, e.to_string()))
        })
        .collect()
}

/// Loads sentence pairs from a tab-separated file with `id`, `sentence1`,
/// `sentence2` and `label` columns.
pub fn load_paws(path: &Path) -> Result<Vec<SentencePair>> {
    let tsv = read_tsv(path)?;
    let ci = tsv.column(path, "id")?;
    let c1 = tsv.column(path, "sentence1")?;
    let c2 = tsv.column(path, "sentence2")?;
    let cl = tsv.column(path, "label")?;
    let width = tsv.header.len();
    let pairs = tsv
        .rows
        .iter()
        .map(|(line, fields)| {
            if fields.len() != width {
                return Err(Error::record(path, *line, format!("expected {width} fields, got {}", fields.len())));
            }
            let label: u8 = fields[cl]
                .trim()
                .parse()
                .ok()
                .filter(|&l| l <= 1)
                .ok_or_else(|| Error::record(path, *line, format!("label `{}` is not 0 or 1", fields[cl])))?;
            SentencePair::from_text(fields[ci].trim(), &fields[c1], &fields[c2], label)
                .map_err(|e| Error::record(path, *line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique_ids(pairs.iter().map(SentencePair::id))?;
    Ok(pairs)
}

/// Loads treebank phrases from the `phrase|id` dictionary and the
/// `id|score` sentiment file (first line a header), in dictionary order.
pub fn load_sst(dictionary: &Path, sentiment_labels: &Path) -> Result<Vec<LabeledPhrase>> {
    let mut scores: HashMap<String, (usize, f64)> = HashMap::new();
    for (line, text) in read_lines(sentiment_labels)?.into_iter().skip(1) {
        if text.trim().is_empty() {
            continue;
        }
        let (id, score) = text
            .split_once('|')
            .ok_or_else(|| Error::record(sentiment_labels, line, "expected `id|score`"))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::record(sentiment_labels, line, format!("unparsable score `{score}`")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::record(sentiment_labels, line, format!("score {score} outside [0, 1]")));
        }
        if scores.insert(id.trim().to_owned(), (line, score)).is_some() {
            return Err(Error::record(sentiment_labels, line, format!("duplicate phrase id {id}")));
        }
    }

    let mut used = HashSet::new();
    let mut out = Vec::new();
    for (line, text) in read_lines(dictionary)? {
        if text.is_empty() {
            continue;
        }
        let (phrase, id) = text
            .rsplit_once('|')
            .ok_or_else(|| Error::record(dictionary, line, "expected `phrase|id`"))?;
        let id = id.trim();
        let &(_, score) = scores
            .get(id)
            .ok_or_else(|| Error::record(dictionary, line, format!("phrase id {id} has no sentiment score")))?;
        if !used.insert(id.to_owned()) {
            return Err(Error::record(dictionary, line, format!("duplicate phrase id {id}")));
        }
        let phrase = Phrase::new(phrase).map_err(|e| Error::record(dictionary, line, e.to_string()))?;
        out.push(LabeledPhrase::from_score(id, phrase, score).map_err(|e| Error::record(dictionary, line, e.to_string()))?);
    }
    if let Some((id, (line, _))) = scores.iter().filter(|(id, _)| !used.contains(*id)).min_by_key(|(_, (l, _))| *l) {
        return Err(Error::record(
            sentiment_labels,
            *line,
            format!("phrase id {id} does not appear in the dictionary"),
        ));
    }
    Ok(out)
}

/// Phrases of exactly `n` words.
pub fn filter_by_length(items: &[LabeledPhrase], n: usize) -> Vec<LabeledPhrase> {
    items.iter().filter(|p| p.phrase().len() == n).cloned().collect()
}

/// Seeded train/validation split: ids are sorted, shuffled with `seed`, and
/// the first `round(fraction * n)` become the validation set. Both halves
/// keep the input order.
pub fn split_validation<T: Clone>(
    items: &[T],
    id_of: impl Fn(&T) -> &str,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!("validation fraction {fraction} outside [0, 1]")));
    }
    let mut ids: Vec<&str> = items.iter().map(&id_of).collect();
    ids.sort_unstable();
    SplitMix64::new(seed).shuffle(&mut ids);
    let n_val = (fraction * items.len() as f64).round() as usize;
    let val_ids: HashSet<&str> = ids[..n_val].iter().copied().collect();
    let (val, train): (Vec<T>, Vec<T>) = items.iter().cloned().partition(|it| val_ids.contains(id_of(it)));
    Ok((train, val))
}

pub fn check_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidInput(format!("duplicate item id `{id}`")));
        }
    }
    Ok(())
}

pub const DATASET_FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    PhrasePairs,
    SentencePairs,
    LabeledPhrases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub name: String,
    pub kind: DatasetKind,
    pub source_path: String,
    pub item_count: usize,
    pub filter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    PhrasePairs(Vec<PhrasePair>),
    SentencePairs(Vec<SentencePair>),
    LabeledPhrases(Vec<LabeledPhrase>),
}

impl Dataset {
    pub fn kind(&self) -> DatasetKind {
        match self {
            Dataset::PhrasePairs(_) => DatasetKind::PhrasePairs,
            Dataset::SentencePairs(_) => DatasetKind::SentencePairs,
            Dataset::LabeledPhrases(_) => DatasetKind::LabeledPhrases,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::PhrasePairs(v) => v.len(),
            Dataset::SentencePairs(v) => v.len(),
            Dataset::LabeledPhrases(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn ids(&self) -> Vec<&str> {
        match self {
            Dataset::PhrasePairs(v) => v.iter().map(PhrasePair::id).collect(),
            Dataset::SentencePairs(v) => v.iter().map(SentencePair::id).collect(),
            Dataset::LabeledPhrases(v) => v.iter().map(LabeledPhrase::id).collect(),
        }
    }

    /// Builds the manifest that describes this dataset.
    pub fn manifest(&self, name: &str, source_path: &str, filter: &str, seed: Option<u64>) -> DatasetManifest {
        DatasetManifest {
            format_version: DATASET_FORMAT_VERSION.to_owned(),
            name: name.to_owned(),
            kind: self.kind(),
            source_path: source_path.to_owned(),
            item_count: self.len(),
            filter: filter.to_owned(),
            seed,
        }
    }
}

pub fn write_dataset(path: &Path, manifest: &DatasetManifest, data: &Dataset) -> Result<()> {
    if manifest.kind != data.kind() || manifest.item_count != data.len() {
        return Err(Error::ManifestMismatch(format!(
            "manifest says {} {:?} items, data has {} {:?}",
            manifest.item_count,
            manifest.kind,
            data.len(),
            data.kind()
        )));
    }
    check_unique_ids(data.ids())?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let json = |e: serde_json::Error| Error::Format(e.to_string());
    serde_json::to_writer(&mut out, manifest).map_err(json)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    macro_rules! items {
        ($v:expr) => {
            for item in $v {
                serde_json::to_writer(&mut out, item).map_err(json)?;
                out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        };
    }
    match data {
        Dataset::PhrasePairs(v) => items!(v),
        Dataset::SentencePairs(v) => items!(v),
        Dataset::LabeledPhrases(v) => items!(v),
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<(DatasetManifest, Dataset)> {
    let lines = read_lines(path)?;
    let mut iter = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = iter.next().ok_or_else(|| Error::record(path, 1, "missing dataset manifest"))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&header).map_err(|e| Error::record(path, 1, format!("bad manifest: {e}")))?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "dataset format_version `{}` unsupported",
            manifest.format_version
        )));
    }
    fn parse<T: serde::de::DeserializeOwned>(path: &Path, rows: impl Iterator<Item = (usize, String)>) -> Result<Vec<T>> {
        rows.map(|(n, l)| serde_json::from_str(&l).map_err(|e| Error::record(path, n, e.to_string())))
            .collect()
    }
    let data = match manifest.kind {
        DatasetKind::PhrasePairs => Dataset::PhrasePairs(parse(path, iter)?),
        DatasetKind::SentencePairs => Dataset::SentencePairs(parse(path, iter)?),
        DatasetKind::LabeledPhrases => Dataset::LabeledPhrases(parse(path, iter)?),
    };
    if data.len() != manifest.item_count {
        return Err(Error::ManifestMismatch(format!(
            "{}: manifest item_count {} but {} items",
            path.display(),
            manifest.item_count,
            data.len()
        )));
    }
    check_unique_ids(data.ids())?;
    Ok((manifest, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Phrase {
        Phrase::new(s).unwrap()
    }

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(word_overlap(&p("law school"), &p("school law")), 1.0);
        assert_eq!(word_overlap(&p("net profit"), &p("net income")), 0.5);
        assert_eq!(word_overlap(&p("alpha beta"), &p("gamma delta")), 0.0);
        assert_eq!(word_overlap(&p("a a"), &p("a b")), 0.5);
        assert!(overlap_of_words::<&str>(&[], &["a"]).is_err());
    }

    #[test]
    fn abba_examples() {
        let pairs = vec![
            PhrasePair::scored("0", p("law school"), p("school law"), 0.3).unwrap(),
            PhrasePair::scored("1", p("law school"), p("law school"), 1.0).unwrap(),
            PhrasePair::scored("2", p("net profit"), p("net income"), 0.8).unwrap(),
            PhrasePair::scored("3", p("a a"), p("a a"), 1.0).unwrap(),
        ];
        let kept = filter_abba(&pairs);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id(), "0");
        assert_eq!(filter_abba(&kept), kept);
    }

    #[test]
    fn bird_fixture_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "bird.tsv",
            "pair\tterm1\tterm2\trelatedness score\n1\tlaw school\tschool law\t0.0\r\n2\tnet profit\tnet income\t0.5\n3\ta b\tc d\t1.0\n",
        );
        let pairs = load_bird(&path, &BirdColumns::default()).unwrap();
        let scores: Vec<f64> = pairs.iter().map(|p| p.score().unwrap()).collect();
        assert_eq!(scores, vec![0.0, 0.5, 1.0]);
        assert_eq!(pairs[1].target().text(), "net income");
    }

    #[test]
    fn bird_header_only_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "e.tsv", "term1\tterm2\trelatedness score\n");
        assert!(load_bird(&empty, &BirdColumns::default()).unwrap().is_empty());

        let bad = write(&dir, "b.tsv", "term1\tterm2\trelatedness score\na\tb\t0.5\nc\td\t1.5\n");
        match load_bird(&bad, &BirdColumns::default()) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let nan = write(&dir, "n.tsv", "term1\tterm2\trelatedness score\na\tb\thigh\n");
        assert!(matches!(load_bird(&nan, &BirdColumns::default()), Err(Error::Record { line: 2, .. })));

        let cols = BirdColumns {
            score: "score".into(),
            ..Default::default()
        };
        assert!(matches!(load_bird(&empty, &cols), Err(Error::MissingColumn { .. })));
        assert!(matches!(
            load_bird(&dir.path().join("nope.tsv"), &BirdColumns::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn ppdb_synthetic_universe() {
        // Every pair of "x a", "x b", "x c", "x d" shares exactly one word of two.
        let universe: Vec<Phrase> = ["x a", "x b", "x c", "x d"].iter().map(|s| p(s)).collect();
        let positives = vec![
            PhrasePair::labeled("p0", p("x a"), p("x b"), 1).unwrap(),
            PhrasePair::labeled("p1", p("x c"), p("x d"), 1).unwrap(),
        ];
        let spec = OverlapSpec::Exact(0.5);
        let out = build_ppdb_sets(&positives, &universe, 1.0, 7, Some(&spec)).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out.iter().filter(|q| q.label() == Some(1)).count(), 2);
        assert_eq!(out.iter().filter(|q| q.label() == Some(0)).count(), 2);
        for q in &out {
            assert_eq!(word_overlap(q.source(), q.target()), 0.5);
        }
        for q in out.iter().filter(|q| q.label() == Some(0)) {
            let key = unordered_key(q.source(), q.target());
            assert_ne!(key, unordered_key(&p("x a"), &p("x b")));
            assert_ne!(key, unordered_key(&p("x c"), &p("x d")));
        }
        let again = build_ppdb_sets(&positives, &universe, 1.0, 7, Some(&spec)).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn ppdb_overlap_filters_positives_and_reports_shortfall() {
        let universe: Vec<Phrase> = ["x a", "x b", "y c"].iter().map(|s| p(s)).collect();
        let positives = vec![
            PhrasePair::labeled("p0", p("x a"), p("x b"), 1).unwrap(),
            PhrasePair::labeled("p1", p("x a"), p("y c"), 1).unwrap(),
        ];
        let spec = OverlapSpec::Exact(0.5);
        // Only p0 passes; its pair is excluded, and no other pair has overlap 0.5.
        match build_ppdb_sets(&positives, &universe, 1.0, 1, Some(&spec)) {
            Err(Error::InsufficientCandidates { needed, available }) => {
                assert_eq!((needed, available), (1, 0));
            }
            other => panic!("{other:?}"),
        }
        let uncontrolled = build_ppdb_sets(&positives, &universe, 0.5, 1, None).unwrap();
        assert_eq!(uncontrolled.len(), 3);
    }

    #[test]
    fn ppdb_rejection_path_satisfies_constraint() {
        // Large enough universe to take the sampling path.
        let mut universe = Vec::new();
        for i in 0..70 {
            for j in 0..70 {
                universe.push(p(&format!("w{i} v{j}")));
            }
        }
        assert!(universe.len() > ENUMERATION_LIMIT);
        let positives: Vec<PhrasePair> = (0..50)
            .map(|i| PhrasePair::labeled(format!("p{i}"), p(&format!("w{i} v0")), p(&format!("w{i} v1")), 1).unwrap())
            .collect();
        let spec = OverlapSpec::Exact(0.5);
        let out = build_ppdb_sets(&positives, &universe, 1.0, 11, Some(&spec)).unwrap();
        assert_eq!(out.len(), 100);
        assert!(out.iter().all(|q| word_overlap(q.source(), q.target()) == 0.5));
        assert_eq!(out, build_ppdb_sets(&positives, &universe, 1.0, 11, Some(&spec)).unwrap());
        assert_ne!(out, build_ppdb_sets(&positives, &universe, 1.0, 12, Some(&spec)).unwrap());
    }

    #[test]
    fn overlap_spec_parsing() {
        assert_eq!("exact:0.5".parse::<OverlapSpec>().unwrap(), OverlapSpec::Exact(0.5));
        assert_eq!("atleast:0.25".parse::<OverlapSpec>().unwrap(), OverlapSpec::AtLeast(0.25));
        assert_eq!("ABBA".parse::<OverlapSpec>().unwrap(), OverlapSpec::MirrorAbba);
        assert!("exact:1.5".parse::<OverlapSpec>().is_err());
        assert!("fuzzy".parse::<OverlapSpec>().is_err());
    }

    #[test]
    fn paws_table_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "paws.tsv",
            "id\tsentence1\tsentence2\tlabel\n\
             1\tThere are also specific discussions , public profile debates and project discussions .\tThere are also public discussions , profile specific discussions , and project discussions .\t0\n\
             2\tShe worked and lived in Stuttgart , Berlin ( Germany ) and in Vienna ( Austria ) .\tShe worked and lived in Germany ( Stuttgart , Berlin ) and in Vienna ( Austria ) .\t1\n",
        );
        let pairs = load_paws(&path).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs.iter().map(SentencePair::label).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(pairs[0].s1().len(), 13);
        assert_eq!(pairs[0].s2().len(), 14);
    }

    #[test]
    fn paws_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let short = write(&dir, "s.tsv", "id\tsentence1\tsentence2\tlabel\n1\ta b\t0\n");
        assert!(matches!(load_paws(&short), Err(Error::Record { line: 2, .. })));
        let label = write(&dir, "l.tsv", "id\tsentence1\tsentence2\tlabel\n1\ta\tb\t0\n2\ta\tb\t2\n");
        assert!(matches!(load_paws(&label), Err(Error::Record { line: 3, .. })));
    }

    #[test]
    fn sst_loading_and_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let dict = write(&dir, "dictionary.txt", "good|0\nnot good|1\nvery good movie|2\n!|3\n");
        let labels = write(
            &dir,
            "sentiment_labels.txt",
            "phrase ids|sentiment values\n0|0.8\n1|0.25\n2|0.95\n3|0.5\n",
        );
        let items = load_sst(&dict, &labels).unwrap();
        assert_eq!(items.len(), 4);
        let classes: Vec<u8> = items.iter().map(LabeledPhrase::sentiment_class).collect();
        assert_eq!(classes, vec![3, 1, 4, 2]);
        assert_eq!(filter_by_length(&items, 1).len(), 2);
        assert_eq!(filter_by_length(&items, 2)[0].phrase().text(), "not good");
        assert_eq!(filter_by_length(&items, 3).len(), 1);
        assert!(filter_by_length(&items, 6).is_empty());

        let dangling = write(&dir, "d2.txt", "good|0\nbad|9\n");
        assert!(matches!(load_sst(&dangling, &labels), Err(Error::Record { line: 2, .. })));
        let unused = write(&dir, "d3.txt", "good|0\n");
        assert!(load_sst(&unused, &labels).is_err());
        let out_of_range = write(&dir, "l2.txt", "phrase ids|sentiment values\n0|1.2\n");
        assert!(load_sst(&unused, &out_of_range).is_err());
    }

    #[test]
    fn validation_split_is_seeded() {
        let items: Vec<String> = (0..100).map(|i| format!("{i}")).collect();
        let (train, val) = split_validation(&items, |s| s.as_str(), 0.15, 3).unwrap();
        assert_eq!(val.len(), 15);
        assert_eq!(train.len(), 85);
        let (train2, val2) = split_validation(&items, |s| s.as_str(), 0.15, 3).unwrap();
        assert_eq!((train, val.clone()), (train2, val2));
        let mut shuffled = items.clone();
        shuffled.reverse();
        let (_, val3) = split_validation(&shuffled, |s| s.as_str(), 0.15, 3).unwrap();
        let mut a = val.clone();
        let mut b = val3;
        a.sort();
        b.sort();
        assert_eq!(a, b, "split depends only on ids and seed");
    }

    #[test]
    fn dataset_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let data = Dataset::PhrasePairs(vec![
            PhrasePair::scored("0", p("law school"), p("school law"), 0.25).unwrap(),
            PhrasePair::labeled("1", p("net profit"), p("net income"), 1).unwrap(),
        ]);
        let manifest = data.manifest("bird", "in.tsv", "abba", Some(3));
        let path = dir.path().join("d.jsonl");
        write_dataset(&path, &manifest, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().contains(r#""source":"law school""#));
        let (m2, d2) = read_dataset(&path).unwrap();
        assert_eq!((m2, d2), (manifest, data));
    }

    #[test]
    fn dataset_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "d.jsonl",
            "{\"format_version\":\"1\",\"name\":\"x\",\"kind\":\"phrase_pairs\",\"source_path\":\"\",\"item_count\":2,\"filter\":\"none\"}\n\
             {\"id\":\"0\",\"source\":\"a\",\"target\":\"b\",\"label\":1}\n",
        );
        assert!(matches!(read_dataset(&path), Err(Error::ManifestMismatch(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn phrase() -> impl Strategy<Value = Phrase> {
            proptest::collection::vec("[a-d]", 1..4).prop_map(|w| Phrase::from_words(&w).unwrap())
        }

        proptest! {
            #[test]
            fn overlap_symmetric_and_bounded(a in phrase(), b in phrase()) {
                let ab = word_overlap(&a, &b);
                prop_assert_eq!(ab, word_overlap(&b, &a));
                prop_assert!((0.0..=1.0).contains(&ab));
                let same_sets = a.words().iter().collect::<HashSet<_>>() == b.words().iter().collect::<HashSet<_>>();
                let full = same_sets && a.len() == b.len()
                    && a.words().iter().collect::<HashSet<_>>().len() == a.len();
                prop_assert_eq!(ab == 1.0, full);
            }

            #[test]
            fn abba_is_fixed_point(pairs in proptest::collection::vec((phrase(), phrase()), 0..20)) {
                let pairs: Vec<PhrasePair> = pairs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (a, b))| PhrasePair::scored(i.to_string(), a, b, 0.5).unwrap())
                    .collect();
                let once = filter_abba(&pairs);
                prop_assert_eq!(filter_abba(&once), once);
            }
        }
    }
}
