//! Representation extraction and the embedding dump format.
//!
//! A dump is UTF-8 text with LF line endings. The first line is the
//! [`DumpManifest`] as a JSON object; every following line is one
//! [`EmbeddingRecord`] whose vector is base64 of little-endian IEEE-754
//! `f32` values:
//!
//! ```text
//! {"format_version":"1","model_name":"toy","num_layers":4,"dim":32,"reps":["CLS",...],"input_mode":"phrase_only",...}
//! {"item_id":"17","side":"source","layer":0,"rep":"CLS","vector":"AACAPwAAAEA..."}
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::ToyEncoder;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{InputMode, RepType};

pub const FORMAT_VERSION: &str = "1";

/// Token positions of a phrase inside an encoded sequence: one half-open
/// token range per phrase word, in order. A word split into several
/// subwords covers several tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    words: Vec<Range<usize>>,
}

impl TokenSpan {
    pub fn from_words(words: Vec<Range<usize>>) -> Self {
        Self { words }
    }

    /// One token per word over `range`.
    pub fn contiguous(range: Range<usize>) -> Self {
        Self {
            words: range.map(|t| t..t + 1).collect(),
        }
    }

    pub fn phrase(&self) -> Range<usize> {
        match (self.words.first(), self.words.last()) {
            (Some(first), Some(last)) => first.start..last.end,
            _ => 0..0,
        }
    }

    pub fn word(&self, i: usize) -> Option<Range<usize>> {
        self.words.get(i).cloned()
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Whether Avg-All averages over CLS and SEP as well as the body tokens.
    pub avg_all_includes_specials: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            avg_all_includes_specials: true,
        }
    }
}

/// Reduces one layer's token vectors (`tokens x dim`, CLS first, SEP last)
/// to a single vector.
pub fn extract_rep(layer: &Matrix, span: &TokenSpan, rep: RepType, opts: ExtractOptions) -> Result<Vec<f64>> {
    let n = layer.rows();
    let phrase = span.phrase();
    if phrase.is_empty() || phrase.end > n {
        return Err(Error::InvalidInput(format!(
            "phrase span {phrase:?} empty or outside {n} tokens"
        )));
    }
    let v = match rep {
        RepType::Cls => layer.row(0).to_vec(),
        RepType::Sep => layer.row(n - 1).to_vec(),
        RepType::AvgPhrase => mean_rows(layer, phrase),
        RepType::AvgAll => {
            if opts.avg_all_includes_specials {
                mean_rows(layer, 0..n)
            } else {
                if n < 3 {
                    return Err(Error::InvalidInput("no body tokens between CLS and SEP".into()));
                }
                mean_rows(layer, 1..n - 1)
            }
        }
        RepType::HeadToken => {
            let head = span
                .word(1)
                .ok_or_else(|| Error::InvalidInput("HeadToken needs a phrase of at least two words".into()))?;
            if head.is_empty() || head.end > n {
                return Err(Error::InvalidInput(format!("head word span {head:?} invalid")));
            }
            mean_rows(layer, head)
        }
    };
    Ok(v)
}

fn mean_rows(m: &Matrix, rows: Range<usize>) -> Vec<f64> {
    let count = rows.len() as f64;
    let mut acc = vec![0.0; m.cols()];
    for i in rows {
        for (a, v) in acc.iter_mut().zip(m.row(i)) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
    S1,
    S2,
    Single,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
            Side::S1 => "s1",
            Side::S2 => "s2",
            Side::Single => "single",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "source" => Side::Source,
            "target" => Side::Target,
            "s1" => Side::S1,
            "s2" => Side::S2,
            "single" => Side::Single,
            _ => return Err(Error::InvalidInput(format!("unknown side `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub format_version: String,
    pub model_name: String,
    /// Encoder layers, not counting the input-embedding layer 0.
    pub num_layers: usize,
    pub dim: usize,
    pub reps: Vec<RepType>,
    pub input_mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    /// Written by this crate so truncated files are detected; optional for
    /// other producers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_count: Option<usize>,
}

impl DumpManifest {
    pub fn new(model_name: impl Into<String>, num_layers: usize, dim: usize, reps: Vec<RepType>) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_owned(),
            model_name: model_name.into(),
            num_layers,
            dim,
            reps,
            input_mode: InputMode::PhraseOnly.name().to_owned(),
            seed: None,
            notes: String::new(),
            record_count: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version `{}` (expected `{FORMAT_VERSION}`)",
                self.format_version
            )));
        }
        if self.dim == 0 || self.num_layers == 0 {
            return Err(Error::Format("manifest dim and num_layers must be at least 1".into()));
        }
        if self.reps.is_empty() {
            return Err(Error::Format("manifest lists no representation types".into()));
        }
        Ok(())
    }

    /// Representation types in canonical column order.
    pub fn sorted_reps(&self) -> Vec<RepType> {
        let mut reps = self.reps.clone();
        reps.sort();
        reps.dedup();
        reps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub item_id: String,
    pub side: Side,
    pub layer: usize,
    pub rep: RepType,
    #[serde(with = "b64_f32")]
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            item_id: self.item_id.clone(),
            side: self.side,
            layer: self.layer,
            rep: self.rep,
        }
    }

    fn check(&self, manifest: &DumpManifest) -> Result<()> {
        if self.vector.len() != manifest.dim {
            return Err(Error::DimensionMismatch {
                expected: manifest.dim,
                actual: self.vector.len(),
            });
        }
        if self.layer > manifest.num_layers {
            return Err(Error::Format(format!(
                "layer {} exceeds manifest num_layers {}",
                self.layer, manifest.num_layers
            )));
        }
        if !manifest.reps.contains(&self.rep) {
            return Err(Error::Format(format!("rep {} not listed in manifest", self.rep)));
        }
        if self.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vector of {}", self.key())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub item_id: String,
    pub side: Side,
    pub layer: usize,
    pub rep: RepType,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}/{}, layer {}, {})", self.item_id, self.side, self.layer, self.rep)
    }
}

mod b64_f32 {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f32], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&encode_f32(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f32>, D::Error> {
        let text = <&str>::deserialize(d)?;
        decode_f32(text).map_err(de::Error::custom)
    }
}

pub fn encode_f32(v: &[f32]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    B64.encode(bytes)
}

pub fn decode_f32(text: &str) -> Result<Vec<f32>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Format(format!("bad base64 vector: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(format!("vector byte length {} not a multiple of 4", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn encode_f64(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    B64.encode(bytes)
}

pub fn decode_f64(text: &str) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Format(format!("bad base64 vector: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("vector byte length {} not a multiple of 8", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// An in-memory dump with a key index.
#[derive(Debug, Clone)]
pub struct Dump {
    manifest: DumpManifest,
    records: Vec<EmbeddingRecord>,
    index: HashMap<RecordKey, usize>,
}

impl PartialEq for Dump {
    fn eq(&self, other: &Self) -> bool {
        self.manifest == other.manifest && self.records == other.records
    }
}

impl Dump {
    pub fn new(manifest: DumpManifest, records: Vec<EmbeddingRecord>) -> Result<Self> {
        manifest.validate()?;
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.check(&manifest)?;
            if index.insert(r.key(), i).is_some() {
                return Err(Error::Format(format!("duplicate record {}", r.key())));
            }
        }
        Ok(Self {
            manifest,
            records,
            index,
        })
    }

    pub fn manifest(&self) -> &DumpManifest {
        &self.manifest
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, item_id: &str, side: Side, layer: usize, rep: RepType) -> Option<&[f32]> {
        let key = RecordKey {
            item_id: item_id.to_owned(),
            side,
            layer,
            rep,
        };
        self.index.get(&key).map(|&i| self.records[i].vector.as_slice())
    }

    pub fn contains_key(&self, key: &RecordKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &RecordKey> {
        self.index.keys()
    }

    pub fn into_parts(self) -> (DumpManifest, Vec<EmbeddingRecord>) {
        (self.manifest, self.records)
    }
}

/// Writes a dump. Records are validated against the manifest before anything
/// is written; the manifest's `record_count` is set to the number written.
pub fn write_dump(manifest: &DumpManifest, records: &[EmbeddingRecord], path: &Path) -> Result<()> {
    manifest.validate()?;
    for r in records {
        r.check(manifest)?;
    }
    let mut manifest = manifest.clone();
    manifest.record_count = Some(records.len());

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut out, &manifest).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Streams the records of a dump file in write order.
pub struct DumpReader<R> {
    path: std::path::PathBuf,
    lines: std::io::Lines<R>,
    manifest: DumpManifest,
    line_no: usize,
    seen: usize,
    done: bool,
}

impl DumpReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        if len == 0 {
            return Err(Error::Format(format!("{}: empty dump (truncated)", path.display())));
        }
        check_trailing_newline(path, &file, len)?;
        Self::from_reader(path, BufReader::new(file))
    }
}

fn check_trailing_newline(path: &Path, file: &File, len: u64) -> Result<()> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = file;
    let mut last = [0u8; 1];
    f.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(path, e))?;
    f.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
    f.seek(SeekFrom::Start(0)).map_err(|e| Error::io(path, e))?;
    if last[0] != b'\n' {
        return Err(Error::Format(format!(
            "{}: last line not newline-terminated (truncated)",
            path.display()
        )));
    }
    Ok(())
}

impl<R: BufRead> DumpReader<R> {
    pub fn from_reader(path: &Path, reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format(format!("{}: missing manifest (truncated)", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let manifest: DumpManifest = serde_json::from_str(strip_cr(&header))
            .map_err(|e| Error::record(path, 1, format!("bad manifest: {e}")))?;
        manifest.validate()?;
        Ok(Self {
            path: path.to_owned(),
            lines,
            manifest,
            line_no: 1,
            seen: 0,
            done: false,
        })
    }

    pub fn manifest(&self) -> &DumpManifest {
        &self.manifest
    }
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<EmbeddingRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    if let Some(expected) = self.manifest.record_count {
                        if expected != self.seen {
                            return Some(Err(Error::Format(format!(
                                "{}: manifest announces {expected} records, found {} (truncated)",
                                self.path.display(),
                                self.seen
                            ))));
                        }
                    }
                    return None;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
                Some(Ok(line)) => {
                    self.line_no += 1;
                    let line = strip_cr(&line);
                    if line.trim().is_empty() {
                        continue;
                    }
                    self.seen += 1;
                    let parsed = serde_json::from_str::<EmbeddingRecord>(line)
                        .map_err(|e| Error::record(&self.path, self.line_no, e.to_string()))
                        .and_then(|r| {
                            r.check(&self.manifest)
                                .map_err(|e| Error::record(&self.path, self.line_no, e.to_string()))?;
                            Ok(r)
                        });
                    return Some(parsed);
                }
            }
        }
    }
}

pub fn read_dump(path: &Path) -> Result<Dump> {
    let reader = DumpReader::open(path)?;
    let manifest = reader.manifest().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Dump::new(manifest, records)
}

/// One phrase to encode and the dump key it is stored under.
#[derive(Debug, Clone)]
pub struct EncodeInput {
    pub item_id: String,
    pub side: Side,
    pub words: Vec<String>,
    pub mode: InputMode,
}

/// Encodes every input and extracts `reps` at every layer. Output order is
/// input order, then layer, then `reps` order, independent of thread count.
pub fn encode_items(
    encoder: &ToyEncoder,
    inputs: &[EncodeInput],
    reps: &[RepType],
    opts: ExtractOptions,
) -> Result<Vec<EmbeddingRecord>> {
    let per_item: Vec<Vec<EmbeddingRecord>> = inputs
        .par_iter()
        .map(|input| {
            let tm = encoder.encode(&input.words, &input.mode)?;
            let mut out = Vec::with_capacity(tm.layers.len() * reps.len());
            for (layer, m) in tm.layers.iter().enumerate() {
                for &rep in reps {
                    let v = extract_rep(m, &tm.span, rep, opts).map_err(|e| {
                        Error::InvalidInput(format!("item {} ({}): {e}", input.item_id, input.side))
                    })?;
                    out.push(EmbeddingRecord {
                        item_id: input.item_id.clone(),
                        side: input.side,
                        layer,
                        rep,
                        vector: v.iter().map(|&x| x as f32).collect(),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_item.into_iter().flatten().collect())
}
