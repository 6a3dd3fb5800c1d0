//! Shared domain types.
//!
//! Everything here is immutable after construction and validated by its
//! constructor, so downstream modules can rely on the invariants without
//! re-checking them.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits on runs of whitespace. Punctuation that is already space-delimited
/// becomes a standalone word.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// A whitespace-tokenized phrase. Words are compared case-sensitively; use
/// [`Phrase::to_lowercase`] for case-folded comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Phrase {
    words: Vec<String>,
    text: String,
}

impl Phrase {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let words = tokenize(&text);
        if words.is_empty() {
            return Err(Error::EmptyPhrase);
        }
        Ok(Self { words, text })
    }

    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let words: Vec<String> = words.iter().map(|w| w.as_ref().to_owned()).collect();
        if words.is_empty() || words.iter().any(|w| w.is_empty() || w.contains(char::is_whitespace)) {
            return Err(Error::EmptyPhrase);
        }
        let text = words.join(" ");
        Ok(Self { words, text })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Words joined by single spaces.
    pub fn normalized(&self) -> String {
        self.words.join(" ")
    }

    pub fn to_lowercase(&self) -> Self {
        Self {
            words: self.words.iter().map(|w| w.to_lowercase()).collect(),
            text: self.text.to_lowercase(),
        }
    }
}

impl TryFrom<String> for Phrase {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        Phrase::new(text)
    }
}

impl From<Phrase> for String {
    fn from(p: Phrase) -> String {
        p.text
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A binary class label. `1` marks a paraphrase / positive pair.
pub fn check_label(label: u8) -> Result<u8> {
    if label <= 1 {
        Ok(label)
    } else {
        Err(Error::InvalidInput(format!("label {label} is not 0 or 1")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhrasePairRepr", into = "PhrasePairRepr")]
pub struct PhrasePair {
    id: String,
    source: Phrase,
    target: Phrase,
    score: Option<f64>,
    label: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct PhrasePairRepr {
    id: String,
    source: Phrase,
    target: Phrase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
}

impl PhrasePair {
    pub fn new(
        id: impl Into<String>,
        source: Phrase,
        target: Phrase,
        score: Option<f64>,
        label: Option<u8>,
    ) -> Result<Self> {
        let id = id.into();
        if score.is_none() && label.is_none() {
            return Err(Error::InvalidInput(format!("pair {id}: needs a score or a label")));
        }
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidInput(format!("pair {id}: score {s} outside [0, 1]")));
            }
        }
        if let Some(l) = label {
            check_label(l)?;
        }
        Ok(Self {
            id,
            source,
            target,
            score,
            label,
        })
    }

    pub fn scored(id: impl Into<String>, source: Phrase, target: Phrase, score: f64) -> Result<Self> {
        Self::new(id, source, target, Some(score), None)
    }

    pub fn labeled(id: impl Into<String>, source: Phrase, target: Phrase, label: u8) -> Result<Self> {
        Self::new(id, source, target, None, Some(label))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &Phrase {
        &self.source
    }

    pub fn target(&self) -> &Phrase {
        &self.target
    }

    pub fn score(&self) -> Option<f64> {
        self.score
    }

    pub fn label(&self) -> Option<u8> {
        self.label
    }

    pub fn to_lowercase(&self) -> Self {
        Self {
            source: self.source.to_lowercase(),
            target: self.target.to_lowercase(),
            ..self.clone()
        }
    }
}

impl TryFrom<PhrasePairRepr> for PhrasePair {
    type Error = Error;

    fn try_from(r: PhrasePairRepr) -> Result<Self> {
        PhrasePair::new(r.id, r.source, r.target, r.score, r.label)
    }
}

impl From<PhrasePair> for PhrasePairRepr {
    fn from(p: PhrasePair) -> Self {
        Self {
            id: p.id,
            source: p.source,
            target: p.target,
            score: p.score,
            label: p.label,
        }
    }
}

/// A sentence pair with a paraphrase label. Both sides are stored as
/// [`Phrase`]s, which guarantees they are non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SentencePairRepr", into = "SentencePairRepr")]
pub struct SentencePair {
    id: String,
    s1: Phrase,
    s2: Phrase,
    label: u8,
}

#[derive(Serialize, Deserialize)]
struct SentencePairRepr {
    id: String,
    s1: Phrase,
    s2: Phrase,
    label: u8,
}

impl SentencePair {
    pub fn new(id: impl Into<String>, s1: Phrase, s2: Phrase, label: u8) -> Result<Self> {
        Ok(Self {
            id: id.into(),
            s1,
            s2,
            label: check_label(label)?,
        })
    }

    pub fn from_text(id: impl Into<String>, s1: &str, s2: &str, label: u8) -> Result<Self> {
        Self::new(id, Phrase::new(s1)?, Phrase::new(s2)?, label)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn s1(&self) -> &[String] {
        self.s1.words()
    }

    pub fn s2(&self) -> &[String] {
        self.s2.words()
    }

    pub fn s1_phrase(&self) -> &Phrase {
        &self.s1
    }

    pub fn s2_phrase(&self) -> &Phrase {
        &self.s2
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn to_lowercase(&self) -> Self {
        Self {
            id: self.id.clone(),
            s1: self.s1.to_lowercase(),
            s2: self.s2.to_lowercase(),
            label: self.label,
        }
    }
}

impl TryFrom<SentencePairRepr> for SentencePair {
    type Error = Error;

    fn try_from(r: SentencePairRepr) -> Result<Self> {
        SentencePair::new(r.id, r.s1, r.s2, r.label)
    }
}

impl From<SentencePair> for SentencePairRepr {
    fn from(p: SentencePair) -> Self {
        Self {
            id: p.id,
            s1: p.s1,
            s2: p.s2,
            label: p.label,
        }
    }
}

pub const SENTIMENT_CLASSES: u8 = 5;

/// Five-way sentiment bucket of a score in `[0, 1]`:
/// `[0, .2] -> 0`, `(.2, .4] -> 1`, `(.4, .6] -> 2`, `(.6, .8] -> 3`, `(.8, 1] -> 4`.
pub fn sentiment_class(score: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::InvalidInput(format!("sentiment score {score} outside [0, 1]")));
    }
    let class = match score {
        s if s <= 0.2 => 0,
        s if s <= 0.4 => 1,
        s if s <= 0.6 => 2,
        s if s <= 0.8 => 3,
        _ => 4,
    };
    Ok(class)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledPhraseRepr", into = "LabeledPhraseRepr")]
pub struct LabeledPhrase {
    id: String,
    phrase: Phrase,
    sentiment_class: u8,
    raw_score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LabeledPhraseRepr {
    id: String,
    phrase: Phrase,
    sentiment_class: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_score: Option<f64>,
}

impl LabeledPhrase {
    pub fn new(id: impl Into<String>, phrase: Phrase, sentiment_class: u8, raw_score: Option<f64>) -> Result<Self> {
        let id = id.into();
        if sentiment_class >= SENTIMENT_CLASSES {
            return Err(Error::InvalidInput(format!("phrase {id}: class {sentiment_class} out of range")));
        }
        if let Some(s) = raw_score {
            let expected = sentiment_class_of(&id, s)?;
            if expected != sentiment_class {
                return Err(Error::InvalidInput(format!(
                    "phrase {id}: class {sentiment_class} disagrees with score {s} (bucket {expected})"
                )));
            }
        }
        Ok(Self {
            id,
            phrase,
            sentiment_class,
            raw_score,
        })
    }

    /// Builds the record from a raw score, bucketing it into a class.
    pub fn from_score(id: impl Into<String>, phrase: Phrase, raw_score: f64) -> Result<Self> {
        let id = id.into();
        let class = sentiment_class_of(&id, raw_score)?;
        Self::new(id, phrase, class, Some(raw_score))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phrase(&self) -> &Phrase {
        &self.phrase
    }

    pub fn sentiment_class(&self) -> u8 {
        self.sentiment_class
    }

    pub fn raw_score(&self) -> Option<f64> {
        self.raw_score
    }
}

fn sentiment_class_of(id: &str, score: f64) -> Result<u8> {
    sentiment_class(score).map_err(|_| Error::InvalidInput(format!("phrase {id}: score {score} outside [0, 1]")))
}

impl TryFrom<LabeledPhraseRepr> for LabeledPhrase {
    type Error = Error;

    fn try_from(r: LabeledPhraseRepr) -> Result<Self> {
        LabeledPhrase::new(r.id, r.phrase, r.sentiment_class, r.raw_score)
    }
}

impl From<LabeledPhrase> for LabeledPhraseRepr {
    fn from(p: LabeledPhrase) -> Self {
        Self {
            id: p.id,
            phrase: p.phrase,
            sentiment_class: p.sentiment_class,
            raw_score: p.raw_score,
        }
    }
}

/// The five ways of reducing a layer's token vectors to one phrase vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RepType {
    #[serde(rename = "CLS")]
    Cls,
    HeadToken,
    AvgPhrase,
    AvgAll,
    #[serde(rename = "SEP")]
    Sep,
}

impl RepType {
    pub const ALL: [RepType; 5] = [
        RepType::Cls,
        RepType::HeadToken,
        RepType::AvgPhrase,
        RepType::AvgAll,
        RepType::Sep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RepType::Cls => "CLS",
            RepType::HeadToken => "HeadToken",
            RepType::AvgPhrase => "AvgPhrase",
            RepType::AvgAll => "AvgAll",
            RepType::Sep => "SEP",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rep = match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cls" => RepType::Cls,
            "headtoken" | "headword" | "head" | "ht" => RepType::HeadToken,
            "avgphrase" | "ap" => RepType::AvgPhrase,
            "avgall" | "aa" => RepType::AvgAll,
            "sep" => RepType::Sep,
            _ => return Err(Error::InvalidInput(format!("unknown representation type `{s}`"))),
        };
        Ok(rep)
    }
}

/// How a phrase is presented to an encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputMode {
    PhraseOnly,
    /// The phrase occupies `span` (word indices, half-open) of `context_words`.
    InContext {
        context_words: Vec<String>,
        span: Range<usize>,
    },
}

impl InputMode {
    pub fn in_context(phrase: &Phrase, context_words: Vec<String>, span: Range<usize>) -> Result<Self> {
        if span.start >= span.end || span.end > context_words.len() {
            return Err(Error::InvalidInput(format!(
                "span {span:?} outside context of {} words",
                context_words.len()
            )));
        }
        if context_words[span.clone()] != *phrase.words() {
            return Err(Error::InvalidInput(format!(
                "context words at {span:?} do not match phrase `{phrase}`"
            )));
        }
        Ok(InputMode::InContext { context_words, span })
    }

    /// Places `phrase` at its first occurrence inside `context`.
    pub fn locate(phrase: &Phrase, context: &str) -> Result<Self> {
        let context_words = tokenize(context);
        let n = phrase.len();
        let start = context_words
            .windows(n)
            .position(|w| w == phrase.words())
            .ok_or_else(|| Error::InvalidInput(format!("phrase `{phrase}` does not occur in context `{context}`")))?;
        Self::in_context(phrase, context_words, start..start + n)
    }

    pub fn name(&self) -> &'static str {
        match self {
            InputMode::PhraseOnly => "phrase_only",
            InputMode::InContext { .. } => "in_context",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("law school"), vec!["law", "school"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Vienna ( Austria ) ."),
            vec!["Vienna", "(", "Austria", ")", "."]
        );
        assert_eq!(tokenize("  a\t b\r\n"), vec!["a", "b"]);
    }

    #[test]
    fn phrase_rejects_blank() {
        assert!(matches!(Phrase::new("   "), Err(Error::EmptyPhrase)));
        assert!(Phrase::from_words::<&str>(&[]).is_err());
    }

    #[test]
    fn phrase_text_roundtrips_through_json() {
        let p = Phrase::new("net  profit").unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"net  profit\"");
        let back: Phrase = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.normalized(), "net profit");
    }

    #[test]
    fn pair_needs_score_or_label() {
        let a = Phrase::new("a b").unwrap();
        let b = Phrase::new("b a").unwrap();
        assert!(PhrasePair::new("x", a.clone(), b.clone(), None, None).is_err());
        assert!(PhrasePair::scored("x", a.clone(), b.clone(), 1.5).is_err());
        assert!(PhrasePair::labeled("x", a.clone(), b.clone(), 2).is_err());
        assert!(PhrasePair::scored("x", a, b, 1.0).is_ok());
    }

    #[test]
    fn pair_json_validates() {
        let bad = r#"{"id":"1","source":"a","target":"b","score":-0.1}"#;
        assert!(serde_json::from_str::<PhrasePair>(bad).is_err());
        let good = r#"{"id":"1","source":"a","target":"b","label":1}"#;
        let p: PhrasePair = serde_json::from_str(good).unwrap();
        assert_eq!(p.label(), Some(1));
    }

    #[test]
    fn sentiment_buckets() {
        assert_eq!(sentiment_class(0.0).unwrap(), 0);
        assert_eq!(sentiment_class(0.2).unwrap(), 0);
        assert_eq!(sentiment_class(0.2000001).unwrap(), 1);
        assert_eq!(sentiment_class(0.5).unwrap(), 2);
        assert_eq!(sentiment_class(0.6).unwrap(), 2);
        assert_eq!(sentiment_class(0.8).unwrap(), 3);
        assert_eq!(sentiment_class(1.0).unwrap(), 4);
        assert!(sentiment_class(1.01).is_err());
    }

    #[test]
    fn labeled_phrase_checks_bucket() {
        let p = Phrase::new("good").unwrap();
        assert!(LabeledPhrase::new("1", p.clone(), 4, Some(0.1)).is_err());
        assert_eq!(LabeledPhrase::from_score("1", p, 0.5).unwrap().sentiment_class(), 2);
    }

    #[test]
    fn rep_type_names_roundtrip() {
        assert_eq!(RepType::ALL.len(), 5);
        for rep in RepType::ALL {
            assert_eq!(rep.name().parse::<RepType>().unwrap(), rep);
            let json = serde_json::to_string(&rep).unwrap();
            assert_eq!(json, format!("\"{}\"", rep.name()));
        }
        assert_eq!("head-word".parse::<RepType>().unwrap(), RepType::HeadToken);
    }

    #[test]
    fn in_context_validation() {
        let phrase = Phrase::new("law school").unwrap();
        let mode = InputMode::locate(&phrase, "she went to law school today").unwrap();
        assert_eq!(
            mode,
            InputMode::InContext {
                context_words: tokenize("she went to law school today"),
                span: 3..5
            }
        );
        assert!(InputMode::in_context(&phrase, tokenize("law school"), 0..3).is_err());
        assert!(InputMode::in_context(&phrase, tokenize("school law"), 0..2).is_err());
        assert!(InputMode::locate(&phrase, "school of law").is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_idempotent(text in "[a-z .,()\t\n]{0,40}") {
                let once = tokenize(&text);
                let again = tokenize(&once.join(" "));
                prop_assert_eq!(once, again);
            }
        }
    }
}
