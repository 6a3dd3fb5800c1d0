//! Deterministic transformer-style encoder with hashed, untrained weights.
//!
//! The encoder has no learned parameters. Token embeddings and every weight
//! matrix are drawn from splitmix64 streams keyed by the config seed, so a
//! given `(words, config, mode)` always yields the same layer-wise vectors.
//! It exists so the extraction and analysis pipeline can run end to end
//! without external models.

use std::ops::Range;

use crate::embedding::TokenSpan;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::InputMode;
use crate::rng::{derive_seed_path, tag, SplitMix64};

pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";
pub const CLS_ID: u64 = 1;
pub const SEP_ID: u64 = 2;
pub const LAYER_NORM_EPS: f64 = 1e-5;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the word's UTF-8 bytes, forced odd and at least 3 so data
/// words never collide with the reserved CLS/SEP ids.
pub fn hash_word(word: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in word.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    (h | 1).saturating_add(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_multiplier: usize,
    pub seed: u64,
    pub use_positions: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            layers: 4,
            heads: 2,
            ffn_multiplier: 4,
            seed: 0,
            use_positions: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.heads == 0 || self.ffn_multiplier == 0 {
            return Err(Error::InvalidInput("encoder dim, heads and ffn multiplier must be positive".into()));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::InvalidInput(format!(
                "encoder dim {} not divisible by {} heads",
                self.dim, self.heads
            )));
        }
        if self.layers == 0 {
            return Err(Error::InvalidInput("encoder needs at least one layer".into()));
        }
        Ok(())
    }
}

/// Layer-wise token vectors. `layers[0]` holds the input embeddings,
/// `layers[l]` the output of encoder block `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    pub tokens: Vec<String>,
    pub layers: Vec<Matrix>,
    /// Token positions of the phrase words (one token per word here).
    pub span: TokenSpan,
}

impl TokenMatrix {
    pub fn num_layers(&self) -> usize {
        self.layers.len() - 1
    }
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Query,
    Key,
    Value,
    Output,
    FfnIn,
    FfnOut,
}

struct Block {
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
    wo: Matrix,
    w1: Matrix,
    w2: Matrix,
}

/// An encoder with its weight matrices materialised once.
pub struct ToyEncoder {
    config: EncoderConfig,
    blocks: Vec<Block>,
}

impl ToyEncoder {
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let ff = d * config.ffn_multiplier;
        let blocks = (1..=config.layers)
            .map(|layer| {
                let w = |role: Role, rows: usize, cols: usize| weight_matrix(&config, layer, role, rows, cols);
                Block {
                    wq: w(Role::Query, d, d),
                    wk: w(Role::Key, d, d),
                    wv: w(Role::Value, d, d),
                    wo: w(Role::Output, d, d),
                    w1: w(Role::FfnIn, d, ff),
                    w2: w(Role::FfnOut, ff, d),
                }
            })
            .collect();
        Ok(Self { config, blocks })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn encode(&self, words: &[String], mode: &InputMode) -> Result<TokenMatrix> {
        if words.is_empty() {
            return Err(Error::EmptyPhrase);
        }
        let (body, phrase_words): (&[String], Range<usize>) = match mode {
            InputMode::PhraseOnly => (words, 0..words.len()),
            InputMode::InContext { context_words, span } => {
                if span.end > context_words.len() || context_words[span.clone()] != *words {
                    return Err(Error::InvalidInput("context span does not match phrase words".into()));
                }
                (context_words.as_slice(), span.clone())
            }
        };

        let mut tokens = Vec::with_capacity(body.len() + 2);
        tokens.push(CLS_TOKEN.to_owned());
        tokens.extend(body.iter().cloned());
        tokens.push(SEP_TOKEN.to_owned());

        let mut ids = Vec::with_capacity(tokens.len());
        ids.push(CLS_ID);
        ids.extend(body.iter().map(|w| hash_word(w)));
        ids.push(SEP_ID);

        let mut x = self.input_embeddings(&ids);
        let mut layers = Vec::with_capacity(self.config.layers + 1);
        layers.push(x.clone());
        for block in &self.blocks {
            x = self.apply_block(block, &x);
            layers.push(x.clone());
        }

        let span = TokenSpan::from_words(
            phrase_words.clone().map(|w| (w + 1)..(w + 2)).collect(),
        );
        Ok(TokenMatrix { tokens, layers, span })
    }

    fn input_embeddings(&self, ids: &[u64]) -> Matrix {
        let d = self.config.dim;
        let mut x = Matrix::zeros(ids.len(), d);
        for (pos, &id) in ids.iter().enumerate() {
            let mut stream = SplitMix64::new(derive_seed_path(self.config.seed, &[tag("embedding"), id]));
            let row = x.row_mut(pos);
            for v in row.iter_mut() {
                *v = stream.uniform(-1.0, 1.0);
            }
            if self.config.use_positions {
                for (i, v) in row.iter_mut().enumerate() {
                    *v += sinusoidal_position(pos, i, d);
                }
            }
        }
        x
    }

    fn apply_block(&self, block: &Block, x: &Matrix) -> Matrix {
        let d = self.config.dim;
        let heads = self.config.heads;
        let head_dim = d / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();

        let q = x.matmul(&block.wq);
        let k = x.matmul(&block.wk);
        let v = x.matmul(&block.wv);
        let mut concat = Matrix::zeros(x.rows(), d);
        for h in 0..heads {
            let (lo, hi) = (h * head_dim, (h + 1) * head_dim);
            let qh = q.column_block(lo, hi);
            let kh = k.column_block(lo, hi);
            let vh = v.column_block(lo, hi);
            let mut scores = qh.matmul(&kh.transpose());
            scores.map_inplace(|s| s * scale);
            for i in 0..scores.rows() {
                softmax_inplace(scores.row_mut(i));
            }
            concat.set_column_block(lo, &scores.matmul(&vh));
        }
        let mut h1 = concat.matmul(&block.wo);
        h1.add_assign(x);
        layer_norm_rows(&mut h1, LAYER_NORM_EPS);

        let mut ff = h1.matmul(&block.w1);
        ff.map_inplace(|z| z.max(0.0));
        let mut h2 = ff.matmul(&block.w2);
        h2.add_assign(&h1);
        layer_norm_rows(&mut h2, LAYER_NORM_EPS);
        h2
    }
}

/// Encodes `words` with a freshly built encoder. Prefer [`ToyEncoder`] when
/// encoding many inputs with one config.
pub fn encode(words: &[String], config: &EncoderConfig, mode: &InputMode) -> Result<TokenMatrix> {
    ToyEncoder::new(*config)?.encode(words, mode)
}

fn weight_matrix(config: &EncoderConfig, layer: usize, role: Role, rows: usize, cols: usize) -> Matrix {
    let bound = 1.0 / (config.dim as f64).sqrt();
    let mut stream = SplitMix64::new(derive_seed_path(
        config.seed,
        &[tag("weights"), layer as u64, role as u64],
    ));
    let data = (0..rows * cols).map(|_| stream.uniform(-bound, bound)).collect();
    Matrix::from_vec(rows, cols, data)
}

fn sinusoidal_position(pos: usize, i: usize, dim: usize) -> f64 {
    let pair = (i / 2) * 2;
    let angle = pos as f64 / 10000f64.powf(pair as f64 / dim as f64);
    if i.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    }
}

fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Normalises each row to zero mean and unit variance (gain 1, bias 0).
/// The population variance of an output row is `var / (var + eps)`.
pub fn layer_norm_rows(m: &mut Matrix, eps: f64) {
    let n = m.cols() as f64;
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
}
