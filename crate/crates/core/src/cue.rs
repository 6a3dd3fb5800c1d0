//! Word-swap cue analysis for sentence-pair datasets.
//!
//! For a pair built by swapping words, the first word where the sentences
//! diverge is looked up again in the second sentence; the index difference,
//! divided by the longer sentence length, is the relative swapping distance.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::pearson;
use crate::model::SentencePair;

/// Index difference of the first swapping word, or `None` when the
/// sequences agree on their common prefix or the diverging word of `s1`
/// does not reappear in `s2` at or after the divergence point.
pub fn first_swap_distance<S: AsRef<str>>(s1: &[S], s2: &[S]) -> Option<usize> {
    let i = s1
        .iter()
        .zip(s2)
        .position(|(a, b)| a.as_ref() != b.as_ref())?;
    let w = s1[i].as_ref();
    let j = s2[i..].iter().position(|t| t.as_ref() == w)? + i;
    Some(j - i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapStats {
    pub item_id: String,
    pub dist_swap: usize,
    pub l1: usize,
    pub l2: usize,
    pub dist_relative: f64,
    pub label: u8,
    pub prediction: Option<u8>,
}

pub fn relative_swap_distance(pair: &SentencePair) -> Option<SwapStats> {
    let dist_swap = first_swap_distance(pair.s1(), pair.s2())?;
    let (l1, l2) = (pair.s1().len(), pair.s2().len());
    Some(SwapStats {
        item_id: pair.id().to_string(),
        dist_swap,
        l1,
        l2,
        dist_relative: dist_swap as f64 / l1.max(l2) as f64,
        label: pair.label(),
        prediction: None,
    })
}

/// Positive/negative counts in equal-width bins over `[0, 1]`. The last bin
/// is closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    width: f64,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl Histogram {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::InvalidInput(format!("bin width {width} outside (0, 1]")));
        }
        // Tolerate widths like 0.1 whose reciprocal is not exact.
        let bins = ((1.0 / width) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            width,
            pos: vec![0; bins],
            neg: vec![0; bins],
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn num_bins(&self) -> usize {
        self.pos.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        // The nudge keeps values such as 0.3 / 0.1 = 2.9999999999999996 in
        // the bin whose lower edge they sit on.
        let i = (x / self.width + 1e-9).floor();
        (i.max(0.0) as usize).min(self.num_bins() - 1)
    }

    pub fn add(&mut self, x: f64, positive: bool) {
        let b = self.bin_of(x);
        if positive {
            self.pos[b] += 1;
        } else {
            self.neg[b] += 1;
        }
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let round = |v: f64| (v * 1e9).round() / 1e9;
        let low = round(bin as f64 * self.width);
        let high = round(((bin + 1) as f64 * self.width).min(1.0));
        (low, high)
    }

    pub fn pos_count(&self, bin: usize) -> usize {
        self.pos[bin]
    }

    pub fn neg_count(&self, bin: usize) -> usize {
        self.neg[bin]
    }

    pub fn total(&self) -> usize {
        self.pos.iter().sum::<usize>() + self.neg.iter().sum::<usize>()
    }

    /// `None` for an empty bin.
    pub fn positive_rate(&self, bin: usize) -> Option<f64> {
        let n = self.pos[bin] + self.neg[bin];
        (n > 0).then(|| self.pos[bin] as f64 / n as f64)
    }

    /// Merges counts from a histogram with the same binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.num_bins() != other.num_bins() || self.width != other.width {
            return Err(Error::InvalidInput("histograms have different binning".into()));
        }
        for b in 0..self.num_bins() {
            self.pos[b] += other.pos[b];
            self.neg[b] += other.neg[b];
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_low\tbin_high\tpos_count\tneg_count\n");
        for b in 0..self.num_bins() {
            let (lo, hi) = self.edges(b);
            let _ = writeln!(out, "{lo}\t{hi}\t{}\t{}", self.pos[b], self.neg[b]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub total: usize,
    pub defined: usize,
    pub undefined: usize,
    /// Correlation between relative swapping distance and the gold label;
    /// `None` when either is constant over the defined items.
    pub point_biserial: Option<f64>,
    pub label_positive_rate: Vec<Option<f64>>,
    pub prediction_positive_rate: Option<Vec<Option<f64>>>,
}

impl AuditSummary {
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut out = String::from("key\tvalue\n");
        let _ = writeln!(out, "total\t{}", self.total);
        let _ = writeln!(out, "defined\t{}", self.defined);
        let _ = writeln!(out, "undefined\t{}", self.undefined);
        let _ = writeln!(out, "point_biserial\t{}", opt(self.point_biserial));
        for (b, r) in self.label_positive_rate.iter().enumerate() {
            let _ = writeln!(out, "label_positive_rate_bin{b}\t{}", opt(*r));
        }
        if let Some(rates) = &self.prediction_positive_rate {
            for (b, r) in rates.iter().enumerate() {
                let _ = writeln!(out, "prediction_positive_rate_bin{b}\t{}", opt(*r));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub stats: Vec<SwapStats>,
    pub labels: Histogram,
    pub predictions: Option<Histogram>,
    pub summary: AuditSummary,
}

/// Swap statistics, label and prediction histograms, and a summary. An empty
/// prediction slice is treated as no predictions.
pub fn audit(pairs: &[SentencePair], predictions: Option<&[u8]>, bin_width: f64) -> Result<Audit> {
    let predictions = predictions.filter(|p| !p.is_empty());
    if let Some(p) = predictions {
        if p.len() != pairs.len() {
            return Err(Error::Misaligned {
                items: pairs.len(),
                predictions: p.len(),
            });
        }
        if let Some(&bad) = p.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidInput(format!("prediction {bad} is not 0 or 1")));
        }
    }

    let mut labels = Histogram::new(bin_width)?;
    let mut pred_hist = predictions.map(|_| labels.clone());
    let mut stats = Vec::new();
    for (k, pair) in pairs.iter().enumerate() {
        let Some(mut s) = relative_swap_distance(pair) else {
            continue;
        };
        labels.add(s.dist_relative, s.label == 1);
        if let (Some(p), Some(h)) = (predictions, pred_hist.as_mut()) {
            s.prediction = Some(p[k]);
            h.add(s.dist_relative, p[k] == 1);
        }
        stats.push(s);
    }

    let xs: Vec<f64> = stats.iter().map(|s| s.dist_relative).collect();
    let ys: Vec<f64> = stats.iter().map(|s| f64::from(s.label)).collect();
    let point_biserial = match pearson(&xs, &ys) {
        Ok(r) => Some(r),
        Err(Error::ZeroVariance(_) | Error::TooFewValues { .. }) => None,
        Err(e) => return Err(e),
    };
    let rates = |h: &Histogram| (0..h.num_bins()).map(|b| h.positive_rate(b)).collect::<Vec<_>>();
    let summary = AuditSummary {
        total: pairs.len(),
        defined: stats.len(),
        undefined: pairs.len() - stats.len(),
        point_biserial,
        label_positive_rate: rates(&labels),
        prediction_positive_rate: pred_hist.as_ref().map(rates),
    };
    Ok(Audit {
        stats,
        labels,
        predictions: pred_hist,
        summary,
    })
}
