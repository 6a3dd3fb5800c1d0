//! Cosine similarity, Pearson and Spearman correlation, and the layer-wise
//! similarity-correlation sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::embedding::{Dump, RecordKey, Side};
use crate::error::{Error, Result};
use crate::model::{PhrasePair, RepType};
use crate::table::LayerGrid;

/// `dot(u, v) / (|u| |v|)`, clamped to `[-1, 1]`. Zero vectors are an error.
pub fn cosine<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if !(uv.is_finite() && uu.is_finite() && vv.is_finite()) {
        return Err(Error::NonFinite("cosine input".into()));
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    // sqrt of the product keeps cosine(u, u) == 1 and cosine(u, -u) == -1 exactly.
    Ok((uv / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

fn check_pair_input(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    Ok(())
}

/// Product-moment correlation, computed with centred two-pass sums.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair_input(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first argument".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second argument".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of average-tied ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair_input(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    #[default]
    Pearson,
    Spearman,
    Accuracy,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Pearson => "pearson",
            Statistic::Spearman => "spearman",
            Statistic::Accuracy => "accuracy",
        }
    }

    pub fn correlate(self, xs: &[f64], ys: &[f64]) -> Result<f64> {
        match self {
            Statistic::Pearson => pearson(xs, ys),
            Statistic::Spearman => spearman(xs, ys),
            Statistic::Accuracy => Err(Error::InvalidInput("accuracy is not a correlation statistic".into())),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Statistic::Pearson),
            "spearman" => Ok(Statistic::Spearman),
            "accuracy" => Ok(Statistic::Accuracy),
            _ => Err(Error::InvalidInput(format!("unknown statistic `{s}`"))),
        }
    }
}

/// A statistic per `(layer, rep)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub statistic: Statistic,
    pub grid: LayerGrid,
}

impl SweepResult {
    pub fn get(&self, layer: usize, rep: RepType) -> Option<f64> {
        self.grid.get(layer, rep)
    }

    pub fn to_tsv(&self) -> String {
        self.grid.to_tsv()
    }
}

const MAX_REPORTED: usize = 10;

/// Keys `(item, side, layer, rep)` a sweep over `pairs` needs but `dump`
/// lacks, in deterministic order.
pub fn missing_pair_records(dump: &Dump, pairs: &[PhrasePair]) -> Vec<RecordKey> {
    let m = dump.manifest();
    let mut missing = Vec::new();
    for pair in pairs {
        for layer in 0..=m.num_layers {
            for rep in m.sorted_reps() {
                for side in [Side::Source, Side::Target] {
                    let key = RecordKey {
                        item_id: pair.id().to_owned(),
                        side,
                        layer,
                        rep,
                    };
                    if !dump.contains_key(&key) {
                        missing.push(key);
                    }
                }
            }
        }
    }
    missing
}

/// What a sweep does with a cell whose cosines (or scores) are all equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroVariancePolicy {
    #[default]
    Error,
    /// Record the cell as NaN. Layer-0 CLS and SEP vectors do not depend on
    /// the phrase, so those cells are always constant.
    Undefined,
}

/// For every `(layer, rep)`: correlation between the cosine of each pair's
/// source and target vectors and the pair's human score.
pub fn correlation_sweep(dump: &Dump, pairs: &[PhrasePair], statistic: Statistic) -> Result<SweepResult> {
    correlation_sweep_with(dump, pairs, statistic, ZeroVariancePolicy::Error)
}

pub fn correlation_sweep_with(
    dump: &Dump,
    pairs: &[PhrasePair],
    statistic: Statistic,
    zero_variance: ZeroVariancePolicy,
) -> Result<SweepResult> {
    if statistic == Statistic::Accuracy {
        return Err(Error::InvalidInput("correlation sweep needs pearson or spearman".into()));
    }
    let scores = pairs
        .iter()
        .map(|p| {
            p.score()
                .ok_or_else(|| Error::InvalidInput(format!("pair {} has no similarity score", p.id())))
        })
        .collect::<Result<Vec<f64>>>()?;
    if pairs.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: pairs.len(),
        });
    }
    let missing = missing_pair_records(dump, pairs);
    if !missing.is_empty() {
        return Err(Error::MissingRecords {
            count: missing.len(),
            first: missing.iter().take(MAX_REPORTED).map(ToString::to_string).collect(),
        });
    }

    let m = dump.manifest();
    let reps = m.sorted_reps();
    let cells: Vec<(usize, RepType)> = (0..=m.num_layers)
        .flat_map(|l| reps.iter().map(move |&r| (l, r)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(layer, rep)| {
            let sims = pairs
                .iter()
                .map(|p| {
                    let a = dump.get(p.id(), Side::Source, layer, rep).expect("checked above");
                    let b = dump.get(p.id(), Side::Target, layer, rep).expect("checked above");
                    cosine(a, b).map_err(|e| Error::InvalidInput(format!("pair {} layer {layer} {rep}: {e}", p.id())))
                })
                .collect::<Result<Vec<f64>>>()?;
            match statistic.correlate(&sims, &scores) {
                Err(Error::ZeroVariance(_)) if zero_variance == ZeroVariancePolicy::Undefined => Ok(f64::NAN),
                Err(Error::ZeroVariance(what)) => Err(Error::ZeroVariance(format!("layer {layer} {rep}: {what}"))),
                other => other,
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut grid = LayerGrid::new(m.num_layers + 1, reps);
    for (&(layer, rep), v) in cells.iter().zip(values) {
        grid.set(layer, rep, v, pairs.len());
    }
    Ok(SweepResult { statistic, grid })
}
