//! Command-line entry point.
//!
//! ```text
//! phrase-probe [--seed N] [--workers N] [--flags-from FILE] <command> ...
//!
//!   prep    load and filter a dataset, write it with a manifest header
//!   encode  run the toy encoder over a prepared dataset and write a dump
//!   sweep   similarity-correlation grid over a dump
//!   probe   paraphrase-probe accuracy grid over a dump
//!   audit   swap-distance cue audit of a paraphrase file
//!   drift   mean cosine between two dumps of the same inputs
//!   report  merge tables into one
//! ```
//!
//! Failures print a single `error: <class>: <message>` line to stderr.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::cue::{audit, Audit};
use crate::dataset::{
    build_ppdb_sets, filter_abba, filter_by_length, load_bird, load_paws, load_phrase_pairs, load_sst,
    read_dataset, split_validation, write_dataset, BirdColumns, Dataset, OverlapSpec,
};
use crate::drift::compare_dumps;
use crate::embedding::{encode_items, read_dump, write_dump, Dump, DumpManifest, EncodeInput, ExtractOptions, Side};
use crate::encoder::{EncoderConfig, ToyEncoder};
use crate::error::{Error, Result};
use crate::metrics::{correlation_sweep_with, Statistic, ZeroVariancePolicy};
use crate::model::{InputMode, Phrase, PhrasePair, RepType, SentencePair};
use crate::probe::{
    evaluate, featurize_pair_with, train_linear, train_probe, write_checkpoint, PairFeatures, ProbeConfig,
};
use crate::rng::{derive_seed, derive_seed_path, tag};
use crate::table::{merge_tables, LayerGrid};

pub const WORKERS_ENV: &str = "PHRASE_PROBE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "phrase-probe", version, about = "Layer-wise phrase representation probing")]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for per-cell work (default: env PHRASE_PROBE_WORKERS,
    /// then available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetSource {
    /// Scored bigram pairs (tab-separated with a header row).
    Bird,
    /// Paraphrase phrase pairs plus sampled negatives.
    Ppdb,
    /// Labelled sentence pairs (id, sentence1, sentence2, label).
    Paws,
    /// Sentiment treebank phrases (dictionary + sentiment labels).
    Sst,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and filter a dataset, then write it as JSON lines with a manifest.
    Prep(PrepArgs),
    /// Encode a prepared dataset with the toy encoder and write a dump.
    Encode(EncodeArgs),
    /// Correlate pair cosines with human scores at every (layer, rep).
    Sweep(SweepArgs),
    /// Train and test a paraphrase probe at every (layer, rep).
    Probe(ProbeArgs),
    /// Swap-distance cue audit of a paraphrase file.
    Audit(AuditArgs),
    /// Mean cosine similarity between two dumps of the same inputs.
    Drift(DriftArgs),
    /// Merge tab-separated tables that share a header.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct PrepArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetSource,
    /// Main input file (bird, ppdb, paws).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// SST `dictionary.txt`.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// SST `sentiment_labels.txt`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// `abba` (bird, ppdb), `exact:F` / `atleast:F` (ppdb), `length:N` (sst).
    #[arg(long)]
    pub filter: Option<String>,
    /// Phrases to draw ppdb negatives from, one per line (default: every
    /// phrase in the positives).
    #[arg(long)]
    pub universe: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub neg_ratio: f64,
    #[arg(long)]
    pub source_col: Option<String>,
    #[arg(long)]
    pub target_col: Option<String>,
    #[arg(long)]
    pub score_col: Option<String>,
    /// Lowercase all text before filtering.
    #[arg(long)]
    pub lowercase: bool,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct EncodeArgs {
    /// Prepared dataset (output of `prep`).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 4)]
    pub ffn_multiplier: usize,
    #[arg(long)]
    pub no_positions: bool,
    /// Comma-separated representation types (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub reps: Vec<RepType>,
    /// Average only the real words for AvgAll.
    #[arg(long)]
    pub avg_all_excludes_specials: bool,
    /// Tab-separated `id`, `side`, `context`; listed phrases are encoded
    /// inside their context sentence.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "pearson")]
    pub statistic: Statistic,
    /// Fail on constant cells instead of writing them as NaN.
    #[arg(long)]
    pub strict: bool,
    /// Output table (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "concat")]
    pub features: PairFeatures,
    #[arg(long, default_value_t = 256)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Fraction of the training split held out for early stopping.
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    /// Write one checkpoint per cell into this directory.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AuditArgs {
    /// Paraphrase pairs to audit (tab-separated: id, sentence1, sentence2, label).
    #[arg(long)]
    pub pairs: PathBuf,
    /// One 0/1 prediction per line, aligned with `--pairs`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub bin_width: f64,
    /// Fit a logistic classifier on relative swapping distance alone.
    #[arg(long)]
    pub train_linear: bool,
    /// Pairs to fit the linear classifier on (default: `--pairs`).
    #[arg(long)]
    pub train_pairs: Option<PathBuf>,
    /// Directory for `labels.tsv`, `predictions.tsv` and `summary.tsv`
    /// (default: summary on stdout).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DriftArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Tables to merge, as `PATH` or `LABEL=PATH`.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Replaces every `--flags-from FILE` (or `--flags-from=FILE`) with the
/// flags in FILE. Each non-empty line not starting with `#` holds one flag,
/// optionally followed by whitespace and its value.
pub fn expand_flags_from(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        let path = if s == "--flags-from" {
            let p = iter
                .next()
                .ok_or_else(|| Error::InvalidInput("--flags-from needs a file".into()))?;
            PathBuf::from(p)
        } else if let Some(p) = s.strip_prefix("--flags-from=") {
            PathBuf::from(p)
        } else {
            out.push(arg);
            continue;
        };
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once(char::is_whitespace) {
                Some((flag, value)) => {
                    out.push(flag.into());
                    out.push(value.trim().into());
                }
                None => out.push(line.into()),
            }
        }
    }
    Ok(out)
}

fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::InvalidInput("--workers must be at least 1".into()))
        } else {
            Ok(n)
        };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("{WORKERS_ENV}=`{v}` is not a positive integer")));
    }
    Ok(std::thread::available_parallelism().map_or(1, usize::from))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match expand_flags_from(argv.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> i32 {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error: {}: {msg}", e.class());
    1
}

pub fn execute(cli: Cli) -> Result<()> {
    let workers = resolve_workers(cli.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?;
    let seed = cli.seed;
    pool.install(|| match cli.command {
        Command::Prep(a) => prep(&a, seed),
        Command::Encode(a) => encode(&a, seed),
        Command::Sweep(a) => sweep(&a),
        Command::Probe(a) => probe(&a, seed),
        Command::Audit(a) => audit_cmd(&a, seed),
        Command::Drift(a) => drift(&a),
        Command::Report(a) => report(&a),
    })
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let p = value
        .as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("{flag} is required here")))?;
    require_file(p)?;
    Ok(p)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_universe(path: &Path) -> Result<Vec<Phrase>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Phrase::new(l).map_err(|e| Error::record(path, i + 1, e.to_string())))
        .collect()
}

fn prep(a: &PrepArgs, seed: u64) -> Result<()> {
    let filter = a.filter.as_deref().map(str::trim).filter(|f| !f.is_empty());
    let (data, source) = match a.dataset {
        DatasetSource::Bird => {
            let input = required(&a.input, "--input")?;
            let mut cols = BirdColumns::default();
            if let Some(c) = &a.source_col {
                cols.source = c.clone();
            }
            if let Some(c) = &a.target_col {
                cols.target = c.clone();
            }
            if let Some(c) = &a.score_col {
                cols.score = c.clone();
            }
            let mut pairs = load_bird(input, &cols)?;
            if a.lowercase {
                pairs = pairs.iter().map(PhrasePair::to_lowercase).collect();
            }
            let pairs = match filter {
                None => pairs,
                Some(f) if f.eq_ignore_ascii_case("abba") => filter_abba(&pairs),
                Some(f) => {
                    let spec: OverlapSpec = f.parse()?;
                    pairs.into_iter().filter(|p| spec.accepts(p.source(), p.target())).collect()
                }
            };
            (Dataset::PhrasePairs(pairs), input.display().to_string())
        }
        DatasetSource::Ppdb => {
            let input = required(&a.input, "--input")?;
            let mut positives = load_phrase_pairs(
                input,
                a.source_col.as_deref().unwrap_or("source"),
                a.target_col.as_deref().unwrap_or("target"),
                a.score_col.as_deref(),
            )?;
            if a.lowercase {
                positives = positives.iter().map(PhrasePair::to_lowercase).collect();
            }
            let mut universe = match &a.universe {
                Some(p) => {
                    require_file(p)?;
                    read_universe(p)?
                }
                None => positives
                    .iter()
                    .flat_map(|p| [p.source().clone(), p.target().clone()])
                    .collect(),
            };
            if a.lowercase {
                universe = universe.iter().map(Phrase::to_lowercase).collect();
            }
            let spec = filter.map(str::parse::<OverlapSpec>).transpose()?;
            let prep_seed = derive_seed(seed, tag("prep"));
            let pairs = build_ppdb_sets(&positives, &universe, a.neg_ratio, prep_seed, spec.as_ref())?;
            (Dataset::PhrasePairs(pairs), input.display().to_string())
        }
        DatasetSource::Paws => {
            let input = required(&a.input, "--input")?;
            if filter.is_some() {
                return Err(Error::InvalidInput("paws takes no --filter".into()));
            }
            let mut pairs = load_paws(input)?;
            if a.lowercase {
                pairs = pairs.iter().map(SentencePair::to_lowercase).collect();
            }
            (Dataset::SentencePairs(pairs), input.display().to_string())
        }
        DatasetSource::Sst => {
            let dict = required(&a.dictionary, "--dictionary")?;
            let labels = required(&a.labels, "--labels")?;
            let items = load_sst(dict, labels)?;
            let items = match filter {
                None => items,
                Some(f) => {
                    let n: usize = f
                        .strip_prefix("length:")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| Error::InvalidInput(format!("sst filter must be `length:N`, got `{f}`")))?;
                    filter_by_length(&items, n)
                }
            };
            (Dataset::LabeledPhrases(items), dict.display().to_string())
        }
    };
    let name = a
        .name
        .clone()
        .unwrap_or_else(|| format!("{:?}", a.dataset).to_lowercase());
    let seed_used = (a.dataset == DatasetSource::Ppdb).then_some(seed);
    let manifest = data.manifest(&name, &source, filter.unwrap_or("none"), seed_used);
    write_dataset(&a.output, &manifest, &data)?;
    println!("{name}\t{}", data.len());
    Ok(())
}

/// `(id, side) -> context sentence`.
fn read_contexts(path: &Path) -> Result<HashMap<(String, Side), String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        if fields.len() != 3 {
            return Err(Error::record(path, i + 1, "expected `id<TAB>side<TAB>context`"));
        }
        let side: Side = fields[1].trim().parse().map_err(|e: Error| Error::record(path, i + 1, e.to_string()))?;
        out.insert((fields[0].trim().to_owned(), side), fields[2].to_owned());
    }
    Ok(out)
}

fn encode(a: &EncodeArgs, seed: u64) -> Result<()> {
    require_file(&a.dataset)?;
    let config = EncoderConfig {
        dim: a.dim,
        layers: a.layers,
        heads: a.heads,
        ffn_multiplier: a.ffn_multiplier,
        seed: derive_seed(seed, tag("encoder")),
        use_positions: !a.no_positions,
    };
    let encoder = ToyEncoder::new(config)?;
    let contexts = match &a.contexts {
        Some(p) => {
            require_file(p)?;
            read_contexts(p)?
        }
        None => HashMap::new(),
    };
    let reps = if a.reps.is_empty() { RepType::ALL.to_vec() } else { a.reps.clone() };

    let (_, data) = read_dataset(&a.dataset)?;
    let mut items: Vec<(String, Side, Phrase)> = Vec::new();
    match &data {
        Dataset::PhrasePairs(v) => {
            for p in v {
                items.push((p.id().into(), Side::Source, p.source().clone()));
                items.push((p.id().into(), Side::Target, p.target().clone()));
            }
        }
        Dataset::SentencePairs(v) => {
            for p in v {
                items.push((p.id().into(), Side::S1, p.s1_phrase().clone()));
                items.push((p.id().into(), Side::S2, p.s2_phrase().clone()));
            }
        }
        Dataset::LabeledPhrases(v) => {
            for p in v {
                items.push((p.id().into(), Side::Single, p.phrase().clone()));
            }
        }
    }
    let inputs = items
        .into_iter()
        .map(|(item_id, side, phrase)| {
            let mode = match contexts.get(&(item_id.clone(), side)) {
                Some(ctx) => InputMode::locate(&phrase, ctx)?,
                None => InputMode::PhraseOnly,
            };
            Ok(EncodeInput {
                item_id,
                side,
                words: phrase.words().to_vec(),
                mode,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let opts = ExtractOptions {
        avg_all_includes_specials: !a.avg_all_excludes_specials,
    };
    let records = encode_items(&encoder, &inputs, &reps, opts)?;
    let mut manifest = DumpManifest::new(
        format!("toy-d{}-l{}-h{}", a.dim, a.layers, a.heads),
        a.layers,
        a.dim,
        reps,
    );
    manifest.seed = Some(seed);
    if !contexts.is_empty() {
        manifest.input_mode = "in_context".into();
    }
    write_dump(&manifest, &records, &a.output)?;
    println!("records\t{}", records.len());
    Ok(())
}

fn phrase_pairs(path: &Path) -> Result<Vec<PhrasePair>> {
    require_file(path)?;
    match read_dataset(path)? {
        (_, Dataset::PhrasePairs(v)) => Ok(v),
        (m, _) => Err(Error::InvalidInput(format!(
            "{} holds {:?}, expected phrase pairs",
            path.display(),
            m.kind
        ))),
    }
}

fn open_dump(path: &Path) -> Result<Dump> {
    require_file(path)?;
    read_dump(path)
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let pairs = phrase_pairs(&a.dataset)?;
    let dump = open_dump(&a.dump)?;
    let policy = if a.strict {
        ZeroVariancePolicy::Error
    } else {
        ZeroVariancePolicy::Undefined
    };
    let result = correlation_sweep_with(&dump, &pairs, a.statistic, policy)?;
    let undefined: Vec<String> = result
        .grid
        .cells()
        .filter(|(_, _, v)| v.is_nan())
        .map(|(l, r, _)| format!("{l}/{r}"))
        .collect();
    if !undefined.is_empty() {
        eprintln!("warning: constant cosines, correlation undefined at {}", undefined.join(" "));
    }
    emit(&result.to_tsv(), a.output.as_deref())
}

fn pair_features(
    dump: &Dump,
    pairs: &[PhrasePair],
    layer: usize,
    rep: RepType,
    mode: PairFeatures,
) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for p in pairs {
        let get = |side| {
            dump.get(p.id(), side, layer, rep)
                .map(|v| v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>())
                .ok_or_else(|| Error::MissingRecords {
                    count: 1,
                    first: vec![format!("({}/{side}, layer {layer}, {rep})", p.id())],
                })
        };
        xs.push(featurize_pair_with(&get(Side::Source)?, &get(Side::Target)?, mode)?);
        ys.push(
            p.label()
                .ok_or_else(|| Error::InvalidInput(format!("pair {} has no label", p.id())))?,
        );
    }
    Ok((xs, ys))
}

fn probe(a: &ProbeArgs, seed: u64) -> Result<()> {
    let pairs = phrase_pairs(&a.dataset)?;
    let dump = open_dump(&a.dump)?;
    if let Some(dir) = &a.checkpoint_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let (train_all, test) = split_validation(&pairs, |p| p.id(), a.test_fraction, derive_seed(seed, tag("test-split")))?;
    let (train, val) = split_validation(&train_all, |p| p.id(), a.val_fraction, derive_seed(seed, tag("val-split")))?;
    if test.is_empty() {
        return Err(Error::InvalidInput("test split is empty".into()));
    }

    let m = dump.manifest();
    let reps = m.sorted_reps();
    let cells: Vec<(usize, RepType)> = (0..=m.num_layers)
        .flat_map(|l| reps.iter().map(move |&r| (l, r)))
        .collect();
    let accuracies = cells
        .par_iter()
        .map(|&(layer, rep)| {
            let (tx, ty) = pair_features(&dump, &train, layer, rep, a.features)?;
            let (vx, vy) = pair_features(&dump, &val, layer, rep, a.features)?;
            let (sx, sy) = pair_features(&dump, &test, layer, rep, a.features)?;
            let config = ProbeConfig {
                input_dim: a.features.output_dim(m.dim),
                hidden: a.hidden,
                learning_rate: a.lr,
                weight_decay: a.weight_decay,
                batch_size: a.batch_size,
                max_epochs: a.epochs,
                patience: a.patience,
                seed: derive_seed_path(seed, &[tag("probe"), layer as u64, rep.index() as u64]),
                ..ProbeConfig::new(1)
            };
            let model = train_probe(&tx, &ty, &vx, &vy, &config)?;
            if let Some(dir) = &a.checkpoint_dir {
                write_checkpoint(&model, &dir.join(format!("probe-l{layer}-{rep}.jsonl")))?;
            }
            evaluate(&model.mlp, &sx, &sy)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut grid = LayerGrid::new(m.num_layers + 1, reps);
    for (&(layer, rep), acc) in cells.iter().zip(accuracies) {
        grid.set(layer, rep, acc, test.len());
    }
    emit(&grid.to_tsv(), a.output.as_deref())
}

fn read_predictions(path: &Path) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Error::record(path, i + 1, format!("prediction `{other}` is not 0 or 1"))),
        })
        .collect()
}

fn linear_accuracy(train: &Audit, test: &Audit, seed: u64) -> Result<f64> {
    let xs: Vec<f64> = train.stats.iter().map(|s| s.dist_relative).collect();
    let ys: Vec<u8> = train.stats.iter().map(|s| s.label).collect();
    let model = train_linear(&xs, &ys, &ProbeConfig::linear().with_seed(derive_seed(seed, tag("linear"))))?;
    let tx: Vec<f64> = test.stats.iter().map(|s| s.dist_relative).collect();
    let ty: Vec<u8> = test.stats.iter().map(|s| s.label).collect();
    model.accuracy(&tx, &ty)
}

fn audit_cmd(a: &AuditArgs, seed: u64) -> Result<()> {
    require_file(&a.pairs)?;
    let predictions = match &a.predictions {
        Some(p) => {
            require_file(p)?;
            Some(read_predictions(p)?)
        }
        None => None,
    };
    if let Some(p) = &a.train_pairs {
        require_file(p)?;
    }
    let pairs = load_paws(&a.pairs)?;
    let result = audit(&pairs, predictions.as_deref(), a.bin_width)?;
    let mut summary = result.summary.to_tsv();
    if a.train_linear {
        let acc = match &a.train_pairs {
            Some(p) => linear_accuracy(&audit(&load_paws(p)?, None, a.bin_width)?, &result, seed)?,
            None => linear_accuracy(&result, &result, seed)?,
        };
        summary.push_str(&format!("linear_accuracy\t{acc}\n"));
    }
    match &a.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            emit(&result.labels.to_tsv(), Some(&dir.join("labels.tsv")))?;
            if let Some(h) = &result.predictions {
                emit(&h.to_tsv(), Some(&dir.join("predictions.tsv")))?;
            }
            emit(&summary, Some(&dir.join("summary.tsv")))?;
            print!("{summary}");
            Ok(())
        }
        None => emit(&summary, None),
    }
}

fn drift(a: &DriftArgs) -> Result<()> {
    let da = open_dump(&a.a)?;
    let db = open_dump(&a.b)?;
    emit(&compare_dumps(&da, &db)?.to_tsv(), a.output.as_deref())
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut tables = Vec::with_capacity(a.inputs.len());
    for spec in &a.inputs {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (l.to_owned(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let label = p
                    .file_stem()
                    .map_or_else(|| spec.clone(), |s| s.to_string_lossy().into_owned());
                (label, p)
            }
        };
        require_file(&path)?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        tables.push((label, text));
    }
    emit(&merge_tables(&tables)?, a.output.as_deref())
}
