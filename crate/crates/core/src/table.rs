//! Tab-separated tables: the `(layer x representation)` grid shared by
//! sweeps, probes and drift, and the merge used by `report`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::RepType;

/// Values indexed by `(layer, rep)`; layers run `0..=num_layers`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    reps: Vec<RepType>,
    values: Vec<Vec<f64>>,
    counts: Vec<Vec<usize>>,
}

impl LayerGrid {
    pub fn new(num_layer_rows: usize, reps: Vec<RepType>) -> Self {
        let width = reps.len();
        Self {
            reps,
            values: vec![vec![f64::NAN; width]; num_layer_rows],
            counts: vec![vec![0; width]; num_layer_rows],
        }
    }

    pub fn reps(&self) -> &[RepType] {
        &self.reps
    }

    /// Number of layer rows, including layer 0.
    pub fn layers(&self) -> usize {
        self.values.len()
    }

    fn column(&self, rep: RepType) -> Option<usize> {
        self.reps.iter().position(|&r| r == rep)
    }

    pub fn get(&self, layer: usize, rep: RepType) -> Option<f64> {
        let c = self.column(rep)?;
        self.values.get(layer).map(|row| row[c])
    }

    pub fn count(&self, layer: usize, rep: RepType) -> Option<usize> {
        let c = self.column(rep)?;
        self.counts.get(layer).map(|row| row[c])
    }

    pub fn set(&mut self, layer: usize, rep: RepType, value: f64, count: usize) {
        let c = self.column(rep).expect("rep present in grid");
        self.values[layer][c] = value;
        self.counts[layer][c] = count;
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, RepType, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .flat_map(move |(l, row)| self.reps.iter().zip(row).map(move |(&r, &v)| (l, r, v)))
    }

    /// Rows are layers, columns are representation types, plus the item
    /// count `n` of the row. Values use the shortest exact decimal form, so
    /// identical grids print identical bytes.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("layer");
        for rep in &self.reps {
            out.push('\t');
            out.push_str(rep.name());
        }
        out.push_str("\tn\n");
        for (layer, (row, counts)) in self.values.iter().zip(&self.counts).enumerate() {
            let _ = write!(out, "{layer}");
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            let n = counts.iter().copied().max().unwrap_or(0);
            let _ = writeln!(out, "\t{n}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Format("empty grid".into()))?
            .split('\t')
            .collect();
        if header.len() < 3 || header[0] != "layer" || header[header.len() - 1] != "n" {
            return Err(Error::Format("grid header must be `layer<TAB>reps...<TAB>n`".into()));
        }
        let reps = header[1..header.len() - 1]
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<RepType>>>()?;
        let mut grid = LayerGrid::new(0, reps.clone());
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != header.len() {
                return Err(Error::Format(format!("grid row {} has {} fields", i + 1, fields.len())));
            }
            let layer: usize = fields[0]
                .parse()
                .map_err(|_| Error::Format(format!("bad layer `{}`", fields[0])))?;
            if layer != i {
                return Err(Error::Format(format!("grid row {} labelled layer {layer}", i + 1)));
            }
            let n: usize = fields[fields.len() - 1]
                .parse()
                .map_err(|_| Error::Format(format!("bad count `{}`", fields[fields.len() - 1])))?;
            let row = fields[1..fields.len() - 1]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Format(format!("bad value `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            grid.values.push(row);
            grid.counts.push(vec![n; reps.len()]);
        }
        Ok(grid)
    }
}

/// Merges tab-separated tables that share one header. The output header is
/// `table` followed by the shared header; each data row is prefixed with its
/// table's label. Stripping the first column gives exactly the union
/// (multiset) of the input rows.
pub fn merge_tables(tables: &[(String, String)]) -> Result<String> {
    let mut header: Option<&str> = None;
    let mut out = String::new();
    for (label, text) in tables {
        if label.contains('\t') || label.contains('\n') {
            return Err(Error::InvalidInput(format!("table label `{label}` contains a tab or newline")));
        }
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let h = lines
            .next()
            .ok_or_else(|| Error::Format(format!("table `{label}` is empty")))?;
        match header {
            None => {
                header = Some(h);
                let _ = writeln!(out, "table\t{h}");
            }
            Some(prev) if prev != h => {
                return Err(Error::Format(format!(
                    "table `{label}` header `{h}` differs from `{prev}`"
                )));
            }
            Some(_) => {}
        }
        for line in lines.filter(|l| !l.is_empty()) {
            let _ = writeln!(out, "{label}\t{line}");
        }
    }
    if header.is_none() {
        return Err(Error::InvalidInput("no tables to merge".into()));
    }
    Ok(out)
}
