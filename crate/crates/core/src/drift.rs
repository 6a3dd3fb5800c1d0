//! Representation drift between two dumps of the same inputs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::embedding::{Dump, EmbeddingRecord, RecordKey};
use crate::error::{Error, Result};
use crate::metrics::cosine;
use crate::model::RepType;
use crate::table::LayerGrid;

const MAX_REPORTED: usize = 10;

/// Mean cosine similarity per `(layer, rep)` cell; `n` counts the vectors
/// compared in each cell.
pub type DriftGrid = LayerGrid;

fn check_manifests(a: &Dump, b: &Dump) -> Result<()> {
    let (ma, mb) = (a.manifest(), b.manifest());
    if ma.dim != mb.dim {
        return Err(Error::ManifestMismatch(format!("dim {} vs {}", ma.dim, mb.dim)));
    }
    if ma.num_layers != mb.num_layers {
        return Err(Error::ManifestMismatch(format!(
            "num_layers {} vs {}",
            ma.num_layers, mb.num_layers
        )));
    }
    if ma.sorted_reps() != mb.sorted_reps() {
        return Err(Error::ManifestMismatch("representation types differ".into()));
    }
    Ok(())
}

/// Compares two dumps with identical manifests and key sets. Each cell is
/// the mean over items and sides of `cosine(vec_a, vec_b)`.
pub fn compare_dumps(a: &Dump, b: &Dump) -> Result<DriftGrid> {
    check_manifests(a, b)?;
    let keys_a: BTreeSet<&RecordKey> = a.keys().collect();
    let keys_b: BTreeSet<&RecordKey> = b.keys().collect();
    if keys_a != keys_b {
        let offenders: Vec<&&RecordKey> = keys_a.symmetric_difference(&keys_b).collect();
        return Err(Error::KeyMismatch {
            count: offenders.len(),
            first: offenders.iter().take(MAX_REPORTED).map(|k| k.to_string()).collect(),
        });
    }

    let mut cells: BTreeMap<(usize, RepType), Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in a.records() {
        cells.entry((r.layer, r.rep)).or_default().push(r);
    }
    for records in cells.values_mut() {
        records.sort_by(|x, y| (&x.item_id, x.side).cmp(&(&y.item_id, y.side)));
    }
    let cells: Vec<_> = cells.into_iter().collect();
    let means = cells
        .par_iter()
        .map(|(_, records)| {
            let mut total = 0.0;
            for r in records {
                let vb = b.get(&r.item_id, r.side, r.layer, r.rep).expect("key sets match");
                total += cosine(&r.vector, vb).map_err(|e| Error::InvalidInput(format!("{}: {e}", r.key())))?;
            }
            Ok(total / records.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let m = a.manifest();
    let mut grid = LayerGrid::new(m.num_layers + 1, m.sorted_reps());
    for (((layer, rep), records), mean) in cells.iter().zip(means) {
        grid.set(*layer, *rep, mean, records.len());
    }
    Ok(grid)
}
