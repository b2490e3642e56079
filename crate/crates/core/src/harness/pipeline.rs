use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingFile;
use crate::datasets::{self, make_split, read_manifest, subsample, Concept};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureKind};
use crate::probe::{grid_search, Dataset, GridOutcome, ProbeSpec, TrainConfig};
use crate::synth::read_wav;

/// Aggregated features of every clip in a generated concept directory, in
/// manifest order.
pub fn extract_concept(data_root: &Path, concept: Concept, kind: FeatureKind) -> Result<EmbeddingFile> {
    let dim = kind
        .dim()
        .ok_or_else(|| Error::Argument(format!("{} is not a handcrafted feature", kind.cli_name())))?;
    let records = read_manifest(data_root, concept)?;
    let dir = data_root.join(concept.name());
    let rows = records
        .par_iter()
        .map(|r| {
            let path = dir.join(&r.wav_path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let clip = read_wav(&bytes)?;
            Ok(extract(kind, &clip)?.values)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let data = rows.iter().flatten().map(|&v| v as f32).collect();
    EmbeddingFile::new(dim, records.into_iter().map(|r| r.id).collect(), data)
}

/// How probe configurations are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeMode {
    Grid,
    LmDefault,
}

impl ProbeMode {
    pub fn specs(self, concept: Concept) -> Vec<ProbeSpec> {
        match self {
            ProbeMode::Grid => ProbeSpec::grid(concept.task()),
            ProbeMode::LmDefault => vec![ProbeSpec::lm_default(concept.task())],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeRun {
    pub concept: Concept,
    pub representation: String,
    pub outcome: GridOutcome,
    pub split_sizes: [usize; 3],
}

/// Joins `embeddings` against the concept manifest (all of it), applies the
/// optional stratified subsample, splits, and runs the probes.
#[allow(clippy::too_many_arguments)]
pub fn probe_embeddings(
    data_root: &Path,
    concept: Concept,
    embeddings: &EmbeddingFile,
    representation: &str,
    mode: ProbeMode,
    seed: u64,
    fraction: Option<f64>,
    config: TrainConfig,
) -> Result<ProbeRun> {
    let all = read_manifest(data_root, concept)?;
    let x_all = embeddings.join(&all)?;
    let (records, x) = match fraction {
        Some(p) => {
            let kept = subsample(&all, p, seed)?;
            let keep: std::collections::HashSet<&str> = kept.iter().map(|r| r.id.as_str()).collect();
            let rows: Vec<usize> = (0..all.len()).filter(|&i| keep.contains(all[i].id.as_str())).collect();
            (kept, x_all.select(ndarray::Axis(0), &rows))
        }
        None => (all, x_all),
    };
    let data = Dataset::new(x, datasets::targets(concept, &records)?)?;
    let split = make_split(&records, concept, seed)?;
    let [train, val, test] = split.indices(&records)?;
    let split_sizes = [train.len(), val.len(), test.len()];
    let outcome = grid_search(
        &mode.specs(concept),
        &data.select(&train),
        &data.select(&val),
        &data.select(&test),
        seed,
        config,
    )?;
    Ok(ProbeRun {
        concept,
        representation: representation.to_string(),
        outcome,
        split_sizes,
    })
}

/// One line of a result CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub concept: Concept,
    pub representation: String,
    pub normalize: bool,
    pub model: String,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub metric: String,
    pub val_metric: f64,
    pub test_metric: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub seed: u64,
    pub selected: bool,
}

impl ProbeRun {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.outcome
            .results
            .iter()
            .enumerate()
            .map(|(i, r)| ResultRow {
                concept: self.concept,
                representation: self.representation.clone(),
                normalize: r.spec.normalize,
                model: r.spec.model.to_string(),
                batch_size: r.spec.batch_size,
                learning_rate: r.spec.learning_rate,
                dropout: r.spec.dropout,
                weight_decay: r.spec.weight_decay,
                metric: r.spec.task.metric_name().to_string(),
                val_metric: r.val_metric,
                test_metric: r.test_metric,
                best_epoch: r.best_epoch,
                epochs_run: r.epochs_run,
                seed: r.seed,
                selected: i == self.outcome.best,
            })
            .collect()
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Report row name for an embedding file: the feature's display name when
/// the file stem is a feature name (`chroma.emb`), otherwise the stem.
pub fn representation_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("embeddings");
    match FeatureKind::from_cli(stem) {
        Ok(kind) if kind != FeatureKind::External => kind.display_name().to_string(),
        _ => stem.to_string(),
    }
}
