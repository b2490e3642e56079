use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::records::{records, SampleRecord};
use super::render::render_record;
use super::split::{make_split, subsample};
use super::Concept;
use crate::error::{Error, Result};
use crate::midi::encode_smf;
use crate::synth::write_wav;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerateOptions {
    pub seed: u64,
    /// Stratified fraction in (0, 1]; `None` keeps everything.
    pub subsample: Option<f64>,
    /// Write only the manifest and split, no MIDI or audio.
    pub manifest_only: bool,
}

pub fn manifest_path(root: &Path, concept: Concept) -> PathBuf {
    root.join(concept.name()).join("manifest.jsonl")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_manifest(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Records of `concept` under `root`, in file order.
pub fn read_manifest(root: &Path, concept: Concept) -> Result<Vec<SampleRecord>> {
    let path = manifest_path(root, concept);
    if !path.is_file() {
        return Err(Error::MissingManifest(path));
    }
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    let mut offset = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if !line.trim().is_empty() {
            let record: SampleRecord =
                serde_json::from_str(&line).map_err(|e| Error::parse(offset, format!("{}: {e}", path.display())))?;
            if record.concept != concept {
                return Err(Error::Validation(format!(
                    "{}: record {} is not {concept}",
                    path.display(),
                    record.id
                )));
            }
            out.push(record);
        }
        offset += line.len() + 1;
    }
    Ok(out)
}

/// Writes one concept's dataset under `root` and returns its records.
pub fn generate(root: &Path, concept: Concept, options: GenerateOptions) -> Result<Vec<SampleRecord>> {
    let mut recs = records(concept, options.seed);
    if let Some(p) = options.subsample {
        recs = subsample(&recs, p, options.seed)?;
    }
    let dir = root.join(concept.name());
    create_dir(&dir.join("splits"))?;
    if !options.manifest_only {
        create_dir(&dir.join("midi"))?;
        create_dir(&dir.join("audio"))?;
        recs.par_iter().try_for_each(|r| -> Result<()> {
            let (seq, clip) = render_record(r)?;
            write_file(&dir.join(&r.midi_path), &encode_smf(&seq)?)?;
            write_file(&dir.join(&r.wav_path), &write_wav(&clip))
        })?;
    }
    write_manifest(&manifest_path(root, concept), &recs)?;
    let split = make_split(&recs, concept, options.seed)?;
    let split_path = dir.join("splits").join(format!("{}.json", options.seed));
    let mut json = serde_json::to_vec_pretty(&split)?;
    json.push(b'\n');
    write_file(&split_path, &json)?;
    Ok(recs)
}
