use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::records::SampleRecord;
use super::Concept;
use crate::error::{Error, Result};
use crate::theory::Tempo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Sample id to split. Serialized as three sorted id lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    fn from_lists(seed: u64, mut train: Vec<String>, mut validation: Vec<String>, mut test: Vec<String>) -> Self {
        train.sort();
        validation.sort();
        test.sort();
        SplitAssignment {
            seed,
            train,
            validation,
            test,
        }
    }

    pub fn map(&self) -> BTreeMap<&str, Split> {
        let mut out = BTreeMap::new();
        for (ids, split) in [
            (&self.train, Split::Train),
            (&self.validation, Split::Validation),
            (&self.test, Split::Test),
        ] {
            for id in ids {
                out.insert(id.as_str(), split);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row indices of `records` in each split, in record order.
    pub fn indices(&self, records: &[SampleRecord]) -> Result<[Vec<usize>; 3]> {
        let map = self.map();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for (i, r) in records.iter().enumerate() {
            let split = map
                .get(r.id.as_str())
                .ok_or_else(|| Error::Validation(format!("record {} is in no split", r.id)))?;
            out[*split as usize].push(i);
        }
        Ok(out)
    }
}

/// Number of tempo values held out at each extreme: floor(0.15 * 161) = 24.
pub fn tempo_extreme_band() -> usize {
    let n = (Tempo::MAX - Tempo::MIN + 1) as usize;
    n * 15 / 100
}

fn is_extreme_bpm(bpm: u16) -> bool {
    let band = tempo_extreme_band() as u16;
    bpm < Tempo::MIN + band || bpm > Tempo::MAX - band
}

/// Seeded split of one concept's records.
///
/// Classification: shuffle, then the first round(0.7 n) go to train, the
/// next round(0.15 n) to validation, the rest to test. Tempo: train holds the
/// middle BPM values; the 24 lowest and 24 highest are pooled, shuffled and
/// halved into validation (first half, rounded up) and test.
pub fn make_split(records: &[SampleRecord], concept: Concept, seed: u64) -> Result<SplitAssignment> {
    if let Some(r) = records.iter().find(|r| r.concept != concept) {
        return Err(Error::Validation(format!("record {} is not a {concept} record", r.id)));
    }
    let mut rng = crate::seed::derived_rng(seed, &["split", concept.name()]);
    let mut ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    ids.sort();
    if concept == Concept::Tempo {
        let mut train = Vec::new();
        let mut extreme = Vec::new();
        for r in records {
            let bpm = r
                .bpm
                .ok_or_else(|| Error::Validation(format!("record {} has no bpm", r.id)))?;
            if is_extreme_bpm(bpm) {
                extreme.push(r.id.clone());
            } else {
                train.push(r.id.clone());
            }
        }
        extreme.sort();
        extreme.shuffle(&mut rng);
        let test = extreme.split_off(extreme.len().div_ceil(2));
        return Ok(SplitAssignment::from_lists(seed, train, extreme, test));
    }
    ids.shuffle(&mut rng);
    let n = ids.len();
    let n_train = (0.7 * n as f64).round() as usize;
    let n_val = ((0.15 * n as f64).round() as usize).min(n - n_train);
    let test = ids.split_off(n_train + n_val);
    let validation = ids.split_off(n_train);
    Ok(SplitAssignment::from_lists(seed, ids, validation, test))
}

/// Stratified subsample keeping ceil(p * count) records of every class (every
/// BPM for tempo). Within a stratum, records are ranked by a hash of the seed
/// and id, so the choice is independent of record order. Output keeps input
/// order.
pub fn subsample(records: &[SampleRecord], fraction: f64, seed: u64) -> Result<Vec<SampleRecord>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!("subsample fraction {fraction} not in (0, 1]")));
    }
    let mut strata: BTreeMap<usize, Vec<(u64, usize)>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = crate::seed::derive(seed, &["subsample", &r.id]);
        strata.entry(r.stratum()?).or_default().push((key, i));
    }
    let mut keep = vec![false; records.len()];
    for members in strata.values_mut() {
        members.sort();
        let k = (fraction * members.len() as f64 - 1e-9).ceil() as usize;
        for &(_, i) in members.iter().take(k) {
            keep[i] = true;
        }
    }
    Ok(records
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r.clone())
        .collect())
}
