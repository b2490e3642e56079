use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::datasets::SampleRecord;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 7] = b"SYNEMB1";
const MAX_LISTED_IDS: usize = 10;

/// Pooled vectors keyed by sample id.
///
/// Binary layout, all integers little-endian:
///
/// ```text
/// "SYNEMB1"            7 bytes
/// dim                  u32
/// count                u32
/// count x (len u32, len bytes of UTF-8 id)
/// count x dim          f32, row-major
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingFile {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingFile {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("embedding dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Validation(format!(
                "{} floats for {} ids of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        check_unique(&ids, None)?;
        if u32::try_from(dim).is_err() || u32::try_from(ids.len()).is_err() {
            return Err(Error::Validation(
                "embedding table too large for the file format".into(),
            ));
        }
        Ok(EmbeddingFile { dim, ids, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id_bytes: usize = self.ids.iter().map(|id| 4 + id.len()).sum();
        let mut out = Vec::with_capacity(15 + id_bytes + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = take(bytes, &mut pos, MAGIC.len())?;
        if magic != MAGIC {
            return Err(Error::parse(0, "bad magic, expected SYNEMB1"));
        }
        let dim = read_u32(bytes, &mut pos)? as usize;
        if dim == 0 {
            return Err(Error::parse(7, "dimension is zero"));
        }
        let count = read_u32(bytes, &mut pos)? as usize;
        let mut ids = Vec::with_capacity(count.min(bytes.len() / 4));
        let mut seen = HashMap::new();
        for _ in 0..count {
            let start = pos;
            let len = read_u32(bytes, &mut pos)? as usize;
            let raw = take(bytes, &mut pos, len)?;
            let id = std::str::from_utf8(raw)
                .map_err(|_| Error::parse(start + 4, "id is not valid UTF-8"))?
                .to_string();
            if let Some(first) = seen.insert(id.clone(), start) {
                return Err(Error::parse(
                    start,
                    format!("duplicate id {id:?} (first at byte {first})"),
                ));
            }
            ids.push(id);
        }
        let expected = count
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::parse(pos, "payload size overflows"))?;
        let payload = &bytes[pos..];
        if payload.len() != expected {
            return Err(Error::parse(
                pos,
                format!(
                    "payload has {} bytes, expected {expected} ({count} x {dim} f32)",
                    payload.len()
                ),
            ));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(EmbeddingFile { dim, ids, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Feature matrix with one row per record, in record order. The file's
    /// ids must match the records' ids one to one.
    pub fn join(&self, records: &[SampleRecord]) -> Result<Array2<f64>> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let wanted: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
        let missing: Vec<String> = records
            .iter()
            .filter(|r| !index.contains_key(r.id.as_str()))
            .take(MAX_LISTED_IDS)
            .map(|r| r.id.clone())
            .collect();
        let extra: Vec<String> = self
            .ids
            .iter()
            .filter(|id| !wanted.contains(id.as_str()))
            .take(MAX_LISTED_IDS)
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::IdMismatch { missing, extra });
        }
        check_unique(
            &records.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
            Some("manifest"),
        )?;
        let mut x = Array2::zeros((records.len(), self.dim));
        for (mut row, r) in x.rows_mut().into_iter().zip(records) {
            let src = self.row(index[r.id.as_str()]);
            for (dst, &v) in row.iter_mut().zip(src) {
                *dst = v as f64;
            }
        }
        Ok(x)
    }
}

fn check_unique(ids: &[String], what: Option<&str>) -> Result<()> {
    let mut seen = HashSet::new();
    let dups: Vec<&str> = ids
        .iter()
        .filter(|id| !seen.insert(id.as_str()))
        .take(MAX_LISTED_IDS)
        .map(|s| s.as_str())
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "duplicate {}ids: {}",
            what.map(|w| format!("{w} ")).unwrap_or_default(),
            dups.join(", ")
        )))
    }
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = pos
        .checked_add(n)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::parse(*pos, format!("truncated: need {n} bytes, {} left", bytes.len() - *pos)))?;
    let out = &bytes[*pos..end];
    *pos = end;
    Ok(out)
}

fn read_u32(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let raw = take(bytes, pos, 4)?;
    Ok(u32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{records, Concept};
    use proptest::prelude::*;

    fn small() -> EmbeddingFile {
        EmbeddingFile::new(2, vec!["a".into(), "bb".into()], vec![1.0, -2.0, 0.5, 3.25]).unwrap()
    }

    #[test]
    fn byte_layout() {
        let f = EmbeddingFile::new(3, vec!["x1".into()], vec![1.0, 2.0, 3.0]).unwrap();
        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), 7 + 4 + 4 + (4 + 2) + 12);
        assert_eq!(&bytes[..7], b"SYNEMB1");
        assert_eq!(&bytes[7..11], &3u32.to_le_bytes());
        assert_eq!(&bytes[11..15], &1u32.to_le_bytes());
        assert_eq!(&bytes[15..19], &2u32.to_le_bytes());
        assert_eq!(&bytes[19..21], b"x1");
        assert_eq!(&bytes[21..25], &1.0f32.to_le_bytes());
    }

    #[test]
    fn corrupt_files_report_offsets() {
        let bytes = small().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            EmbeddingFile::from_bytes(&bad),
            Err(Error::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            EmbeddingFile::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            EmbeddingFile::from_bytes(&bytes[..9]),
            Err(Error::Parse { offset: 7, .. })
        ));
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(EmbeddingFile::from_bytes(&trailing).is_err());
        // both ids renamed to "a": duplicate reported at the second entry
        let dup = EmbeddingFile {
            dim: 1,
            ids: vec!["a".into(), "a".into()],
            data: vec![0.0, 1.0],
        }
        .to_bytes();
        match EmbeddingFile::from_bytes(&dup) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 15 + 5);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constructor_validates() {
        assert!(EmbeddingFile::new(2, vec!["a".into()], vec![1.0]).is_err());
        assert!(EmbeddingFile::new(1, vec!["a".into(), "a".into()], vec![1.0, 2.0]).is_err());
        assert!(EmbeddingFile::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn join_orders_rows_by_manifest() {
        let recs: Vec<_> = records(Concept::Chords, 0).into_iter().take(3).collect();
        let ids: Vec<String> = recs.iter().rev().map(|r| r.id.clone()).collect();
        let f = EmbeddingFile::new(1, ids, vec![30.0, 20.0, 10.0]).unwrap();
        let x = f.join(&recs).unwrap();
        assert_eq!(x.column(0).to_vec(), [10.0, 20.0, 30.0]);
    }

    #[test]
    fn join_lists_at_most_ten_mismatches() {
        let recs: Vec<_> = records(Concept::Chords, 0).into_iter().take(30).collect();
        let ids: Vec<String> = (0..15)
            .map(|i| format!("foreign-{i}"))
            .chain(recs[..5].iter().map(|r| r.id.clone()))
            .collect();
        let f = EmbeddingFile::new(1, ids, vec![0.0; 20]).unwrap();
        match f.join(&recs) {
            Err(Error::IdMismatch { missing, extra }) => {
                assert_eq!(missing.len(), 10);
                assert_eq!(missing[0], recs[5].id);
                assert_eq!(extra.len(), 10);
                assert_eq!(extra[0], "foreign-0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip(dim in 1usize..8, rows in proptest::collection::vec(("[a-z0-9_-]{1,12}", proptest::collection::vec(-1e6f32..1e6, 8)), 0..20)) {
            let mut seen = HashSet::new();
            let rows: Vec<_> = rows.into_iter().filter(|(id, _)| seen.insert(id.clone())).collect();
            let ids = rows.iter().map(|(id, _)| id.clone()).collect();
            let data = rows.iter().flat_map(|(_, v)| v[..dim].to_vec()).collect();
            let f = EmbeddingFile::new(dim, ids, data).unwrap();
            prop_assert_eq!(EmbeddingFile::from_bytes(&f.to_bytes()).unwrap(), f);
        }
    }
}
