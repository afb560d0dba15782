//! Evaluation data model and file ingestion.
//!
//! Three inputs drive an analysis: per-utterance scoring records
//! (reference word count plus error counts for two systems), per-utterance
//! embedding vectors, and the speaker grouping derived from the records.
//!
//! File formats:
//! * eval TSV: `utt_id<TAB>speaker_id<TAB>m<TAB>e_a<TAB>e_b`, UTF-8,
//!   lines starting with `#` ignored;
//! * embedding TSV: `utt_id<TAB>v1<TAB>...<TAB>vL`;
//! * embedding raw binary: magic `WSEB`, u32-le row count, u32-le dimension,
//!   length-prefixed (u16-le) UTF-8 ids, then row-major f64-le values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One utterance's scoring tuple: reference length and the word error
/// counts of systems A and B. Error counts may exceed `m` (insertions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub utt_id: String,
    pub speaker_id: String,
    pub m: u64,
    pub e_a: u64,
    pub e_b: u64,
}

/// An ordered, non-empty collection of [`EvalRecord`]s. Record order is
/// stable and defines the utterance index used everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalDataset {
    pub name: String,
    records: Vec<EvalRecord>,
}

impl EvalDataset {
    /// Builds a dataset, enforcing non-emptiness and utt_id uniqueness.
    pub fn new(name: impl Into<String>, records: Vec<EvalRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("no records".into()));
        }
        let mut seen = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if let Some(prev) = seen.insert(r.utt_id.as_str(), i) {
                return Err(Error::Validation(format!(
                    "duplicate utt_id {:?} (records {} and {})",
                    r.utt_id, prev, i
                )));
            }
        }
        Ok(EvalDataset {
            name: name.into(),
            records,
        })
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_ref_words(&self) -> u64 {
        self.records.iter().map(|r| r.m).sum()
    }
}

/// Per-group matrix of utterance embedding vectors; row i is the
/// L-dimensional embedding of `utt_ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    utt_ids: Vec<String>,
    values: Matrix,
}

impl EmbeddingMatrix {
    pub fn new(utt_ids: Vec<String>, values: Matrix) -> Result<Self> {
        if values.rows() != utt_ids.len() {
            return Err(Error::Validation(format!(
                "embedding row count {} does not match id count {}",
                values.rows(),
                utt_ids.len()
            )));
        }
        if values.cols() < 2 {
            return Err(Error::Validation(format!(
                "embedding dimension must be at least 2, got {}",
                values.cols()
            )));
        }
        for (i, id) in utt_ids.iter().enumerate() {
            if let Some(bad) = values.row(i).iter().find(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite embedding value {bad} for utterance {id:?}"
                )));
            }
        }
        let mut seen = HashMap::with_capacity(utt_ids.len());
        for (i, id) in utt_ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate utt_id {id:?} in embeddings"
                )));
            }
        }
        Ok(EmbeddingMatrix { utt_ids, values })
    }

    pub fn utt_ids(&self) -> &[String] {
        &self.utt_ids
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    /// Embedding dimension L.
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Selects the given rows into a new matrix (ids carried along).
    pub fn select_rows(&self, rows: &[usize]) -> EmbeddingMatrix {
        let ids = rows.iter().map(|&i| self.utt_ids[i].clone()).collect();
        let mut m = Matrix::zeros(rows.len(), self.dim());
        for (out, &i) in rows.iter().enumerate() {
            m.row_mut(out).copy_from_slice(self.values.row(i));
        }
        EmbeddingMatrix {
            utt_ids: ids,
            values: m,
        }
    }
}

/// Disjoint cover of the dataset indices, keyed by speaker. Group order
/// follows first appearance in the dataset; indices stay in dataset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerPartition {
    groups: Vec<(String, Vec<usize>)>,
}

impl SpeakerPartition {
    pub fn groups(&self) -> &[(String, Vec<usize>)] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

/// Groups dataset indices by speaker_id.
pub fn group_by_speaker(dataset: &EvalDataset) -> SpeakerPartition {
    let mut order: Vec<(String, Vec<usize>)> = Vec::new();
    let mut pos: HashMap<&str, usize> = HashMap::new();
    for (i, r) in dataset.records().iter().enumerate() {
        match pos.get(r.speaker_id.as_str()) {
            Some(&g) => order[g].1.push(i),
            None => {
                pos.insert(r.speaker_id.as_str(), order.len());
                order.push((r.speaker_id.clone(), vec![i]));
            }
        }
    }
    SpeakerPartition { groups: order }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Loads scoring records from an eval TSV file.
pub fn load_eval_records(path: impl AsRef<Path>) -> Result<EvalDataset> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 tab-separated fields, got {}", fields.len()),
            ));
        }
        let count = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|_| {
                Error::parse(path, lineno, format!("{what} must be a non-negative integer, got {s:?}"))
            })
        };
        records.push(EvalRecord {
            utt_id: fields[0].to_string(),
            speaker_id: fields[1].to_string(),
            m: count(fields[2], "m")?,
            e_a: count(fields[3], "e_a")?,
            e_b: count(fields[4], "e_b")?,
        });
    }
    EvalDataset::new(dataset_name(path), records)
}

/// Writes a dataset back out in the eval TSV format.
pub fn write_eval_records(dataset: &EvalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "# utt_id\tspeaker_id\tm\te_a\te_b")?;
        for r in dataset.records() {
            writeln!(w, "{}\t{}\t{}\t{}\t{}", r.utt_id, r.speaker_id, r.m, r.e_a, r.e_b)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// On-disk embedding encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Tsv,
    RawBinary,
}

const EMBEDDING_MAGIC: &[u8; 4] = b"WSEB";

/// Loads embeddings in the requested format.
pub fn load_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingMatrix> {
    match format {
        EmbeddingFormat::Tsv => load_embeddings_tsv(path.as_ref()),
        EmbeddingFormat::RawBinary => load_embeddings_binary(path.as_ref()),
    }
}

/// Sniffs the on-disk format from the magic bytes.
pub fn detect_embedding_format(path: impl AsRef<Path>) -> Result<EmbeddingFormat> {
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    match f.read_exact(&mut magic) {
        Ok(()) if &magic == EMBEDDING_MAGIC => Ok(EmbeddingFormat::RawBinary),
        _ => Ok(EmbeddingFormat::Tsv),
    }
}

fn load_embeddings_tsv(path: &Path) -> Result<EmbeddingMatrix> {
    let reader = open(path)?;
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields
            .next()
            .ok_or_else(|| Error::parse(path, lineno, "missing utt_id"))?;
        let mut row = Vec::new();
        for v in fields {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid float {v:?}")))?;
            row.push(x);
        }
        match dim {
            None => dim = Some(row.len()),
            Some(l) if l != row.len() => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("ragged row: expected {} values, got {}", l, row.len()),
                ))
            }
            _ => {}
        }
        ids.push(id.to_string());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!(
            "no embedding rows in {}",
            path.display()
        )));
    }
    EmbeddingMatrix::new(ids, Matrix::from_rows(&rows))
}

fn load_embeddings_binary(path: &Path) -> Result<EmbeddingMatrix> {
    let mut reader = open(path)?;
    let io_err = |e| Error::io(path, e);

    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(io_err)?;
    if &magic != EMBEDDING_MAGIC {
        return Err(Error::parse(path, 1, "bad magic bytes, not a WSEB file"));
    }
    let mut u32buf = [0u8; 4];
    reader.read_exact(&mut u32buf).map_err(io_err)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    reader.read_exact(&mut u32buf).map_err(io_err)?;
    let l = u32::from_le_bytes(u32buf) as usize;

    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u16buf = [0u8; 2];
        reader.read_exact(&mut u16buf).map_err(io_err)?;
        let len = u16::from_le_bytes(u16buf) as usize;
        let mut idbuf = vec![0u8; len];
        reader.read_exact(&mut idbuf).map_err(io_err)?;
        let id = String::from_utf8(idbuf)
            .map_err(|_| Error::parse(path, 1, "utt_id is not valid UTF-8"))?;
        ids.push(id);
    }
    let mut values = Matrix::zeros(n, l);
    let mut f64buf = [0u8; 8];
    for i in 0..n {
        let row = values.row_mut(i);
        for v in row.iter_mut() {
            reader.read_exact(&mut f64buf).map_err(io_err)?;
            *v = f64::from_le_bytes(f64buf);
        }
    }
    EmbeddingMatrix::new(ids, values)
}

/// Writes embeddings as TSV. f64 values are printed in shortest
/// round-trip form, so reloading reproduces them bit for bit.
pub fn write_embeddings_tsv(emb: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        for (i, id) in emb.utt_ids().iter().enumerate() {
            write!(w, "{id}")?;
            for v in emb.row(i) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Writes embeddings in the raw binary format.
pub fn write_embeddings_binary(emb: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        w.write_all(EMBEDDING_MAGIC)?;
        w.write_all(&(emb.n_rows() as u32).to_le_bytes())?;
        w.write_all(&(emb.dim() as u32).to_le_bytes())?;
        for id in emb.utt_ids() {
            let bytes = id.as_bytes();
            w.write_all(&(bytes.len() as u16).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        for i in 0..emb.n_rows() {
            for v in emb.row(i) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}
