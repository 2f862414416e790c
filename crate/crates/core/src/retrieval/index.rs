//! Exact flat cosine index. Vectors are unit-normalised on insertion so a
//! search is a linear scan of dot products.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embed::EmbeddingVector;
use crate::{Error, Result};

pub const INDEX_FORMAT: &str = "legalex-vector-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockKey {
    pub doc_id: String,
    pub block_index: usize,
}

impl BlockKey {
    pub fn new(doc_id: impl Into<String>, block_index: usize) -> Self {
        BlockKey {
            doc_id: doc_id.into(),
            block_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub key: BlockKey,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    dim: usize,
    embedder: String,
    keys: Vec<BlockKey>,
    seen: HashSet<BlockKey>,
    data: Vec<f64>,
}

fn normalized(v: &EmbeddingVector) -> Result<Vec<f64>> {
    if v.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidVector("non-finite component".into()));
    }
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidVector("cannot normalise a zero vector".into()));
    }
    Ok(v.values.iter().map(|x| x / norm).collect())
}

/// Descending score, then ascending key.
fn rank(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key))
}

impl VectorIndex {
    pub fn new(dim: usize, embedder: impl Into<String>) -> Self {
        VectorIndex {
            dim,
            embedder: embedder.into(),
            keys: Vec::new(),
            seen: HashSet::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder(&self) -> &str {
        &self.embedder
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[BlockKey] {
        &self.keys
    }

    /// Stored (unit) vector of entry `i`.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn insert(&mut self, key: BlockKey, vector: &EmbeddingVector) -> Result<()> {
        if vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        if self.seen.contains(&key) {
            return Err(Error::DuplicateKey(format!("{}#{}", key.doc_id, key.block_index)));
        }
        let unit = normalized(vector)?;
        self.push(key, &unit);
        Ok(())
    }

    fn push(&mut self, key: BlockKey, unit: &[f64]) {
        self.data.extend_from_slice(unit);
        self.seen.insert(key.clone());
        self.keys.push(key);
    }

    /// Exact top-`k` by cosine similarity.
    pub fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit>> {
        self.search_where(query, k, |_| true)
    }

    /// Exact top-`k` among entries accepted by `filter`.
    pub fn search_where(
        &self,
        query: &EmbeddingVector,
        k: usize,
        filter: impl Fn(&BlockKey) -> bool,
    ) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let q = normalized(query)?;
        let mut hits: Vec<Hit> = self
            .keys
            .iter()
            .enumerate()
            .filter(|(_, key)| filter(key))
            .map(|(i, key)| {
                let dot: f64 = self.vector(i).iter().zip(&q).map(|(a, b)| a * b).sum();
                Hit {
                    key: key.clone(),
                    score: dot.clamp(-1.0, 1.0),
                }
            })
            .collect();
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, rank);
            hits.truncate(k);
        }
        hits.sort_unstable_by(rank);
        Ok(hits)
    }

    /// JSONL: a header line `{"format","version","dim","embedder"}` followed by
    /// one `{"doc_id","block_index","vector"}` line per entry.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = IndexHeader {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            dim: self.dim,
            embedder: self.embedder.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (i, key) in self.keys.iter().enumerate() {
            let entry = IndexEntryRef {
                doc_id: &key.doc_id,
                block_index: key.block_index,
                vector: self.vector(i),
            };
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    /// Load a persisted index; the stored embedder identity must equal
    /// `expected_embedder`.
    pub fn load(path: &Path, expected_embedder: &str) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string(), expected_embedder)
    }

    pub fn read_from<R: BufRead>(reader: R, context: &str, expected_embedder: &str) -> Result<Self> {
        let json_err = |line: usize, source| Error::Json {
            context: context.to_string(),
            line,
            source,
        };
        let mut lines = reader.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Protocol(format!("{context}: empty index file")))?;
        let first = first.map_err(|e| Error::io(context, e))?;
        let header: IndexHeader = serde_json::from_str(&first).map_err(|e| json_err(1, e))?;
        if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
            return Err(Error::Protocol(format!(
                "{context}: unsupported index format {} v{}",
                header.format, header.version
            )));
        }
        if header.embedder != expected_embedder {
            return Err(Error::EmbedderMismatch {
                expected: expected_embedder.to_string(),
                found: header.embedder,
            });
        }
        let mut index = VectorIndex::new(header.dim, header.embedder);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(context, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: IndexEntry = serde_json::from_str(&line).map_err(|e| json_err(i + 1, e))?;
            let key = BlockKey::new(entry.doc_id, entry.block_index);
            let v = EmbeddingVector::new(entry.vector)?;
            // Stored vectors are already unit length; keep their bits so a
            // reloaded index ranks identically.
            if v.dim() != index.dim {
                return Err(Error::DimensionMismatch {
                    expected: index.dim,
                    found: v.dim(),
                });
            }
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidVector(format!(
                    "{context}: line {} is not unit length",
                    i + 1
                )));
            }
            if index.seen.contains(&key) {
                return Err(Error::DuplicateKey(format!("{}#{}", key.doc_id, key.block_index)));
            }
            index.push(key, &v.values);
        }
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    dim: usize,
    embedder: String,
}

#[derive(Serialize)]
struct IndexEntryRef<'a> {
    doc_id: &'a str,
    block_index: usize,
    vector: &'a [f64],
}

#[derive(Deserialize)]
struct IndexEntry {
    doc_id: String,
    block_index: usize,
    vector: Vec<f64>,
}
