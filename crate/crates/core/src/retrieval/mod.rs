//! Block embedding, exact cosine search and tf-idf query construction.

mod embed;
mod index;
mod tfidf;

pub use embed::{Embedder, EmbedderSpec, EmbeddingVector, MockEmbedder, RemoteEmbedder, EMBED_API_KEY_ENV};
pub use index::{BlockKey, Hit, VectorIndex, INDEX_FORMAT, INDEX_VERSION};
pub use tfidf::{build_tfidf, make_query, smoothed_idf, terms, Query, QueryTerm, TermStats, TfIdfModel};

use crate::segmenter::{expand_block, Segment, TokenBlock};
use crate::{Error, Result};

/// Embed every block and index it under `(doc_id, block_index)`.
pub fn build_index(blocks: &[TokenBlock], embedder: &dyn Embedder) -> Result<Option<VectorIndex>> {
    let texts: Vec<String> = blocks.iter().map(|b| b.text.clone()).collect();
    let vectors = embedder.embed(&texts)?;
    if vectors.len() != blocks.len() {
        return Err(Error::Protocol(format!(
            "embedder returned {} vectors for {} inputs",
            vectors.len(),
            blocks.len()
        )));
    }
    let Some(first) = vectors.first() else {
        return Ok(None);
    };
    let mut index = VectorIndex::new(first.dim(), embedder.identity());
    for (b, v) in blocks.iter().zip(&vectors) {
        index.insert(BlockKey::new(&b.doc_id, b.index), v)?;
    }
    Ok(Some(index))
}

pub fn embed_query(query: &Query, embedder: &dyn Embedder) -> Result<EmbeddingVector> {
    embedder
        .embed(std::slice::from_ref(&query.text))?
        .pop()
        .ok_or_else(|| Error::Protocol("embedder returned no vector for the query".into()))
}

/// Search the document's blocks with `query`, expand each hit by `radius`
/// neighbours, drop hits whose expanded span duplicates a better one, and
/// return the segments by descending score.
///
/// `source` is the cleaned text the blocks were split from; `doc_blocks` must
/// be that document's blocks in order.
pub fn retrieve_segments(
    source: &str,
    doc_blocks: &[TokenBlock],
    index: &VectorIndex,
    query: &Query,
    embedder: &dyn Embedder,
    k: usize,
    radius: usize,
) -> Result<Vec<Segment>> {
    if doc_blocks.is_empty() {
        return Ok(Vec::new());
    }
    let qv = embed_query(query, embedder)?;
    retrieve_with_vector(source, doc_blocks, index, &qv, k, radius)
}

pub fn retrieve_with_vector(
    source: &str,
    doc_blocks: &[TokenBlock],
    index: &VectorIndex,
    query_vec: &EmbeddingVector,
    k: usize,
    radius: usize,
) -> Result<Vec<Segment>> {
    let Some(first) = doc_blocks.first() else {
        return Ok(Vec::new());
    };
    let doc_id = first.doc_id.as_str();
    if let Some((i, _)) = doc_blocks
        .iter()
        .enumerate()
        .find(|(i, b)| b.index != *i || b.doc_id != doc_id)
    {
        return Err(Error::Precondition(format!(
            "blocks of `{doc_id}` are not contiguous from 0 (position {i})"
        )));
    }
    let hits = index.search_where(query_vec, k, |key| key.doc_id == doc_id)?;
    let mut out: Vec<Segment> = Vec::with_capacity(hits.len());
    for hit in hits {
        if hit.key.block_index >= doc_blocks.len() {
            return Err(Error::Precondition(format!(
                "index holds block {} of `{doc_id}`, which has {} blocks",
                hit.key.block_index,
                doc_blocks.len()
            )));
        }
        let mut seg = expand_block(source, doc_blocks, hit.key.block_index, radius)?;
        if out
            .iter()
            .any(|s| s.char_start == seg.char_start && s.char_end == seg.char_end)
        {
            continue;
        }
        seg.score = Some(hit.score);
        out.push(seg);
    }
    Ok(out)
}
