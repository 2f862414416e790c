//! Retrieval-augmented extraction with a chat model.

mod backend;
mod parse;
mod prompt;

pub use backend::{
    parse_chat_response, prompt_sha256, ChatBackend, LlmConfig, MockChat, MockFixture, ModelReply, OpenAiChat,
    LLM_API_KEY_ENV,
};
pub use parse::{first_json_object, parse_response, ParsedAnswer};
pub use prompt::{order_segments, render_prompt, PromptTemplate, ANSWER_FORMAT};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::entity::{EntityKind, Extraction, Method, SegmentRef};
use crate::retrieval::{embed_query, retrieve_with_vector, Embedder, EmbeddingVector, Query, VectorIndex};
use crate::segmenter::{Segment, TokenBlock};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HallucinationConfig {
    pub p_u: f64,
}

impl Default for HallucinationConfig {
    fn default() -> Self {
        HallucinationConfig { p_u: 0.5 }
    }
}

impl HallucinationConfig {
    pub fn new(p_u: f64) -> Result<Self> {
        let c = HallucinationConfig { p_u };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.p_u) {
            Ok(())
        } else {
            Err(Error::Config(format!("p_u must lie in [0, 1], got {}", self.p_u)))
        }
    }
}

/// True when the least likely generated token falls strictly below `p_u`.
pub fn detect_hallucination(token_probs: &[f64], cfg: &HallucinationConfig) -> Result<bool> {
    let min = token_probs
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::Precondition("hallucination check needs at least one token probability".into()))?;
    Ok(min < cfg.p_u)
}

/// A vector index plus one pre-embedded query per entity kind.
pub struct RagContext<'a> {
    pub index: &'a VectorIndex,
    pub k: usize,
    pub radius: usize,
    queries: BTreeMap<EntityKind, EmbeddingVector>,
}

impl<'a> RagContext<'a> {
    pub fn new(
        index: &'a VectorIndex,
        embedder: &dyn Embedder,
        queries: &[Query],
        k: usize,
        radius: usize,
    ) -> Result<Self> {
        if embedder.identity() != index.embedder() {
            return Err(Error::EmbedderMismatch {
                expected: embedder.identity(),
                found: index.embedder().to_string(),
            });
        }
        let mut map = BTreeMap::new();
        for q in queries {
            if map.insert(q.entity_kind, embed_query(q, embedder)?).is_some() {
                return Err(Error::DuplicateKey(format!("query for {}", q.entity_kind)));
            }
        }
        Ok(RagContext {
            index,
            k,
            radius,
            queries: map,
        })
    }

    pub fn has_query(&self, kind: EntityKind) -> bool {
        self.queries.contains_key(&kind)
    }

    /// Expanded segments for one document and kind, by descending score.
    pub fn segments(&self, doc: &Document, blocks: &[TokenBlock], kind: EntityKind) -> Result<Vec<Segment>> {
        let q = self
            .queries
            .get(&kind)
            .ok_or_else(|| Error::Config(format!("no query configured for {kind}")))?;
        if self.k == 0 {
            return Ok(Vec::new());
        }
        retrieve_with_vector(&doc.cleaned_text, blocks, self.index, q, self.k, self.radius)
    }
}

/// Result of one `(document, kind)` extraction, with the inputs that led to it.
#[derive(Debug, Clone)]
pub struct KindOutcome {
    pub extraction: Extraction,
    pub segments: Vec<Segment>,
    pub prompt: Option<String>,
}

/// Prompt rendering, model access and flagging, shared across documents.
pub struct LlmExtractor<'a> {
    pub backend: &'a dyn ChatBackend,
    pub template: &'a PromptTemplate,
    pub hallucination: HallucinationConfig,
}

impl LlmExtractor<'_> {
    /// Render, call, parse and flag over a fixed segment set. Failures become
    /// error records.
    pub fn extract_from_segments(&self, doc_id: &str, kind: EntityKind, segments: Vec<Segment>) -> KindOutcome {
        let provenance: Vec<SegmentRef> = order_segments(&segments).into_iter().map(SegmentRef::from).collect();
        if segments.is_empty() {
            let mut e = Extraction::failed(doc_id, kind, Method::Llm, Error::NoSegments);
            e.provenance = provenance;
            return KindOutcome {
                extraction: e,
                segments,
                prompt: None,
            };
        }
        let prompt = match render_prompt(self.template, kind, &segments) {
            Ok(p) => p,
            Err(err) => {
                return KindOutcome {
                    extraction: Extraction::failed(doc_id, kind, Method::Llm, err),
                    segments,
                    prompt: None,
                }
            }
        };
        let extraction = self.run(doc_id, kind, &prompt, provenance);
        KindOutcome {
            extraction,
            segments,
            prompt: Some(prompt),
        }
    }

    fn run(&self, doc_id: &str, kind: EntityKind, prompt: &str, provenance: Vec<SegmentRef>) -> Extraction {
        let reply = match self.backend.complete(prompt) {
            Ok(r) => r,
            Err(err) => {
                let mut e = Extraction::failed(doc_id, kind, Method::Llm, err);
                e.provenance = provenance;
                return e;
            }
        };
        let mut e = match parse_response(&reply.text, kind) {
            Ok(ans) => {
                let mut e = Extraction::new(doc_id, kind, Method::Llm);
                e.percentage = ans.percentage;
                e.amount = ans.amount;
                e.warnings = ans.warnings;
                e
            }
            Err(err) => Extraction::failed(doc_id, kind, Method::Llm, err),
        };
        e.provenance = provenance;
        e.warnings.extend(reply.warnings);
        if !reply.token_probs.is_empty() {
            e.flagged_hallucination = detect_hallucination(&reply.token_probs, &self.hallucination).ok();
            e.set_token_probs(reply.token_probs);
        }
        e
    }

    /// Retrieve segments for `kind` and extract from them.
    pub fn extract_kind(
        &self,
        rag: &RagContext,
        doc: &Document,
        blocks: &[TokenBlock],
        kind: EntityKind,
    ) -> KindOutcome {
        match rag.segments(doc, blocks, kind) {
            Ok(segs) => self.extract_from_segments(&doc.id, kind, segs),
            Err(err) => KindOutcome {
                extraction: Extraction::failed(&doc.id, kind, Method::Llm, err),
                segments: Vec::new(),
                prompt: None,
            },
        }
    }

    /// One record per requested kind, ordered by kind.
    pub fn extract_entities(
        &self,
        rag: &RagContext,
        doc: &Document,
        blocks: &[TokenBlock],
        kinds: &[EntityKind],
    ) -> Vec<Extraction> {
        let mut kinds = kinds.to_vec();
        kinds.sort();
        kinds.dedup();
        kinds
            .into_iter()
            .map(|k| self.extract_kind(rag, doc, blocks, k).extraction)
            .collect()
    }

    /// Extract every document with at most `max_concurrent` documents in
    /// flight. Output is ordered by `(doc_id, kind)` whatever the completion
    /// order.
    pub fn extract_corpus(
        &self,
        rag: &RagContext,
        docs: &[(Document, Vec<TokenBlock>)],
        kinds: &[EntityKind],
        max_concurrent: usize,
    ) -> Result<Vec<Extraction>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(max_concurrent.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        let mut out: Vec<Extraction> = pool.install(|| {
            docs.par_iter()
                .map(|(doc, blocks)| self.extract_entities(rag, doc, blocks, kinds))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        });
        out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.kind.cmp(&b.kind)));
        Ok(out)
    }
}

/// Segments and prompt that extraction would send for `(doc, kind)`, without
/// calling the model. Used to build mock fixtures.
pub fn plan_prompt(
    rag: &RagContext,
    template: &PromptTemplate,
    doc: &Document,
    blocks: &[TokenBlock],
    kind: EntityKind,
) -> Result<(Vec<Segment>, String)> {
    let segs = rag.segments(doc, blocks, kind)?;
    if segs.is_empty() {
        return Err(Error::NoSegments);
    }
    let prompt = render_prompt(template, kind, &segs)?;
    Ok((segs, prompt))
}
