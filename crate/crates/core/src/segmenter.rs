//! Candidate segments: `%`-anchored character windows and fixed-size token
//! blocks with neighbour expansion.
//!
//! All spans are UTF-8 byte offsets into a document's cleaned text and always
//! fall on character boundaries.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::{Error, Result};

/// `%` preceded by at most one word, digit, space, comma or dot character.
pub const DEFAULT_PERCENT_PATTERN: &str = r"[\w\d\s\n,.]{0,1}%";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    /// Tokens per block.
    pub block_size: usize,
    /// Neighbouring blocks added on each side of a retrieved block.
    pub expansion_radius: usize,
    /// Characters taken before and after each `%` match.
    pub regex_window_chars: usize,
    pub percent_pattern: String,
    /// Merge overlapping `%` windows into one segment.
    pub merge_windows: bool,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            block_size: 120,
            expansion_radius: 1,
            regex_window_chars: 500,
            percent_pattern: DEFAULT_PERCENT_PATTERN.to_string(),
            merge_windows: true,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("segmenter.block_size must be at least 1".into()));
        }
        Regex::new(&self.percent_pattern).map_err(|e| Error::pattern(&self.percent_pattern, e))?;
        Ok(())
    }
}

/// Byte span of one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

/// Split on Unicode whitespace. Punctuation stays attached to its word.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push(TokenSpan { start: s, end: i });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(TokenSpan {
            start: s,
            end: text.len(),
        });
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBlock {
    pub doc_id: String,
    pub index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub token_count: usize,
    pub text: String,
}

/// Partition the token stream of `doc.cleaned_text` into consecutive runs of
/// `block_size` tokens; the last block holds the remainder.
pub fn block_split(doc: &Document, cfg: &SegmenterConfig) -> Vec<TokenBlock> {
    split_text(&doc.id, &doc.cleaned_text, cfg.block_size)
}

pub fn split_text(doc_id: &str, text: &str, block_size: usize) -> Vec<TokenBlock> {
    assert!(block_size >= 1, "block_size must be at least 1");
    tokenize(text)
        .chunks(block_size)
        .enumerate()
        .map(|(index, toks)| {
            let char_start = toks[0].start;
            let char_end = toks[toks.len() - 1].end;
            TokenBlock {
                doc_id: doc_id.to_string(),
                index,
                char_start,
                char_end,
                token_count: toks.len(),
                text: text[char_start..char_end].to_string(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    RegexWindow,
    ExpandedBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    pub origin: Origin,
    pub char_start: usize,
    pub char_end: usize,
    pub center_block: Option<usize>,
    pub score: Option<f64>,
    pub text: String,
}

impl Segment {
    fn from_span(doc_id: &str, source: &str, start: usize, end: usize, origin: Origin) -> Self {
        Segment {
            doc_id: doc_id.to_string(),
            origin,
            char_start: start,
            char_end: end,
            center_block: None,
            score: None,
            text: source[start..end].to_string(),
        }
    }
}

/// Byte offset `n` characters before `pos`, or 0.
pub(crate) fn back_chars(text: &str, pos: usize, n: usize) -> usize {
    if n == 0 {
        return pos;
    }
    text[..pos].char_indices().rev().nth(n - 1).map_or(0, |(i, _)| i)
}

/// Byte offset `n` characters after `pos`, or the end of text.
pub(crate) fn forward_chars(text: &str, pos: usize, n: usize) -> usize {
    text[pos..].char_indices().nth(n).map_or(text.len(), |(i, _)| pos + i)
}

/// One window of `regex_window_chars` characters on each side of every
/// percent-pattern match, clamped to the document. Overlapping windows are
/// merged unless `merge_windows` is off.
pub fn regex_percent_segments(doc: &Document, cfg: &SegmenterConfig) -> Result<Vec<Segment>> {
    let re = Regex::new(&cfg.percent_pattern).map_err(|e| Error::pattern(&cfg.percent_pattern, e))?;
    Ok(percent_segments_with(
        &re,
        &doc.id,
        &doc.cleaned_text,
        cfg.regex_window_chars,
        cfg.merge_windows,
    ))
}

pub fn percent_segments_with(re: &Regex, doc_id: &str, text: &str, window: usize, merge: bool) -> Vec<Segment> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for m in re.find_iter(text) {
        let span = (
            back_chars(text, m.start(), window),
            forward_chars(text, m.start(), window),
        );
        match spans.last_mut() {
            Some(last) if merge && span.0 < last.1 => last.1 = last.1.max(span.1),
            _ => spans.push(span),
        }
    }
    spans
        .into_iter()
        .map(|(s, e)| Segment::from_span(doc_id, text, s, e, Origin::RegexWindow))
        .collect()
}

/// Block `i` joined with up to `radius` neighbours on each side, as a verbatim
/// slice of `source` (the text the blocks were split from).
pub fn expand_block(source: &str, blocks: &[TokenBlock], i: usize, radius: usize) -> Result<Segment> {
    if i >= blocks.len() {
        return Err(Error::Precondition(format!(
            "block index {i} out of range for {} blocks",
            blocks.len()
        )));
    }
    let lo = i.saturating_sub(radius);
    let hi = (i + radius).min(blocks.len() - 1);
    let mut seg = Segment::from_span(
        &blocks[i].doc_id,
        source,
        blocks[lo].char_start,
        blocks[hi].char_end,
        Origin::ExpandedBlock,
    );
    seg.center_block = Some(i);
    Ok(seg)
}
