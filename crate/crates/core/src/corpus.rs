//! Ruling ingestion: loading, page-header cleanup and scope filtering.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::{jsonl, Error, Result};

/// Default header extent, in characters of cleaned text.
pub const DEFAULT_HEADER_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source_path: String,
    pub raw_text: String,
    pub cleaned_text: String,
    pub header: String,
    pub in_scope: bool,
    pub ruling_date: Option<NaiveDate>,
    pub jurisdiction: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source_path: String::new(),
            raw_text: raw_text.into(),
            cleaned_text: String::new(),
            header: String::new(),
            in_scope: false,
            ruling_date: None,
            jurisdiction: None,
        }
    }

    /// A document whose text needs no cleaning; handy for fixtures.
    pub fn from_clean_text(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut doc = Document::new(id, text.clone());
        doc.header = header_of(&text, DEFAULT_HEADER_CHARS).to_string();
        doc.cleaned_text = text;
        doc.in_scope = true;
        doc
    }
}

/// One line of a corpus manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub ruling_date: Option<NaiveDate>,
    #[serde(default)]
    pub jurisdiction: Option<String>,
}

/// A file that could not be turned into a [`Document`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadError {
    pub path: String,
    pub message: String,
    /// First invalid byte, for non-UTF-8 input.
    pub byte_offset: Option<usize>,
}

#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub documents: Vec<Document>,
    pub errors: Vec<LoadError>,
}

/// Load every file under a directory (ids are file stems), or every entry of a
/// JSONL manifest (paths relative to the manifest). Per-file failures are
/// collected, not fatal. Documents come back sorted by id.
pub fn load_corpus(root: &Path) -> Result<CorpusLoad> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    let entries = if meta.is_dir() {
        directory_entries(root)?
    } else {
        let base = root.parent().unwrap_or(Path::new("."));
        jsonl::read_jsonl::<ManifestEntry>(root)?
            .into_iter()
            .map(|mut e| {
                if e.path.is_relative() {
                    e.path = base.join(&e.path);
                }
                e
            })
            .collect()
    };

    let loaded: Vec<std::result::Result<Document, LoadError>> = entries.par_iter().map(read_entry).collect();

    let mut out = CorpusLoad::default();
    for r in loaded {
        match r {
            Ok(d) => out.documents.push(d),
            Err(e) => out.errors.push(e),
        }
    }
    out.documents
        .sort_by(|a, b| a.id.cmp(&b.id).then(a.source_path.cmp(&b.source_path)));

    let mut unique: Vec<Document> = Vec::with_capacity(out.documents.len());
    for d in out.documents.drain(..) {
        if unique.last().is_some_and(|prev| prev.id == d.id) {
            out.errors.push(LoadError {
                path: d.source_path,
                message: format!("duplicate document id `{}`", d.id),
                byte_offset: None,
            });
        } else {
            unique.push(d);
        }
    }
    out.documents = unique;
    out.errors.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn directory_entries(root: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for item in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let item = item.map_err(|e| Error::io(root, e))?;
        let path = item.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if hidden || !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        entries.push(ManifestEntry {
            id: stem.to_string(),
            path,
            ruling_date: None,
            jurisdiction: None,
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(entries)
}

fn read_entry(entry: &ManifestEntry) -> std::result::Result<Document, LoadError> {
    let path = entry.path.display().to_string();
    let bytes = fs::read(&entry.path).map_err(|e| LoadError {
        path: path.clone(),
        message: e.to_string(),
        byte_offset: None,
    })?;
    let raw_text = String::from_utf8(bytes).map_err(|e| {
        let offset = e.utf8_error().valid_up_to();
        LoadError {
            path: path.clone(),
            message: format!("invalid UTF-8 at byte {offset}"),
            byte_offset: Some(offset),
        }
    })?;
    Ok(Document {
        id: entry.id.clone(),
        source_path: path,
        raw_text,
        cleaned_text: String::new(),
        header: String::new(),
        in_scope: false,
        ruling_date: entry.ruling_date,
        jurisdiction: entry.jurisdiction.clone(),
    })
}

/// Compiled header-code patterns.
#[derive(Debug, Clone, Default)]
pub struct CleanRules {
    patterns: Vec<Regex>,
}

impl CleanRules {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        let patterns = patterns
            .iter()
            .map(|p| Regex::new(p.as_ref()).map_err(|e| Error::pattern(p.as_ref(), e)))
            .collect::<Result<_>>()?;
        Ok(CleanRules { patterns })
    }

    pub fn patterns(&self) -> &[Regex] {
        &self.patterns
    }

    pub fn clean(&self, raw: &str) -> String {
        clean_text(raw, &self.patterns)
    }
}

static NEWLINE_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\n{3,}").unwrap());

/// Remove every match of the header-code patterns and collapse runs of three
/// or more newlines to two.
///
/// Removal can splice together a fresh match, so both steps repeat until the
/// text stops changing; each pass that changes anything shortens the text.
pub fn clean_text(raw: &str, patterns: &[Regex]) -> String {
    let mut text = raw.to_string();
    loop {
        let mut next = text.clone();
        for p in patterns {
            if let std::borrow::Cow::Owned(s) = p.replace_all(&next, "") {
                next = s;
            }
        }
        if let std::borrow::Cow::Owned(s) = NEWLINE_RUN.replace_all(&next, "\n\n") {
            next = s;
        }
        if next == text {
            return text;
        }
        text = next;
    }
}

/// The first `max_chars` characters of `text`.
pub fn header_of(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// Keyword rules applied to a ruling's header. Patterns are case-insensitive
/// regular expressions.
#[derive(Debug, Clone, Default)]
pub struct ScopeFilter {
    must: Vec<Regex>,
    must_not: Vec<Regex>,
}

impl ScopeFilter {
    pub fn new<S: AsRef<str>>(must: &[S], must_not: &[S]) -> Result<Self> {
        fn compile<S: AsRef<str>>(ps: &[S]) -> Result<Vec<Regex>> {
            ps.iter()
                .map(|p| {
                    RegexBuilder::new(p.as_ref())
                        .case_insensitive(true)
                        .build()
                        .map_err(|e| Error::pattern(p.as_ref(), e))
                })
                .collect()
        }
        Ok(ScopeFilter {
            must: compile(must)?,
            must_not: compile(must_not)?,
        })
    }

    pub fn accepts(&self, header: &str) -> bool {
        self.must.iter().all(|p| p.is_match(header)) && !self.must_not.iter().any(|p| p.is_match(header))
    }
}

pub fn classify_scope(doc: &Document, filter: &ScopeFilter) -> bool {
    filter.accepts(&doc.header)
}

/// Fill `cleaned_text`, `header` and `in_scope`.
pub fn prepare_document(doc: &mut Document, rules: &CleanRules, filter: &ScopeFilter, header_chars: usize) {
    doc.cleaned_text = rules.clean(&doc.raw_text);
    doc.header = header_of(&doc.cleaned_text, header_chars).to_string();
    doc.in_scope = classify_scope(doc, filter);
}
