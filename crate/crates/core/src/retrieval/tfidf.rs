use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::entity::EntityKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    pub df: usize,
    pub idf: f64,
}

/// Document frequencies over a set of blocks, with smoothed idf
/// `ln((1 + n) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub n_docs: usize,
    pub vocabulary: BTreeMap<String, TermStats>,
}

pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1 + n_docs) as f64 / (1 + df) as f64).ln() + 1.0
}

/// Lowercased whitespace tokens with edge punctuation trimmed; terms shorter
/// than two characters are dropped.
pub fn terms(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| t.chars().count() >= 2)
}

pub fn build_tfidf<S: AsRef<str>>(blocks: &[S]) -> Result<TfIdfModel> {
    let n_docs = blocks.len();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for b in blocks {
        let unique: HashSet<String> = terms(b.as_ref()).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyInput("tf-idf needs at least one block with terms"));
    }
    let vocabulary = df
        .into_iter()
        .map(|(t, df)| {
            (
                t,
                TermStats {
                    df,
                    idf: smoothed_idf(n_docs, df),
                },
            )
        })
        .collect();
    Ok(TfIdfModel { n_docs, vocabulary })
}

impl TfIdfModel {
    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|s| s.idf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub entity_kind: EntityKind,
    pub text: String,
    pub terms: Vec<QueryTerm>,
}

impl Query {
    /// A hand-written query with no term weights.
    pub fn literal(kind: EntityKind, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Config(format!("query for {kind} is empty")));
        }
        Ok(Query {
            entity_kind: kind,
            text,
            terms: Vec::new(),
        })
    }
}

/// Rank exemplar terms by total term frequency times idf and join the best
/// `top_m` into the query text. Terms outside the model's vocabulary are
/// ignored; ties go to the lexicographically smaller term.
pub fn make_query<S: AsRef<str>>(kind: EntityKind, model: &TfIdfModel, exemplars: &[S], top_m: usize) -> Result<Query> {
    if top_m == 0 {
        return Err(Error::Precondition("top_m must be at least 1".into()));
    }
    if model.vocabulary.is_empty() {
        return Err(Error::EmptyInput("tf-idf vocabulary is empty"));
    }
    let mut tf: BTreeMap<String, usize> = BTreeMap::new();
    for e in exemplars {
        for t in terms(e.as_ref()) {
            *tf.entry(t).or_default() += 1;
        }
    }
    let mut scored: Vec<QueryTerm> = tf
        .into_iter()
        .filter_map(|(term, count)| {
            model.idf(&term).map(|idf| QueryTerm {
                weight: count as f64 * idf,
                term,
            })
        })
        .collect();
    scored.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    scored.truncate(top_m);
    if scored.is_empty() {
        return Err(Error::EmptyInput("no exemplar term appears in the tf-idf vocabulary"));
    }
    let text = scored.iter().map(|t| t.term.as_str()).collect::<Vec<_>>().join(" ");
    Ok(Query {
        entity_kind: kind,
        text,
        terms: scored,
    })
}
