//! Entity kinds and the extraction record shared by both extractors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::segmenter::{Origin, Segment};

/// The facts extracted from a ruling.
///
/// The three disability kinds carry a percentage and a compensation amount;
/// moral damage carries an amount only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    PhysicalDisability,
    PsychologicalDisability,
    PsychophysicalDisability,
    MoralDamage,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::PhysicalDisability,
        EntityKind::PsychologicalDisability,
        EntityKind::PsychophysicalDisability,
        EntityKind::MoralDamage,
    ];

    pub fn carries_percentage(self) -> bool {
        !matches!(self, EntityKind::MoralDamage)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::PhysicalDisability => "physical_disability",
            EntityKind::PsychologicalDisability => "psychological_disability",
            EntityKind::PsychophysicalDisability => "psychophysical_disability",
            EntityKind::MoralDamage => "moral_damage",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown entity kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Regex,
    Llm,
}

/// Pointer to the segment an extraction was read from. The text itself
/// stays in the segments artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub origin: Origin,
    pub char_start: usize,
    pub char_end: usize,
    pub center_block: Option<usize>,
    pub score: Option<f64>,
}

impl From<&Segment> for SegmentRef {
    fn from(s: &Segment) -> Self {
        SegmentRef {
            origin: s.origin,
            char_start: s.char_start,
            char_end: s.char_end,
            center_block: s.center_block,
            score: s.score,
        }
    }
}

/// One extraction result for a `(doc_id, kind)` pair.
///
/// `error` is set for records that stand in for a failed extraction
/// (parse failure, transport error, no segments); such records never carry
/// values and count as unanswered during evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc_id: String,
    pub kind: EntityKind,
    pub percentage: Option<f64>,
    pub amount: Option<f64>,
    pub method: Method,
    #[serde(default)]
    pub provenance: Vec<SegmentRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged_hallucination: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Extraction {
    pub fn new(doc_id: impl Into<String>, kind: EntityKind, method: Method) -> Self {
        Extraction {
            doc_id: doc_id.into(),
            kind,
            percentage: None,
            amount: None,
            method,
            provenance: Vec::new(),
            token_probs: None,
            min_prob: None,
            flagged_hallucination: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn failed(doc_id: impl Into<String>, kind: EntityKind, method: Method, error: impl fmt::Display) -> Self {
        let mut e = Extraction::new(doc_id, kind, method);
        e.error = Some(error.to_string());
        e
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// Both value fields are absent.
    pub fn is_empty(&self) -> bool {
        self.percentage.is_none() && self.amount.is_none()
    }

    /// A non-error record carrying at least one value.
    pub fn is_answered(&self) -> bool {
        !self.is_error() && !self.is_empty()
    }

    /// Attach token probabilities, keeping `min_prob` consistent with them.
    pub fn set_token_probs(&mut self, probs: Vec<f64>) {
        self.min_prob = probs.iter().copied().reduce(f64::min);
        self.token_probs = Some(probs);
    }
}
