//! Rule-based baseline: keyword classification plus `%` and `$` patterns over
//! a single segment.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::entity::{EntityKind, Extraction, Method, SegmentRef};
use crate::numeric::parse_number_ar;
use crate::segmenter::{back_chars, forward_chars, percent_segments_with, Origin, Segment, SegmenterConfig};
use crate::{Error, Result};

/// Verbatim percentage capture; the unescaped `.` matches any character.
pub const VERBATIM_PERCENT_VALUE_PATTERN: &str = r"(\d+(?:,\d+)?(?:.\d+)?)\s*%";
/// Same pattern with the decimal dot escaped.
pub const CORRECTED_PERCENT_VALUE_PATTERN: &str = r"(\d+(?:,\d+)?(?:\.\d+)?)\s*%";
/// `$` followed by a digit run that may contain `.`/`,` separators.
pub const AMOUNT_PATTERN: &str = r"\$\s*(\d(?:[\d.,]*\d)?)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordConfig {
    pub physical: Vec<String>,
    pub psychological: Vec<String>,
    pub moral_damage: Vec<String>,
    /// Use the escaped-dot percentage pattern instead of the verbatim one.
    pub corrected_decimal_pattern: bool,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        KeywordConfig {
            physical: v(&["física", "físico"]),
            psychological: v(&["psicológica", "psicológico", "psíquica"]),
            moral_damage: v(&["daño moral"]),
            corrected_decimal_pattern: false,
        }
    }
}

fn keyword_regex(words: &[String], what: &str) -> Result<Regex> {
    if words.is_empty() {
        return Err(Error::Config(format!("keyword list `{what}` is empty")));
    }
    let alts: Vec<String> = words.iter().map(|w| regex::escape(w)).collect();
    let pattern = format!(r"(?i)\b(?:{})\b", alts.join("|"));
    Regex::new(&pattern).map_err(|e| Error::pattern(&pattern, e))
}

/// Values found in a text plus notes about matches that were skipped or
/// look suspicious.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Found {
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Compiled rules for the baseline extractor.
#[derive(Debug, Clone)]
pub struct RegexExtractor {
    physical: Regex,
    psychological: Regex,
    moral: Regex,
    percent_value: Regex,
    amount: Regex,
    percent_window: Regex,
    window_chars: usize,
    merge_windows: bool,
}

impl RegexExtractor {
    pub fn new(seg: &SegmenterConfig, kw: &KeywordConfig) -> Result<Self> {
        let pv = if kw.corrected_decimal_pattern {
            CORRECTED_PERCENT_VALUE_PATTERN
        } else {
            VERBATIM_PERCENT_VALUE_PATTERN
        };
        Ok(RegexExtractor {
            physical: keyword_regex(&kw.physical, "physical")?,
            psychological: keyword_regex(&kw.psychological, "psychological")?,
            moral: keyword_regex(&kw.moral_damage, "moral_damage")?,
            percent_value: Regex::new(pv).unwrap(),
            amount: Regex::new(AMOUNT_PATTERN).unwrap(),
            percent_window: Regex::new(&seg.percent_pattern).map_err(|e| Error::pattern(&seg.percent_pattern, e))?,
            window_chars: seg.regex_window_chars,
            merge_windows: seg.merge_windows,
        })
    }

    /// Physical and psychological keywords together mean psychophysical.
    pub fn classify_disability(&self, text: &str) -> Option<EntityKind> {
        match (self.physical.is_match(text), self.psychological.is_match(text)) {
            (true, true) => Some(EntityKind::PsychophysicalDisability),
            (true, false) => Some(EntityKind::PhysicalDisability),
            (false, true) => Some(EntityKind::PsychologicalDisability),
            (false, false) => None,
        }
    }

    pub fn extract_percentages(&self, text: &str) -> Found {
        scan_percentages(&self.percent_value, text)
    }

    pub fn extract_amounts(&self, text: &str) -> Found {
        scan_amounts(&self.amount, text)
    }

    /// Baseline over one document: the first `%` window yields at most one
    /// disability extraction (first percentage paired with first amount), and
    /// the first moral-damage keyword followed by an amount yields a moral
    /// damage extraction.
    pub fn extract(&self, doc: &Document) -> Vec<Extraction> {
        let text = &doc.cleaned_text;
        let mut out = Vec::new();

        let segments = percent_segments_with(
            &self.percent_window,
            &doc.id,
            text,
            self.window_chars,
            self.merge_windows,
        );
        if let Some(seg) = segments.first() {
            if let Some(kind) = self.classify_disability(&seg.text) {
                let pct = self.extract_percentages(&seg.text);
                let amt = self.extract_amounts(&seg.text);
                let mut e = Extraction::new(&doc.id, kind, Method::Regex);
                e.percentage = pct.values.first().copied();
                e.amount = amt.values.first().copied();
                e.provenance.push(SegmentRef::from(seg));
                e.warnings.extend(pct.warnings);
                e.warnings.extend(amt.warnings);
                out.push(e);
            }
        }

        if let Some(e) = self.moral_damage(doc) {
            out.push(e);
        }
        out.sort_by_key(|e| e.kind);
        out
    }

    fn moral_damage(&self, doc: &Document) -> Option<Extraction> {
        let text = &doc.cleaned_text;
        for m in self.moral.find_iter(text) {
            let start = back_chars(text, m.start(), self.window_chars);
            let end = forward_chars(text, m.start(), self.window_chars);
            let after = &text[m.start()..end];
            let amt = self.extract_amounts(after);
            let Some(&amount) = amt.values.first() else {
                continue;
            };
            let seg = Segment {
                doc_id: doc.id.clone(),
                origin: Origin::RegexWindow,
                char_start: start,
                char_end: end,
                center_block: None,
                score: None,
                text: text[start..end].to_string(),
            };
            let mut e = Extraction::new(&doc.id, EntityKind::MoralDamage, Method::Regex);
            e.amount = Some(amount);
            e.provenance.push(SegmentRef::from(&seg));
            e.warnings = amt.warnings;
            return Some(e);
        }
        None
    }
}

fn scan_percentages(re: &Regex, text: &str) -> Found {
    let mut found = Found::default();
    for cap in re.captures_iter(text) {
        let raw = &cap[1];
        match parse_number_ar(raw) {
            Ok(p) if p.value > 0.0 => {
                if p.value > 100.0 {
                    found.warnings.push(format!("percentage {raw} exceeds 100"));
                }
                found.warnings.extend(p.warning);
                found.values.push(p.value);
            }
            Ok(_) => found.warnings.push(format!("skipped zero percentage `{raw}`")),
            Err(e) => found.warnings.push(format!("skipped percentage: {e}")),
        }
    }
    found
}

fn scan_amounts(re: &Regex, text: &str) -> Found {
    let mut found = Found::default();
    for cap in re.captures_iter(text) {
        match parse_number_ar(&cap[1]) {
            Ok(p) => {
                found.warnings.extend(p.warning);
                found.values.push(p.value);
            }
            Err(e) => found.warnings.push(format!("skipped amount: {e}")),
        }
    }
    found
}

/// Percentages with the verbatim pattern.
pub fn extract_percentages(text: &str) -> Found {
    static RE: std::sync::LazyLock<Regex> =
        std::sync::LazyLock::new(|| Regex::new(VERBATIM_PERCENT_VALUE_PATTERN).unwrap());
    scan_percentages(&RE, text)
}

/// `$` amounts with Argentine normalisation.
pub fn extract_amounts(text: &str) -> Found {
    static RE: std::sync::LazyLock<Regex> = std::sync::LazyLock::new(|| Regex::new(AMOUNT_PATTERN).unwrap());
    scan_amounts(&RE, text)
}

pub fn regex_extract(doc: &Document, seg: &SegmenterConfig, kw: &KeywordConfig) -> Result<Vec<Extraction>> {
    Ok(RegexExtractor::new(seg, kw)?.extract(doc))
}
