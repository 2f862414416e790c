//! Gold datasets, extraction scoring and the negative-segment benchmark.
//!
//! Accuracy is correct over answered predictions; recall is correct over
//! gold samples whose entity is present.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::entity::{EntityKind, Extraction};
use crate::numeric::{canonical, numerals_in};
use crate::segmenter::Segment;
use crate::{Error, Result};

/// One line of a gold JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub doc_id: String,
    pub kind: EntityKind,
    pub gold_percentage: Option<f64>,
    pub gold_amount: Option<f64>,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub doc_id: String,
    pub kind: EntityKind,
    pub gold_percentage: Option<f64>,
    pub gold_amount: Option<f64>,
    pub offered_segments: Vec<Segment>,
    pub entity_present_in_segments: bool,
}

impl LabeledSample {
    pub fn new(
        doc_id: impl Into<String>,
        kind: EntityKind,
        gold_percentage: Option<f64>,
        gold_amount: Option<f64>,
        offered_segments: Vec<Segment>,
    ) -> Self {
        let present = gold_in_segments(gold_percentage, gold_amount, &offered_segments);
        LabeledSample {
            doc_id: doc_id.into(),
            kind,
            gold_percentage,
            gold_amount,
            offered_segments,
            entity_present_in_segments: present,
        }
    }

    pub fn has_gold(&self) -> bool {
        self.gold_percentage.is_some() || self.gold_amount.is_some()
    }

    pub fn gold_strings(&self) -> Vec<String> {
        gold_strings(self.gold_percentage, self.gold_amount)
    }
}

impl From<GoldRecord> for LabeledSample {
    fn from(g: GoldRecord) -> Self {
        LabeledSample::new(g.doc_id, g.kind, g.gold_percentage, g.gold_amount, g.segments)
    }
}

impl From<&LabeledSample> for GoldRecord {
    fn from(s: &LabeledSample) -> Self {
        GoldRecord {
            doc_id: s.doc_id.clone(),
            kind: s.kind,
            gold_percentage: s.gold_percentage,
            gold_amount: s.gold_amount,
            segments: s.offered_segments.clone(),
        }
    }
}

/// Normalized (two-decimal) strings of the present gold values.
pub fn gold_strings(percentage: Option<f64>, amount: Option<f64>) -> Vec<String> {
    percentage.into_iter().chain(amount).map(canonical).collect()
}

/// Every present gold value occurs as a numeral in at least one segment.
/// Samples without gold values are never present.
pub fn gold_in_segments(percentage: Option<f64>, amount: Option<f64>, segments: &[Segment]) -> bool {
    let wanted = gold_strings(percentage, amount);
    if wanted.is_empty() {
        return false;
    }
    let found: BTreeSet<String> = segments.iter().flat_map(|s| numerals_in(&s.text)).collect();
    wanted.iter().all(|w| found.contains(w))
}

/// Samples whose gold values can be found in the offered segments, in input
/// order.
pub fn filter_dataset2(samples: &[LabeledSample]) -> Vec<LabeledSample> {
    samples
        .iter()
        .filter(|s| s.entity_present_in_segments)
        .cloned()
        .collect()
}

/// Fraction of gold-bearing samples whose retrieved segments contain the
/// gold values.
pub fn segmentation_qa<F>(samples: &[LabeledSample], mut retrieve: F) -> Result<f64>
where
    F: FnMut(&LabeledSample) -> Result<Vec<Segment>>,
{
    let mut n = 0usize;
    let mut hits = 0usize;
    for s in samples.iter().filter(|s| s.has_gold()) {
        n += 1;
        let segs = retrieve(s)?;
        if gold_in_segments(s.gold_percentage, s.gold_amount, &segs) {
            hits += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("segmentation QA needs samples with gold values"));
    }
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub percentage: f64,
    pub amount: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            percentage: 0.01,
            amount: 0.01,
        }
    }
}

fn field_matches(pred: Option<f64>, gold: Option<f64>, tol: f64) -> bool {
    match (pred, gold) {
        (Some(p), Some(g)) => (p - g).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

/// Every gold-present field matches within tolerance and every gold-absent
/// field is absent. Error records are never correct.
pub fn is_correct(pred: &Extraction, gold: &LabeledSample, tol: &Tolerances) -> bool {
    !pred.is_error()
        && field_matches(pred.percentage, gold.gold_percentage, tol.percentage)
        && field_matches(pred.amount, gold.gold_amount, tol.amount)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub n_samples: usize,
    pub n_gold_present: usize,
    pub n_answered: usize,
    pub n_correct: usize,
    /// Empty gold matched by an empty prediction. Not part of `n_correct`.
    pub n_true_negatives: usize,
    /// Non-empty predictions for samples whose gold is empty.
    pub n_invented: usize,
    pub n_parse_failures: usize,
    pub n_errors: usize,
    pub n_missing: usize,
    pub accuracy: f64,
    pub accuracy_defined: bool,
    pub recall: f64,
}

impl Counts {
    fn finish(&mut self) {
        self.accuracy_defined = self.n_answered > 0;
        self.accuracy = ratio(self.n_correct, self.n_answered);
        self.recall = ratio(self.n_correct, self.n_gold_present);
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: Counts,
    pub per_kind: BTreeMap<EntityKind, Counts>,
    /// Predictions with no matching gold sample.
    pub n_unmatched_predictions: usize,
    /// Share of empty-gold samples that received an invented answer.
    pub hallucination_rate: Option<f64>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<26} {:>7} {:>8} {:>7} {:>9} {:>8} {:>8}",
            "kind", "samples", "answered", "correct", "accuracy", "recall", "failures"
        );
        let row = |s: &mut String, name: &str, c: &Counts| {
            let acc = if c.accuracy_defined {
                format!("{:.4}", c.accuracy)
            } else {
                "n/a".to_string()
            };
            let _ = writeln!(
                s,
                "{:<26} {:>7} {:>8} {:>7} {:>9} {:>8.4} {:>8}",
                name, c.n_samples, c.n_answered, c.n_correct, acc, c.recall, c.n_errors
            );
        };
        for (k, c) in &self.per_kind {
            row(&mut s, k.as_str(), c);
        }
        row(&mut s, "all", &self.overall);
        let _ = writeln!(s, "accuracy = correct / answered; recall = correct / gold present");
        if let Some(h) = self.hallucination_rate {
            let _ = writeln!(s, "invented answers on empty gold: {h:.4}");
        }
        s
    }
}

/// Score predictions against gold. Predictions are joined on
/// `(doc_id, kind)`; a gold sample without a prediction counts as
/// unanswered.
pub fn score_extractions(preds: &[Extraction], gold: &[LabeledSample], tol: &Tolerances) -> Result<EvalReport> {
    let mut by_key: HashMap<(&str, EntityKind), &Extraction> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_key.insert((p.doc_id.as_str(), p.kind), p).is_some() {
            return Err(Error::DuplicatePrediction {
                doc_id: p.doc_id.clone(),
                kind: p.kind,
            });
        }
    }
    let mut gold_keys = BTreeSet::new();
    for g in gold {
        if !gold_keys.insert((g.doc_id.as_str(), g.kind)) {
            return Err(Error::DuplicateKey(format!("gold sample ({}, {})", g.doc_id, g.kind)));
        }
    }

    let mut overall = Counts::default();
    let mut per_kind: BTreeMap<EntityKind, Counts> = BTreeMap::new();
    let mut n_empty_gold = 0usize;
    for g in gold {
        let pred = by_key.get(&(g.doc_id.as_str(), g.kind)).copied();
        let kc = per_kind.entry(g.kind).or_default();
        for c in [&mut overall, kc] {
            c.n_samples += 1;
            if g.has_gold() {
                c.n_gold_present += 1;
            }
            let Some(p) = pred else {
                c.n_missing += 1;
                continue;
            };
            if p.is_error() {
                c.n_errors += 1;
                if p.error.as_deref() == Some(&Error::ParseFailure.to_string()) {
                    c.n_parse_failures += 1;
                }
                continue;
            }
            if p.is_answered() {
                c.n_answered += 1;
                if g.has_gold() && is_correct(p, g, tol) {
                    c.n_correct += 1;
                }
                if !g.has_gold() {
                    c.n_invented += 1;
                }
            } else if !g.has_gold() {
                c.n_true_negatives += 1;
            }
        }
        if !g.has_gold() {
            n_empty_gold += 1;
        }
    }
    overall.finish();
    per_kind.values_mut().for_each(Counts::finish);
    let n_unmatched_predictions = by_key.keys().filter(|k| !gold_keys.contains(*k)).count();
    Ok(EvalReport {
        hallucination_rate: (n_empty_gold > 0).then(|| overall.n_invented as f64 / n_empty_gold as f64),
        overall,
        per_kind,
        n_unmatched_predictions,
    })
}

/// Segments known to lack the entity, offered together for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeGroup {
    pub doc_id: String,
    pub kind: EntityKind,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub n_runs: usize,
    pub n_invented: usize,
    pub n_empty: usize,
    pub n_errors: usize,
    /// Invented (non-empty) extractions over all runs.
    pub rate: f64,
    pub runs: Vec<Extraction>,
}

/// Run the extractor once per negative group. The correct answer is always
/// the empty extraction; anything else is a hallucination.
pub fn hallucination_benchmark<F>(groups: &[NegativeGroup], mut extract: F) -> Result<BenchResult>
where
    F: FnMut(&NegativeGroup) -> Extraction,
{
    if groups.is_empty() {
        return Err(Error::EmptyInput("hallucination benchmark needs negative segments"));
    }
    let runs: Vec<Extraction> = groups.iter().map(&mut extract).collect();
    let n_errors = runs.iter().filter(|e| e.is_error()).count();
    let n_invented = runs.iter().filter(|e| e.is_answered()).count();
    Ok(BenchResult {
        n_runs: runs.len(),
        n_invented,
        n_empty: runs.len() - n_invented - n_errors,
        n_errors,
        rate: n_invented as f64 / runs.len() as f64,
        runs,
    })
}

/// An answered run reduced to what the threshold sweep needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub min_prob: f64,
    pub correct: bool,
}

/// Answered predictions with probabilities, judged against gold. Runs with no
/// gold sample are judged incorrect only when they answered on empty gold.
pub fn sweep_runs(preds: &[Extraction], gold: &[LabeledSample], tol: &Tolerances) -> Vec<SweepRun> {
    let by_key: HashMap<(&str, EntityKind), &LabeledSample> =
        gold.iter().map(|g| ((g.doc_id.as_str(), g.kind), g)).collect();
    preds
        .iter()
        .filter(|p| p.is_answered())
        .filter_map(|p| {
            let min_prob = p.min_prob?;
            let g = by_key.get(&(p.doc_id.as_str(), p.kind))?;
            Some(SweepRun {
                min_prob,
                correct: is_correct(p, g, tol),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_u: f64,
    pub n_flagged: usize,
    pub flagged_rate: f64,
    pub flagged_among_incorrect: Option<f64>,
    pub flagged_among_correct: Option<f64>,
}

pub fn threshold_sweep(runs: &[SweepRun], grid: &[f64]) -> Vec<SweepRow> {
    let n_correct = runs.iter().filter(|r| r.correct).count();
    let n_incorrect = runs.len() - n_correct;
    let share = |k: usize, n: usize| (n > 0).then(|| k as f64 / n as f64);
    grid.iter()
        .map(|&p_u| {
            let flagged = runs.iter().filter(|r| r.min_prob < p_u);
            let (mut fc, mut fi) = (0, 0);
            for r in flagged {
                if r.correct {
                    fc += 1;
                } else {
                    fi += 1;
                }
            }
            SweepRow {
                p_u,
                n_flagged: fc + fi,
                flagged_rate: ratio(fc + fi, runs.len()),
                flagged_among_incorrect: share(fi, n_incorrect),
                flagged_among_correct: share(fc, n_correct),
            }
        })
        .collect()
}

/// `steps + 1` evenly spaced thresholds from 0 to 1.
pub fn uniform_grid(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}
