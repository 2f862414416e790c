use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::entity::EntityKind;
use crate::segmenter::Segment;
use crate::{Error, Result};

pub const ANSWER_FORMAT: &str =
    "Answer with a single JSON object with exactly the keys \"percentage\" and \"amount\". \
Use numbers without thousands separators, and use null for any value that does not appear in the excerpts.";

const DEFAULT_TEMPLATE: &str = "You extract data from Argentine civil court rulings about traffic accidents.\n\
{entity_kind_instruction}\n\n\
Excerpts from the ruling:\n\
{segments}\n\n\
{answer_format}";

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap());

/// Prompt text with `{entity_kind_instruction}`, `{segments}` and optionally
/// `{answer_format}` placeholders. When `{answer_format}` is absent the answer
/// format instruction is appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub template: String,
    pub instructions: BTreeMap<EntityKind, String>,
    /// Line placed between consecutive segments.
    pub delimiter: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        let instructions = [
            (
                EntityKind::PhysicalDisability,
                "Find the percentage of physical disability granted to the plaintiff and the compensation amount awarded for it.",
            ),
            (
                EntityKind::PsychologicalDisability,
                "Find the percentage of psychological disability granted to the plaintiff and the compensation amount awarded for it.",
            ),
            (
                EntityKind::PsychophysicalDisability,
                "Find the percentage of combined psychophysical disability granted to the plaintiff and the compensation amount awarded for it.",
            ),
            (
                EntityKind::MoralDamage,
                "Find the compensation amount awarded for moral damage. Moral damage has no percentage, so \"percentage\" must be null.",
            ),
        ]
        .into_iter()
        .map(|(k, s)| (k, s.to_string()))
        .collect();
        PromptTemplate {
            template: DEFAULT_TEMPLATE.to_string(),
            instructions,
            delimiter: "-----".to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<()> {
        for cap in PLACEHOLDER.captures_iter(&self.template) {
            let name = &cap[1];
            if !matches!(name, "entity_kind_instruction" | "segments" | "answer_format") {
                return Err(Error::Config(format!(
                    "unbound placeholder {{{name}}} in prompt template"
                )));
            }
        }
        if !self.template.contains("{segments}") {
            return Err(Error::Config("prompt template lacks {segments}".into()));
        }
        Ok(())
    }
}

/// Segments by descending score (unscored last), then by position.
pub fn order_segments(segments: &[Segment]) -> Vec<&Segment> {
    let mut v: Vec<&Segment> = segments.iter().collect();
    v.sort_by(|a, b| {
        let sa = a.score.unwrap_or(f64::NEG_INFINITY);
        let sb = b.score.unwrap_or(f64::NEG_INFINITY);
        sb.total_cmp(&sa)
            .then(a.doc_id.cmp(&b.doc_id))
            .then(a.char_start.cmp(&b.char_start))
            .then(a.char_end.cmp(&b.char_end))
    });
    v
}

pub fn render_prompt(tpl: &PromptTemplate, kind: EntityKind, segments: &[Segment]) -> Result<String> {
    if segments.is_empty() {
        return Err(Error::Precondition("cannot render a prompt without segments".into()));
    }
    tpl.validate()?;
    let instruction = tpl
        .instructions
        .get(&kind)
        .ok_or_else(|| Error::Config(format!("no prompt instruction for {kind}")))?;
    let joined = order_segments(segments)
        .into_iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(&format!("\n{}\n", tpl.delimiter));

    // One pass over the template, so placeholder-like text inside segments is
    // left alone.
    let mut out = PLACEHOLDER
        .replace_all(&tpl.template, |cap: &Captures| match &cap[1] {
            "entity_kind_instruction" => instruction.clone(),
            "segments" => joined.clone(),
            "answer_format" => ANSWER_FORMAT.to_string(),
            _ => unreachable!("validated above"),
        })
        .into_owned();
    if !tpl.template.contains("{answer_format}") {
        out.push_str("\n\n");
        out.push_str(ANSWER_FORMAT);
    }
    Ok(out)
}
