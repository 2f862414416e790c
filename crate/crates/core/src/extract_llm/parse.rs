use serde_json::{Map, Value};

use crate::entity::EntityKind;
use crate::numeric::parse_number_ar;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedAnswer {
    pub percentage: Option<f64>,
    pub amount: Option<f64>,
    pub warnings: Vec<String>,
}

impl ParsedAnswer {
    pub fn is_empty(&self) -> bool {
        self.percentage.is_none() && self.amount.is_none()
    }
}

/// First JSON object embedded anywhere in `text`.
pub fn first_json_object(text: &str) -> Option<Map<String, Value>> {
    text.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    })
}

fn number_field(obj: &Map<String, Value>, key: &str, warnings: &mut Vec<String>) -> Option<f64> {
    match obj.get(key)? {
        Value::Null => None,
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let cleaned: String = s
                .chars()
                .filter(|c| !matches!(c, '%' | '$') && !c.is_whitespace())
                .collect();
            if cleaned.is_empty() || cleaned.eq_ignore_ascii_case("null") {
                return None;
            }
            match parse_number_ar(&cleaned) {
                Ok(p) => {
                    warnings.extend(p.warning);
                    Some(p.value)
                }
                Err(e) => {
                    warnings.push(format!("`{key}`: {e}"));
                    None
                }
            }
        }
        other => {
            warnings.push(format!("`{key}` has unsupported value {other}"));
            None
        }
    }
}

/// Read `"percentage"` and `"amount"` from the first JSON object in a model
/// reply. Nulls and implausible values become absent; moral damage never
/// carries a percentage.
pub fn parse_response(text: &str, kind: EntityKind) -> Result<ParsedAnswer> {
    let obj = first_json_object(text).ok_or(Error::ParseFailure)?;
    let mut out = ParsedAnswer::default();
    let mut warnings = Vec::new();

    let pct = number_field(&obj, "percentage", &mut warnings);
    out.percentage = match pct {
        _ if !kind.carries_percentage() => None,
        Some(p) if p > 0.0 && p <= 100.0 => Some(p),
        Some(0.0) => None,
        Some(p) => {
            warnings.push(format!("percentage {p} outside (0, 100], dropped"));
            None
        }
        None => None,
    };
    out.amount = match number_field(&obj, "amount", &mut warnings) {
        Some(a) if a < 0.0 => {
            warnings.push(format!("negative amount {a} dropped"));
            None
        }
        a => a,
    };
    out.warnings = warnings;
    Ok(out)
}
