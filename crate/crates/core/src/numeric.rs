//! Argentine-locale numerals: `.` groups thousands, `,` is the decimal mark.

use std::sync::LazyLock;

use regex::Regex;

/// A parsed numeral plus a note when the reading was a guess.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNumber {
    pub value: f64,
    pub warning: Option<String>,
}

/// Parse a numeral written with Argentine conventions.
///
/// `"1.234.567,89"` is 1234567.89 and `"500.000"` is 500000. A single dot
/// followed by anything other than three digits (`"15.5"`) is read as a
/// decimal point, with a warning.
pub fn parse_number_ar(raw: &str) -> Result<ParsedNumber, String> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty numeral".into());
    }
    if !s.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Err(format!("`{raw}` is not a numeral"));
    }

    let (int_part, frac_part) = match s.matches(',').count() {
        0 => (s.as_str(), None),
        1 => {
            let (i, f) = s.split_once(',').unwrap();
            (i, Some(f))
        }
        _ => return Err(format!("`{raw}` has more than one decimal comma")),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("`{raw}` has a malformed fraction"));
        }
    }

    let groups: Vec<&str> = int_part.split('.').collect();
    if groups.iter().any(|g| g.is_empty()) {
        return Err(format!("`{raw}` has an empty digit group"));
    }

    let mut warning = None;
    let digits = if groups.len() == 1 {
        groups[0].to_string()
    } else if groups[1..].iter().all(|g| g.len() == 3) {
        groups.concat()
    } else if groups.len() == 2 && frac_part.is_none() {
        warning = Some(format!(
            "`{raw}`: single dot group not of three digits, read as a decimal point"
        ));
        return format!("{}.{}", groups[0], groups[1])
            .parse()
            .map(|value| ParsedNumber { value, warning })
            .map_err(|e| format!("`{raw}`: {e}"));
    } else {
        return Err(format!("`{raw}` has irregular thousands grouping"));
    };

    let text = match frac_part {
        Some(f) => format!("{digits}.{f}"),
        None => digits,
    };
    text.parse()
        .map(|value| ParsedNumber { value, warning })
        .map_err(|e| format!("`{raw}`: {e}"))
}

static NUMERAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d(?:[\d.,]*\d)?").unwrap());

/// Canonical string form used to compare values for presence checks:
/// rounded to cents, dot decimal.
pub fn canonical(value: f64) -> String {
    format!("{value:.2}")
}

/// Canonical forms of every numeral appearing in `text`.
pub fn numerals_in(text: &str) -> Vec<String> {
    NUMERAL
        .find_iter(text)
        .filter_map(|m| parse_number_ar(m.as_str()).ok())
        .map(|p| canonical(p.value))
        .collect()
}

/// Spanish decimal rendering (comma decimal, no grouping), shortest form.
pub fn format_es(value: f64) -> String {
    value.to_string().replace('.', ",")
}
