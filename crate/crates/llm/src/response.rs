//! Tolerant parsing of the model's JSON answers.

use std::collections::BTreeMap;

use charspace::tagger::Component;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message}")]
pub struct ResponseError {
    pub message: String,
    /// The model output as received.
    pub raw: String,
}

impl ResponseError {
    fn new(message: impl Into<String>, raw: &str) -> Self {
        ResponseError {
            message: message.into(),
            raw: raw.to_string(),
        }
    }
}

/// Counts per requested character plus names the model returned that were
/// not asked about.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedCounts {
    pub counts: BTreeMap<String, [u64; 6]>,
    pub unknown: Vec<String>,
}

fn strip_fences(s: &str) -> &str {
    let t = s.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Removes commas that directly precede `}` or `]`, outside strings.
fn drop_trailing_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let (mut in_str, mut escaped) = (false, false);
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}' | ']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Parses a JSON object, with one repair pass: fences stripped, text
/// outside the outermost braces dropped, trailing commas removed.
pub fn extract_object(raw: &str) -> Result<Map<String, Value>, ResponseError> {
    let first = serde_json::from_str::<Value>(raw.trim());
    let value = match first {
        Ok(v) => v,
        Err(_) => {
            let body = strip_fences(raw);
            let body = match (body.find('{'), body.rfind('}')) {
                (Some(a), Some(b)) if a < b => &body[a..=b],
                _ => body,
            };
            serde_json::from_str(&drop_trailing_commas(body))
                .map_err(|e| ResponseError::new(format!("response is not JSON after repair: {e}"), raw))?
        }
    };
    match value {
        Value::Object(m) => Ok(m),
        other => Err(ResponseError::new(format!("expected a JSON object, got {}", kind(&other)), raw)),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn count(v: &Value, what: &str, raw: &str) -> Result<u64, ResponseError> {
    v.as_u64()
        .ok_or_else(|| ResponseError::new(format!("{what}: expected a non-negative integer, got {v}"), raw))
}

fn normalize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Reads a counting answer for `characters`. With one expected tag the
/// answer maps names to bare integers; with several it maps names to tag
/// objects. Characters the model left out get zero vectors; names outside
/// `characters` are reported in `unknown`.
pub fn parse_count_response(raw: &str, expected_tags: &[Component], characters: &[String]) -> Result<ParsedCounts, ResponseError> {
    let obj = extract_object(raw)?;
    let by_norm: BTreeMap<String, &String> = characters.iter().map(|c| (normalize(c), c)).collect();
    let mut out = ParsedCounts {
        counts: characters.iter().map(|c| (c.clone(), [0; 6])).collect(),
        unknown: Vec::new(),
    };
    for (name, value) in &obj {
        let mut v = [0u64; 6];
        match (expected_tags, value) {
            ([tag], Value::Object(_)) | ([tag], Value::Number(_)) => {
                let x = match value {
                    Value::Object(m) => m.get(tag.as_str()).unwrap_or(&Value::from(0)).clone(),
                    other => other.clone(),
                };
                v[tag.index()] = count(&x, name, raw)?;
            }
            (tags, Value::Object(m)) => {
                for (key, x) in m {
                    let tag = Component::parse(key)
                        .filter(|t| tags.contains(t))
                        .ok_or_else(|| ResponseError::new(format!("{name}: unexpected tag `{key}`"), raw))?;
                    v[tag.index()] = count(x, &format!("{name}.{key}"), raw)?;
                }
            }
            (_, other) => return Err(ResponseError::new(format!("{name}: expected counts, got {}", kind(other)), raw)),
        }
        match by_norm.get(&normalize(name)) {
            Some(&c) => {
                let slot = out.counts.get_mut(c).expect("seeded above");
                for (a, b) in slot.iter_mut().zip(v) {
                    *a += b;
                }
            }
            None => out.unknown.push(name.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn all_tag_object_is_registered() {
        let raw = r#"{"Elizabeth": {"N":2,"A":0,"C":1,"I":3,"DN":0,"DC":4}}"#;
        let p = parse_count_response(raw, &Component::ALL, &chars(&["Elizabeth", "Jane"])).unwrap();
        assert_eq!(p.counts["Elizabeth"], [2, 0, 1, 3, 4, 0]);
        assert_eq!(p.counts["Jane"], [0; 6]);
        assert!(p.unknown.is_empty());
    }

    #[test]
    fn fenced_payload_with_trailing_comma_parses() {
        let raw = "```json\n{\n  \"Jane\": 3,\n  \"Bingley\": 1,\n}\n```";
        let p = parse_count_response(raw, &[Component::C], &chars(&["Jane"])).unwrap();
        assert_eq!(p.counts["Jane"], [0, 0, 3, 0, 0, 0]);
        assert_eq!(p.unknown, vec!["Bingley".to_string()]);
    }

    #[test]
    fn negative_or_fractional_counts_rejected() {
        let e = parse_count_response(r#"{"Jane": {"N": -1}}"#, &Component::ALL, &chars(&["Jane"])).unwrap_err();
        assert!(e.message.contains("non-negative"), "{e}");
        assert_eq!(e.raw, r#"{"Jane": {"N": -1}}"#);
        assert!(parse_count_response(r#"{"Jane": 1.5}"#, &[Component::N], &chars(&["Jane"])).is_err());
    }

    #[test]
    fn garbage_keeps_raw_payload() {
        let e = parse_count_response("I cannot help with that.", &Component::ALL, &chars(&["Jane"])).unwrap_err();
        assert_eq!(e.raw, "I cannot help with that.");
    }

    #[test]
    fn names_match_case_and_spacing_insensitively() {
        let p = parse_count_response(r#"{"mr  darcy": {"N": 1}}"#, &Component::ALL, &chars(&["Mr Darcy"])).unwrap();
        assert_eq!(p.counts["Mr Darcy"][0], 1);
    }

    #[test]
    fn commas_inside_strings_survive_repair() {
        let m = extract_object("noise {\"a, }\": 1,} noise").unwrap();
        assert_eq!(m["a, }"], 1);
    }
}
