//! Parsing raw generations into (CoT, chosen answer).
//!
//! Generations are expected to carry a JSON object with a "CoT" key and a
//! "Chosen answer" key. The parser tolerates prose before and after the
//! object (the first balanced object that is valid JSON wins), matches keys
//! case-insensitively, and accepts the chosen-answer spellings
//! "Answer 1" / "Answer1" / "1" and "Answer 2" / "Answer2" / "2"
//! (case-insensitive, optionally bracketed).

use crate::error::ParseError;

use super::prompt::AnswerSlot;

/// Extract the CoT text and the chosen answer from a raw generation.
pub fn parse_judgment(text: &str) -> Result<(String, AnswerSlot), ParseError> {
    let object = first_valid_object(text)?;
    let map = object.as_object().expect("scanner only yields objects");

    let cot = lookup(map, "CoT")
        .ok_or(ParseError::MissingKey("CoT"))?
        .as_str()
        .ok_or(ParseError::NotAString("CoT"))?
        .to_string();
    let chosen_raw = lookup(map, "Chosen answer")
        .ok_or(ParseError::MissingKey("Chosen answer"))?
        .as_str()
        .ok_or(ParseError::NotAString("Chosen answer"))?;
    let chosen = parse_answer(chosen_raw)?;
    Ok((cot, chosen))
}

fn lookup<'v>(
    map: &'v serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Option<&'v serde_json::Value> {
    map.iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key))
        .map(|(_, v)| v)
}

fn parse_answer(raw: &str) -> Result<AnswerSlot, ParseError> {
    let trimmed = raw
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .trim()
        .to_ascii_lowercase();
    match trimmed.as_str() {
        "answer 1" | "answer1" | "1" => Ok(AnswerSlot::Answer1),
        "answer 2" | "answer2" | "2" => Ok(AnswerSlot::Answer2),
        _ => Err(ParseError::UnrecognizedAnswer(raw.to_string())),
    }
}

/// Find the first balanced `{...}` span that parses as a JSON object.
fn first_valid_object(text: &str) -> Result<serde_json::Value, ParseError> {
    let bytes = text.as_bytes();
    let mut first_balanced_error: Option<ParseError> = None;
    let mut start = 0;
    while let Some(off) = text[start..].find('{') {
        let open = start + off;
        if let Some(end) = balanced_span(bytes, open) {
            let candidate = &text[open..end];
            match serde_json::from_str::<serde_json::Value>(candidate) {
                Ok(value) if value.is_object() => return Ok(value),
                Ok(_) => unreachable!("span starts with '{{'"),
                Err(e) => {
                    first_balanced_error
                        .get_or_insert_with(|| ParseError::MalformedJson(e.to_string()));
                }
            }
        }
        start = open + 1;
    }
    Err(first_balanced_error.unwrap_or(ParseError::NoJsonObject))
}

/// Scan a balanced object starting at `open` (which must index a `{`),
/// honoring JSON string literals and escapes. Returns the exclusive end.
fn balanced_span(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
