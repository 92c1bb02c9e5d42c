//! Response grammars: extraction of translations from model replies and
//! the inverse rendering used to build fixtures.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::approach::{Approach, ResponseGrammar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("response holds {got} translations, expected {expected}")]
    Count { got: usize, expected: usize },
    #[error("malformed response: {0}")]
    Format(String),
}

impl ParseError {
    /// Both variants justify re-sending the request.
    pub fn is_retryable(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLine {
    pub translation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub situation: Option<String>,
}

impl ParsedLine {
    pub fn new(translation: impl Into<String>) -> Self {
        Self {
            translation: translation.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTranslation {
    pub lines: Vec<ParsedLine>,
    /// Lines per page for documents grouped by page.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story_target: Option<String>,
}

impl ParsedTranslation {
    pub fn translations(&self) -> Vec<&str> {
        self.lines.iter().map(|l| l.translation.as_str()).collect()
    }

    /// Lines of page `n` of a page-grouped document.
    pub fn page(&self, n: usize) -> Option<&[ParsedLine]> {
        let lengths = self.page_lengths.as_ref()?;
        let start: usize = lengths.iter().take(n).sum();
        let len = *lengths.get(n)?;
        self.lines.get(start..start + len)
    }

    /// Checks the per-page grouping against `expected`.
    pub fn expect_pages(&self, expected: &[usize]) -> Result<(), ParseError> {
        let got = self.page_lengths.as_deref().unwrap_or(&[]);
        if got.len() != expected.len() {
            return Err(ParseError::Format(format!(
                "response groups lines into {} pages, expected {}",
                got.len(),
                expected.len()
            )));
        }
        for (i, (g, e)) in got.iter().zip(expected).enumerate() {
            if g != e {
                return Err(ParseError::Format(format!(
                    "page {} of the response holds {g} lines, expected {e}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_response(
    raw: &str,
    approach: Approach,
    expected_lines: usize,
) -> Result<ParsedTranslation, ParseError> {
    parse_with_grammar(raw, approach.grammar(), expected_lines)
}

pub fn parse_with_grammar(
    raw: &str,
    grammar: ResponseGrammar,
    expected_lines: usize,
) -> Result<ParsedTranslation, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Format("empty response".into()));
    }
    let parsed = match grammar {
        ResponseGrammar::Bracketed => parse_bracketed(raw, false)?,
        ResponseGrammar::BracketedExplained => parse_bracketed(raw, true)?,
        ResponseGrammar::CodDocument => parse_cod(&json_object(raw)?)?,
        ResponseGrammar::LineObjects => parse_line_objects(&json_object(raw)?)?,
        ResponseGrammar::ListOfLists => parse_list_of_lists(&json_object(raw)?)?,
    };
    if parsed.lines.len() != expected_lines {
        return Err(ParseError::Count {
            got: parsed.lines.len(),
            expected: expected_lines,
        });
    }
    Ok(parsed)
}

/// Top-level `[...]` spans in order, each optionally followed by a
/// balanced `(...)` explanation.
fn parse_bracketed(raw: &str, keep_explanation: bool) -> Result<ParsedTranslation, ParseError> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let mut lines = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].1 != '[' {
            i += 1;
            continue;
        }
        let open = chars[i].0;
        let close = matching(&chars, i, '[', ']')
            .ok_or_else(|| ParseError::Format(format!("unclosed '[' at byte {open}")))?;
        let mut line = ParsedLine::new(&raw[open + 1..chars[close].0]);
        i = close + 1;
        let mut j = i;
        while j < chars.len() && matches!(chars[j].1, ' ' | '\t') {
            j += 1;
        }
        if j < chars.len() && chars[j].1 == '(' {
            if let Some(end) = matching(&chars, j, '(', ')') {
                if keep_explanation {
                    line.explanation = Some(String::from(&raw[chars[j].0 + 1..chars[end].0]));
                }
                i = end + 1;
            }
        }
        lines.push(line);
    }
    Ok(ParsedTranslation {
        lines,
        ..ParsedTranslation::default()
    })
}

fn matching(chars: &[(usize, char)], start: usize, open: char, close: char) -> Option<usize> {
    let mut depth = 0usize;
    for (k, &(_, c)) in chars.iter().enumerate().skip(start) {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

/// The JSON object spanning the first `{` to the last `}`, which also
/// discards code fences and surrounding prose.
fn json_object(raw: &str) -> Result<Map<String, Value>, ParseError> {
    let (Some(start), Some(end)) = (raw.find('{'), raw.rfind('}')) else {
        return Err(ParseError::Format("no JSON object in response".into()));
    };
    if end < start {
        return Err(ParseError::Format("no JSON object in response".into()));
    }
    match serde_json::from_str::<Value>(&raw[start..=end]) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ParseError::Format("response JSON is not an object".into())),
        Err(e) => Err(ParseError::Format(format!("invalid JSON: {e}"))),
    }
}

fn string_field(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, ParseError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ParseError::Format(format!("\"{key}\" is not a string"))),
    }
}

fn required_string(obj: &Map<String, Value>, key: &str) -> Result<String, ParseError> {
    string_field(obj, key)?.ok_or_else(|| ParseError::Format(format!("missing key \"{key}\"")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, ParseError> {
    v.as_array()
        .ok_or_else(|| ParseError::Format(format!("{what} is not a list")))
}

fn line_object(v: &Value) -> Result<ParsedLine, ParseError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ParseError::Format("line entry is not an object".into()))?;
    Ok(ParsedLine {
        translation: required_string(obj, "translation")?,
        source: string_field(obj, "line")?,
        explanation: string_field(obj, "explanation")?,
        reasoning: string_field(obj, "reasoning")?,
        speaker: string_field(obj, "speaker")?,
        situation: string_field(obj, "situation")?,
    })
}

fn parse_cod(doc: &Map<String, Value>) -> Result<ParsedTranslation, ParseError> {
    let lines = doc
        .get("lines")
        .ok_or_else(|| ParseError::Format("missing key \"lines\"".into()))?;
    Ok(ParsedTranslation {
        lines: array(lines, "\"lines\"")?
            .iter()
            .map(line_object)
            .collect::<Result<_, _>>()?,
        page_lengths: None,
        story_source: Some(required_string(doc, "story_jp")?),
        story_target: Some(required_string(doc, "story_en")?),
    })
}

fn parse_line_objects(doc: &Map<String, Value>) -> Result<ParsedTranslation, ParseError> {
    if let Some(pages) = doc.get("pages") {
        let mut lines = Vec::new();
        let mut lengths = Vec::new();
        for page in array(pages, "\"pages\"")? {
            let entries = array(page, "page entry")?;
            lengths.push(entries.len());
            for e in entries {
                lines.push(line_object(e)?);
            }
        }
        return Ok(ParsedTranslation {
            lines,
            page_lengths: Some(lengths),
            ..ParsedTranslation::default()
        });
    }
    let lines = doc
        .get("lines")
        .ok_or_else(|| ParseError::Format("missing key \"pages\" or \"lines\"".into()))?;
    Ok(ParsedTranslation {
        lines: array(lines, "\"lines\"")?
            .iter()
            .map(line_object)
            .collect::<Result<_, _>>()?,
        ..ParsedTranslation::default()
    })
}

fn parse_list_of_lists(doc: &Map<String, Value>) -> Result<ParsedTranslation, ParseError> {
    let pages = doc
        .get("pages")
        .ok_or_else(|| ParseError::Format("missing key \"pages\"".into()))?;
    let mut lines = Vec::new();
    let mut lengths = Vec::new();
    for page in array(pages, "\"pages\"")? {
        let entries = array(page, "page entry")?;
        lengths.push(entries.len());
        for e in entries {
            let t = e
                .as_str()
                .ok_or_else(|| ParseError::Format("translation is not a string".into()))?;
            lines.push(ParsedLine::new(t));
        }
    }
    Ok(ParsedTranslation {
        lines,
        page_lengths: Some(lengths),
        ..ParsedTranslation::default()
    })
}

/// Renders `parsed` in the layout of `grammar`, as a well-behaved model
/// would answer.
pub fn render_response(grammar: ResponseGrammar, parsed: &ParsedTranslation) -> String {
    match grammar {
        ResponseGrammar::Bracketed | ResponseGrammar::BracketedExplained => {
            let mut out = String::new();
            for (i, line) in parsed.lines.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push('[');
                out.push_str(&line.translation);
                out.push(']');
                if let (ResponseGrammar::BracketedExplained, Some(e)) = (grammar, &line.explanation)
                {
                    out.push('(');
                    out.push_str(e);
                    out.push(')');
                }
            }
            out
        }
        ResponseGrammar::CodDocument => {
            let mut doc = Map::new();
            doc.insert(
                "story_jp".into(),
                Value::String(parsed.story_source.clone().unwrap_or_default()),
            );
            doc.insert(
                "story_en".into(),
                Value::String(parsed.story_target.clone().unwrap_or_default()),
            );
            doc.insert(
                "lines".into(),
                Value::Array(parsed.lines.iter().map(line_value).collect()),
            );
            pretty(Value::Object(doc))
        }
        ResponseGrammar::LineObjects => {
            let mut doc = Map::new();
            match &parsed.page_lengths {
                Some(lengths) => {
                    let pages = split_pages(&parsed.lines, lengths)
                        .map(|p| Value::Array(p.iter().map(line_value).collect()))
                        .collect();
                    doc.insert("pages".into(), Value::Array(pages));
                }
                None => {
                    doc.insert(
                        "lines".into(),
                        Value::Array(parsed.lines.iter().map(line_value).collect()),
                    );
                }
            }
            pretty(Value::Object(doc))
        }
        ResponseGrammar::ListOfLists => {
            let single = [parsed.lines.len()];
            let lengths = parsed.page_lengths.as_deref().unwrap_or(&single);
            let pages = split_pages(&parsed.lines, lengths)
                .map(|p| {
                    Value::Array(
                        p.iter()
                            .map(|l| Value::String(l.translation.clone()))
                            .collect(),
                    )
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("pages".into(), Value::Array(pages));
            pretty(Value::Object(doc))
        }
    }
}

fn split_pages<'a>(
    lines: &'a [ParsedLine],
    lengths: &'a [usize],
) -> impl Iterator<Item = &'a [ParsedLine]> + 'a {
    let mut start = 0;
    lengths.iter().map(move |&n| {
        let end = (start + n).min(lines.len());
        let s = &lines[start.min(end)..end];
        start = end;
        s
    })
}

fn line_value(line: &ParsedLine) -> Value {
    let mut obj = Map::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            obj.insert(k.into(), Value::String(v.clone()));
        }
    };
    put("line", &line.source);
    put("speaker", &line.speaker);
    put("situation", &line.situation);
    put("translation", &Some(line.translation.clone()));
    put("reasoning", &line.reasoning);
    put("explanation", &line.explanation);
    Value::Object(obj)
}

fn pretty(v: Value) -> String {
    serde_json::to_string_pretty(&v).expect("JSON values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_bracket() {
        let p = parse_response("[Good morning]", Approach::Lbl, 1).unwrap();
        assert_eq!(p.translations(), ["Good morning"]);
    }

    #[test]
    fn brackets_with_explanations() {
        let p = parse_response(
            "[Hi](She waves in the panel)\n[Bye](He leaves)",
            Approach::PbpVis,
            2,
        )
        .unwrap();
        assert_eq!(p.translations(), ["Hi", "Bye"]);
        assert_eq!(
            p.lines[0].explanation.as_deref(),
            Some("She waves in the panel")
        );
        assert_eq!(p.lines[1].explanation.as_deref(), Some("He leaves"));
    }

    #[test]
    fn prose_and_nesting_around_brackets() {
        let raw = "Sure! Translation 1: [He said [sic] \"no\"] (the sign (left) matters).\nTranslation 2: [Run!]";
        let p = parse_response(raw, Approach::PbpVisNum, 2).unwrap();
        assert_eq!(p.translations(), ["He said [sic] \"no\"", "Run!"]);
        assert_eq!(
            p.lines[0].explanation.as_deref(),
            Some("the sign (left) matters")
        );
        assert_eq!(p.lines[1].explanation, None);
    }

    #[test]
    fn bracket_count_mismatch() {
        assert_eq!(
            parse_response("[a][b]", Approach::Pbp, 3),
            Err(ParseError::Count {
                got: 2,
                expected: 3
            })
        );
        assert!(matches!(
            parse_response("[a", Approach::Pbp, 1),
            Err(ParseError::Format(_))
        ));
        assert!(matches!(
            parse_response("   ", Approach::Pbp, 1),
            Err(ParseError::Format(_))
        ));
    }

    #[test]
    fn list_of_lists_pages() {
        let doc = r#"{"pages": [["a"],["b","c"]]}"#;
        let p = parse_response(doc, Approach::VbvVis, 3).unwrap();
        assert_eq!(p.page_lengths, Some(vec![1, 2]));
        assert_eq!(p.page(1).unwrap().len(), 2);
        assert!(p.expect_pages(&[1, 2]).is_ok());
        assert!(p.expect_pages(&[2, 1]).is_err());
        assert_eq!(
            parse_response(doc, Approach::VbvVis, 4),
            Err(ParseError::Count {
                got: 3,
                expected: 4
            })
        );
    }

    #[test]
    fn cod_document_accepts_either_key() {
        let doc = "```json\n{\"story_jp\": \"s\", \"story_en\": \"t\", \"lines\": [\
            {\"line\": \"a\", \"speaker\": \"x\", \"situation\": \"y\", \"translation\": \"A\", \"explanation\": \"e\"},\
            {\"line\": \"b\", \"translation\": \"B\", \"reasoning\": \"r\"}]}\n```";
        let p = parse_response(doc, Approach::VbpVisCod, 2).unwrap();
        assert_eq!(p.story_target.as_deref(), Some("t"));
        assert_eq!(p.lines[0].explanation.as_deref(), Some("e"));
        assert_eq!(p.lines[1].reasoning.as_deref(), Some("r"));
        let missing = "{\"story_jp\": \"s\", \"lines\": []}";
        assert!(matches!(
            parse_response(missing, Approach::VbpVisCod, 0),
            Err(ParseError::Format(_))
        ));
    }

    #[test]
    fn line_objects_both_shapes() {
        let pages = r#"{"pages": [[{"line": "a", "translation": "A", "reasoning": "r"}], []]}"#;
        let p = parse_response(pages, Approach::VbpVis3p, 1).unwrap();
        assert_eq!(p.page_lengths, Some(vec![1, 0]));
        let lines = r#"{"lines": [{"translation": "A"}, {"translation": "B"}]}"#;
        let p = parse_response(lines, Approach::VbpVisAll, 2).unwrap();
        assert_eq!(p.page_lengths, None);
        let bad = r#"{"lines": [{"translation": 3}]}"#;
        assert!(matches!(
            parse_response(bad, Approach::VbpVisAll, 1),
            Err(ParseError::Format(_))
        ));
    }

    #[test]
    fn render_round_trip() {
        let parsed = ParsedTranslation {
            lines: vec![
                ParsedLine {
                    source: Some("あ".into()),
                    reasoning: Some("r".into()),
                    ..ParsedLine::new("A")
                },
                ParsedLine::new("B \"quoted\" {brace}"),
            ],
            page_lengths: Some(vec![2]),
            ..ParsedTranslation::default()
        };
        let raw = render_response(ResponseGrammar::LineObjects, &parsed);
        assert_eq!(
            parse_with_grammar(&raw, ResponseGrammar::LineObjects, 2).unwrap(),
            parsed
        );
    }
}
