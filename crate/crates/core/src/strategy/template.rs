//! Minimal text templates with named placeholders.
//!
//! `{name}` substitutes a value verbatim, `{name:json}` substitutes it
//! escaped for use inside a JSON string literal, and `{{` / `}}` produce
//! literal braces.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("stray '}}' at byte {0}")]
    StrayBrace(usize),
    #[error("invalid placeholder '{0}'")]
    InvalidPlaceholder(String),
    #[error("no value for placeholder '{0}'")]
    MissingValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Value { name: String, json: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut chars = src.char_indices().peekable();
        while let Some((pos, c)) = chars.next() {
            match c {
                '{' if chars.peek().map(|&(_, n)| n) == Some('{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek().map(|&(_, n)| n) == Some('}') => {
                    chars.next();
                    text.push('}');
                }
                '}' => return Err(TemplateError::StrayBrace(pos)),
                '{' => {
                    let mut body = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '}')) => break,
                            Some((_, ch)) => body.push(ch),
                            None => return Err(TemplateError::Unterminated(pos)),
                        }
                    }
                    let (name, json) = match body.split_once(':') {
                        Some((n, "json")) => (n, true),
                        Some(_) => return Err(TemplateError::InvalidPlaceholder(body)),
                        None => (body.as_str(), false),
                    };
                    if name.is_empty()
                        || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    {
                        return Err(TemplateError::InvalidPlaceholder(body.clone()));
                    }
                    if !text.is_empty() {
                        segments.push(Segment::Text(core::mem::take(&mut text)));
                    }
                    segments.push(Segment::Value {
                        name: name.into(),
                        json,
                    });
                }
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Self { segments })
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.segments {
            if let Segment::Value { name, .. } = s {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }

    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Value { name, json } => {
                    let v = values
                        .get(name.as_str())
                        .ok_or_else(|| TemplateError::MissingValue(name.clone()))?;
                    if *json {
                        let quoted = serde_json::to_string(v).expect("strings serialize");
                        out.push_str(&quoted[1..quoted.len() - 1]);
                    } else {
                        out.push_str(v);
                    }
                }
            }
        }
        Ok(out)
    }
}
