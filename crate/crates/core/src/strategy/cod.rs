//! Chain-of-density rolling summary carried across sequential pages.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::examples::language_name;
use super::parse::ParseError;
use super::request::{PromptTemplates, RequestError};
use crate::gateway::{LlmRequest, RequestSettings};

pub const DEFAULT_LMAX: u32 = 150;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingSummary {
    pub text: String,
    /// Word budget passed to the refinement prompt.
    pub lmax: u32,
    /// Position of the next page whose translation the summary lacks.
    pub page_cursor: usize,
}

impl RollingSummary {
    pub fn new(lmax: u32) -> Self {
        Self {
            text: String::new(),
            lmax,
            page_cursor: 0,
        }
    }

    /// Replaces the text after page `page_pos` was folded in.
    pub fn advance(&mut self, text: String, page_pos: usize) {
        self.text = text;
        self.page_cursor = self.page_cursor.max(page_pos + 1);
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// Refinement request folding `observation`, the target-language story of
/// the page just translated, into the summary.
pub fn cod_refine_request(
    templates: &PromptTemplates,
    settings: &RequestSettings,
    summary: &RollingSummary,
    observation: &str,
    target_lang: &str,
    lmax: u32,
) -> Result<LlmRequest, RequestError> {
    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    v.insert("prev_context", summary.text.clone());
    v.insert("observation", String::from(observation));
    v.insert("lang", String::from(language_name(target_lang)));
    v.insert("lmax", format!("{lmax}"));
    let prompt = templates.render("cod_refine", &v)?;
    Ok(LlmRequest::user(settings, prompt, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenserSummary {
    #[serde(rename = "Informative_Entities")]
    pub informative_entities: Value,
    #[serde(rename = "Denser_Summary")]
    pub denser_summary: String,
}

/// The densest (third) summary of a refinement response.
pub fn cod_apply(raw: &str) -> Result<String, ParseError> {
    let mut all = cod_summaries(raw)?;
    Ok(all.swap_remove(2).denser_summary)
}

/// All three summaries of a refinement response.
pub fn cod_summaries(raw: &str) -> Result<Vec<DenserSummary>, ParseError> {
    let (Some(start), Some(end)) = (raw.find('{'), raw.rfind('}')) else {
        return Err(ParseError::Format(
            "no JSON object in refinement response".into(),
        ));
    };
    if end < start {
        return Err(ParseError::Format(
            "no JSON object in refinement response".into(),
        ));
    }
    let doc: Map<String, Value> = serde_json::from_str(&raw[start..=end])
        .map_err(|e| ParseError::Format(format!("invalid refinement JSON: {e}")))?;
    let list = doc
        .get("summaries")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::Format("missing list \"summaries\"".into()))?;
    if list.len() != 3 {
        return Err(ParseError::Format(format!(
            "expected 3 summaries, found {}",
            list.len()
        )));
    }
    list.iter()
        .map(|s| {
            serde_json::from_value::<DenserSummary>(s.clone())
                .map_err(|e| ParseError::Format(format!("summary entry: {e}")))
        })
        .collect()
}

/// Refinement response holding `summaries`, as a well-behaved model would
/// answer.
pub fn render_cod_response(summaries: &[DenserSummary]) -> String {
    let mut doc = Map::new();
    doc.insert(
        "summaries".into(),
        serde_json::to_value(summaries).expect("summaries serialize"),
    );
    serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize")
}
