use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// One-shot example material substituted into the prompt templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSet {
    /// Target language code the examples are written in.
    pub language: String,
    pub jp_example: String,
    pub lang_example: String,
    pub img_explanation_example: String,
    pub jp_story: String,
    pub lang_story: String,
    pub lang_speaker: String,
    pub lang_situation: String,
    pub lang_explanation: String,
    pub lang_reasoning: String,
    pub jp_example2: String,
    pub lang_example2: String,
    pub lang_reasoning2: String,
    pub jp_example3: String,
    pub lang_example3: String,
}

const EN: &str = include_str!("../../resources/examples/en.json");
const PL: &str = include_str!("../../resources/examples/pl.json");

impl ExampleSet {
    /// Bundled example set for `lang`, if one ships.
    pub fn builtin(lang: &str) -> Option<Self> {
        let src = match lang {
            "en" => EN,
            "pl" => PL,
            _ => return None,
        };
        Some(serde_json::from_str(src).expect("bundled example sets are valid"))
    }

    pub fn from_json(src: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(src)
    }

    pub(crate) fn insert_into(&self, v: &mut BTreeMap<&'static str, String>) {
        let fields: [(&'static str, &String); 13] = [
            ("jp_example", &self.jp_example),
            ("lang_example", &self.lang_example),
            ("img_explanation_example", &self.img_explanation_example),
            ("jp_story", &self.jp_story),
            ("lang_story", &self.lang_story),
            ("lang_speaker", &self.lang_speaker),
            ("lang_situation", &self.lang_situation),
            ("lang_explanation", &self.lang_explanation),
            ("lang_reasoning", &self.lang_reasoning),
            ("jp_example2", &self.jp_example2),
            ("lang_example2", &self.lang_example2),
            ("lang_reasoning2", &self.lang_reasoning2),
            ("jp_example3", &self.jp_example3),
        ];
        for (k, val) in fields {
            v.insert(k, val.clone());
        }
        v.insert("lang_example3", self.lang_example3.clone());
    }
}

/// English name of a language code, used inside prompts.
pub fn language_name(code: &str) -> &str {
    match code {
        "en" => "English",
        "pl" => "Polish",
        "ja" => "Japanese",
        "zh" => "Chinese",
        "ko" => "Korean",
        "de" => "German",
        "fr" => "French",
        "es" => "Spanish",
        "it" => "Italian",
        "pt" => "Portuguese",
        "ru" => "Russian",
        "uk" => "Ukrainian",
        "cs" => "Czech",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sets_load() {
        let en = ExampleSet::builtin("en").unwrap();
        assert_eq!(en.language, "en");
        let pl = ExampleSet::builtin("pl").unwrap();
        assert_eq!(pl.jp_example, en.jp_example);
        assert_ne!(pl.lang_example, en.lang_example);
        assert!(ExampleSet::builtin("xx").is_none());
    }

    #[test]
    fn names() {
        assert_eq!(language_name("pl"), "Polish");
        assert_eq!(language_name("tlh"), "tlh");
    }
}
