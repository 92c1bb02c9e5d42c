//! MQM error taxonomy, annotation sets and the weighted score.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Minor,
    Major,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Minor, Severity::Major, Severity::Critical];

    pub fn weight(&self) -> f64 {
        match self {
            Severity::Minor => 5.0,
            Severity::Major => 10.0,
            Severity::Critical => 25.0,
        }
    }
}

/// Leaf of the issue taxonomy, written as `category/issue`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueType {
    FluencyPunctuation,
    FluencyOrthography,
    FluencyGrammar,
    AccuracyAdditionOmission,
    AccuracyMistranslation,
    AccuracyUntranslated,
    TerminologyOrthography,
    TerminologyNotRecognized,
    StyleFormality,
    StyleAwkward,
    StyleBoring,
    StyleTone,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaxonomyNode {
    pub id: &'static str,
    pub label: &'static str,
    pub children: &'static [TaxonomyLeaf],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaxonomyLeaf {
    /// Full path, the value of `issue_type` in annotation files.
    pub id: &'static str,
    pub label: &'static str,
}

const fn leaf(id: &'static str, label: &'static str) -> TaxonomyLeaf {
    TaxonomyLeaf { id, label }
}

pub const TAXONOMY: [TaxonomyNode; 5] = [
    TaxonomyNode {
        id: "fluency",
        label: "Fluency",
        children: &[
            leaf("fluency/punctuation", "Punctuation"),
            leaf("fluency/orthography", "Orthography"),
            leaf("fluency/grammar", "Grammar"),
        ],
    },
    TaxonomyNode {
        id: "accuracy",
        label: "Accuracy",
        children: &[
            leaf("accuracy/addition_omission", "Addition/Omission"),
            leaf("accuracy/mistranslation", "Mistranslation"),
            leaf("accuracy/untranslated", "Untranslated"),
        ],
    },
    TaxonomyNode {
        id: "proper_nouns_terminology",
        label: "Proper Nouns/Terminology",
        children: &[
            leaf("proper_nouns_terminology/orthography", "Orthography"),
            leaf("proper_nouns_terminology/not_recognized", "Not recognized"),
        ],
    },
    TaxonomyNode {
        id: "style",
        label: "Style",
        children: &[
            leaf("style/formality", "Formality"),
            leaf("style/awkward", "Awkward"),
            leaf("style/boring", "Boring"),
            leaf("style/tone", "Tone"),
        ],
    },
    TaxonomyNode {
        id: "other",
        label: "Other",
        children: &[leaf("other", "Other")],
    },
];

impl IssueType {
    pub const ALL: [IssueType; 13] = [
        IssueType::FluencyPunctuation,
        IssueType::FluencyOrthography,
        IssueType::FluencyGrammar,
        IssueType::AccuracyAdditionOmission,
        IssueType::AccuracyMistranslation,
        IssueType::AccuracyUntranslated,
        IssueType::TerminologyOrthography,
        IssueType::TerminologyNotRecognized,
        IssueType::StyleFormality,
        IssueType::StyleAwkward,
        IssueType::StyleBoring,
        IssueType::StyleTone,
        IssueType::Other,
    ];

    pub fn path(&self) -> &'static str {
        match self {
            IssueType::FluencyPunctuation => "fluency/punctuation",
            IssueType::FluencyOrthography => "fluency/orthography",
            IssueType::FluencyGrammar => "fluency/grammar",
            IssueType::AccuracyAdditionOmission => "accuracy/addition_omission",
            IssueType::AccuracyMistranslation => "accuracy/mistranslation",
            IssueType::AccuracyUntranslated => "accuracy/untranslated",
            IssueType::TerminologyOrthography => "proper_nouns_terminology/orthography",
            IssueType::TerminologyNotRecognized => "proper_nouns_terminology/not_recognized",
            IssueType::StyleFormality => "style/formality",
            IssueType::StyleAwkward => "style/awkward",
            IssueType::StyleBoring => "style/boring",
            IssueType::StyleTone => "style/tone",
            IssueType::Other => "other",
        }
    }
}

impl fmt::Display for IssueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

impl FromStr for IssueType {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IssueType::ALL
            .into_iter()
            .find(|t| t.path() == s)
            .ok_or_else(|| {
                MetricError::Schema(alloc::format!("'{s}' is not a leaf of the issue taxonomy"))
            })
    }
}

impl Serialize for IssueType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.path())
    }
}

impl<'de> Deserialize<'de> for IssueType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmAnnotation {
    pub line_id: String,
    pub issue_type: IssueType,
    pub severity: Severity,
    /// Character range `[start, end)` within the hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityCounts {
    pub minor: u64,
    pub major: u64,
    pub critical: u64,
}

impl SeverityCounts {
    pub fn tally(annotations: &[MqmAnnotation]) -> Self {
        let mut c = Self::default();
        for a in annotations {
            match a.severity {
                Severity::Minor => c.minor += 1,
                Severity::Major => c.major += 1,
                Severity::Critical => c.critical += 1,
            }
        }
        c
    }
}

/// Annotations of one system's translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmAnnotationSet {
    pub system: String,
    /// Words in the evaluated translation.
    pub word_count: u64,
    #[serde(default)]
    pub annotations: Vec<MqmAnnotation>,
    /// Severity tallies; when present they must match `annotations`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<SeverityCounts>,
}

impl MqmAnnotationSet {
    pub fn counts(&self) -> SeverityCounts {
        SeverityCounts::tally(&self.annotations)
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.word_count == 0 {
            return Err(MetricError::Degenerate("word count is zero"));
        }
        if let Some(c) = self.counts {
            if c != self.counts() {
                return Err(MetricError::Schema(alloc::format!(
                    "stated counts {c:?} differ from the annotations' tallies {:?}",
                    self.counts()
                )));
            }
        }
        for a in &self.annotations {
            if let Some([s, e]) = a.span {
                if s > e {
                    return Err(MetricError::Schema(alloc::format!(
                        "span [{s}, {e}) on line '{}' is reversed",
                        a.line_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `1 - (5 minor + 10 major + 25 critical) / word_count`.
pub fn mqm_score_counts(counts: SeverityCounts, word_count: u64) -> Result<f64, MetricError> {
    if word_count == 0 {
        return Err(MetricError::Degenerate("word count is zero"));
    }
    let penalty = Severity::Minor.weight() * counts.minor as f64
        + Severity::Major.weight() * counts.major as f64
        + Severity::Critical.weight() * counts.critical as f64;
    Ok(1.0 - penalty / word_count as f64)
}

pub fn mqm_score(set: &MqmAnnotationSet) -> Result<f64, MetricError> {
    set.validate()?;
    mqm_score_counts(set.counts(), set.word_count)
}

/// Whitespace-delimited tokens.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
