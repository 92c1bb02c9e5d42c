use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The nine translation approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Approach {
    #[serde(rename = "LBL")]
    Lbl,
    #[serde(rename = "PBP")]
    Pbp,
    #[serde(rename = "LBL_VIS")]
    LblVis,
    #[serde(rename = "PBP_VIS")]
    PbpVis,
    #[serde(rename = "PBP_VIS_NUM")]
    PbpVisNum,
    #[serde(rename = "VBP_VIS_COD")]
    VbpVisCod,
    #[serde(rename = "VBP_VIS_3P")]
    VbpVis3p,
    #[serde(rename = "VBP_VIS_ALL")]
    VbpVisAll,
    #[serde(rename = "VBV_VIS")]
    VbvVis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Line,
    Page,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextualContext {
    Line,
    Page,
    PagePlusSummary,
    ThreePages,
    VolumePlusTranslations,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisualContext {
    None,
    Page,
    NumberedPage,
    ThreePages,
    Volume,
}

/// Translation unit, textual context and visual context of an approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproachRow {
    pub unit: UnitKind,
    pub textual: TextualContext,
    pub visual: VisualContext,
}

/// How a response is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseGrammar {
    /// `[translation]` per line.
    Bracketed,
    /// `[translation](explanation)` per line.
    BracketedExplained,
    /// `{"story_jp", "story_en", "lines": [...]}`.
    CodDocument,
    /// `{"pages": [[{line, translation, reasoning}]]}` or `{"lines": [...]}`.
    LineObjects,
    /// `{"pages": [["t1"], ["t2", "t3"]]}`.
    ListOfLists,
}

impl Approach {
    pub const ALL: [Approach; 9] = [
        Approach::Lbl,
        Approach::Pbp,
        Approach::LblVis,
        Approach::PbpVis,
        Approach::PbpVisNum,
        Approach::VbpVisCod,
        Approach::VbpVis3p,
        Approach::VbpVisAll,
        Approach::VbvVis,
    ];

    pub fn row(&self) -> ApproachRow {
        use TextualContext as T;
        use UnitKind as U;
        use VisualContext as V;
        let (unit, textual, visual) = match self {
            Approach::Lbl => (U::Line, T::Line, V::None),
            Approach::Pbp => (U::Page, T::Page, V::None),
            Approach::LblVis => (U::Line, T::Line, V::Page),
            Approach::PbpVis => (U::Page, T::Page, V::Page),
            Approach::PbpVisNum => (U::Page, T::Page, V::NumberedPage),
            Approach::VbpVisCod => (U::Page, T::PagePlusSummary, V::Page),
            Approach::VbpVis3p => (U::Page, T::ThreePages, V::ThreePages),
            Approach::VbpVisAll => (U::Page, T::VolumePlusTranslations, V::Volume),
            Approach::VbvVis => (U::Volume, T::Volume, V::Volume),
        };
        ApproachRow {
            unit,
            textual,
            visual,
        }
    }

    /// Identifier used in files and on the command line, e.g. `PBP_VIS`.
    pub fn key(&self) -> &'static str {
        match self {
            Approach::Lbl => "LBL",
            Approach::Pbp => "PBP",
            Approach::LblVis => "LBL_VIS",
            Approach::PbpVis => "PBP_VIS",
            Approach::PbpVisNum => "PBP_VIS_NUM",
            Approach::VbpVisCod => "VBP_VIS_COD",
            Approach::VbpVis3p => "VBP_VIS_3P",
            Approach::VbpVisAll => "VBP_VIS_ALL",
            Approach::VbvVis => "VBV_VIS",
        }
    }

    /// Display name, e.g. `PBP-VIS`.
    pub fn label(&self) -> &'static str {
        match self {
            Approach::Lbl => "LBL",
            Approach::Pbp => "PBP",
            Approach::LblVis => "LBL-VIS",
            Approach::PbpVis => "PBP-VIS",
            Approach::PbpVisNum => "PBP-VIS-NUM",
            Approach::VbpVisCod => "VBP-VIS-COD",
            Approach::VbpVis3p => "VBP-VIS-3P",
            Approach::VbpVisAll => "VBP-VIS-ALL",
            Approach::VbvVis => "VBV-VIS",
        }
    }

    /// Name of the prompt template resource.
    pub fn template_name(&self) -> &'static str {
        match self {
            Approach::Lbl => "lbl",
            Approach::Pbp => "pbp",
            Approach::LblVis => "lbl_vis",
            Approach::PbpVis => "pbp_vis",
            Approach::PbpVisNum => "pbp_vis_num",
            Approach::VbpVisCod => "vbp_vis_cod",
            Approach::VbpVis3p => "vbp_vis_3p",
            Approach::VbpVisAll => "vbp_vis_all",
            Approach::VbvVis => "vbv_vis",
        }
    }

    pub fn grammar(&self) -> ResponseGrammar {
        match self {
            Approach::Lbl | Approach::Pbp => ResponseGrammar::Bracketed,
            Approach::LblVis | Approach::PbpVis | Approach::PbpVisNum => {
                ResponseGrammar::BracketedExplained
            }
            Approach::VbpVisCod => ResponseGrammar::CodDocument,
            Approach::VbpVis3p | Approach::VbpVisAll => ResponseGrammar::LineObjects,
            Approach::VbvVis => ResponseGrammar::ListOfLists,
        }
    }

    /// Page requests that depend on earlier results must run in order.
    pub fn is_sequential(&self) -> bool {
        matches!(
            self,
            Approach::VbpVisCod | Approach::VbpVis3p | Approach::VbpVisAll | Approach::VbvVis
        )
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown approach '{0}'")]
pub struct UnknownApproach(pub alloc::string::String);

impl FromStr for Approach {
    type Err = UnknownApproach;

    /// Accepts `PBP_VIS`, `PBP-VIS` or `pbp-vis`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: alloc::string::String = s
            .trim()
            .chars()
            .map(|c| {
                if c == '-' {
                    '_'
                } else {
                    c.to_ascii_uppercase()
                }
            })
            .collect();
        Approach::ALL
            .into_iter()
            .find(|a| a.key() == norm)
            .ok_or_else(|| UnknownApproach(s.into()))
    }
}
